fn main() {
    std::process::exit(spikeblock::cli::main_with_args(std::env::args_os()));
}
