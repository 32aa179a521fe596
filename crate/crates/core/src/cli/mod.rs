//! Command-line front end.
//!
//! Every command reads one JSON document (`--config`) or, for `experiment`,
//! a built-in preset (`--preset`), and writes its outputs plus a
//! `manifest.json` into `--out`.

mod presets;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    run_experiment, write_mmse_csv, write_results_csv, write_trace_csv, write_trials_csv, ExperimentConfig,
    ModelTemplate, MmseRow, RunOptions, Sweep, SweepValue,
};
use crate::limits::{
    mmse_from_saddle, solve_limit, wpca_analyze, ProblemSpec, SaddlePoint, SolverOptions, WpcaAnalysis,
};
use crate::model::{make_hetero_pca, sample_instance, write_binary, write_csv, InstanceSpec};

pub use presets::{distinct_supports, linspace, preset, PRESET_NAMES};

#[derive(Debug, Parser)]
#[command(name = "spikeblock", version, about = "MMSE limits and estimators for groupwise spiked matrix models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the limit formula over a sweep and write MMSE curves.
    Limits(CommonArgs),
    /// Analyze a heteroskedastic PCA instance.
    Wpca(CommonArgs),
    /// Run a Monte Carlo experiment.
    Experiment(CommonArgs),
    /// Sample one instance and dump it.
    Sample(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in experiment configuration.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Override the base seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Write AMP and gradient-descent trajectories.
    #[arg(long)]
    pub trace: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Suppress the summary on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

/// Configuration of `limits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub model: ModelTemplate,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub series: Option<Sweep>,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// Configuration of `wpca`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WpcaConfig {
    pub beta0: f64,
    pub betas: Vec<f64>,
    /// Noise standard deviations `σ_ℓ`.
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DumpFormat {
    Csv,
    Binary,
}

fn yes() -> bool {
    true
}

fn binary() -> DumpFormat {
    DumpFormat::Binary
}

/// Configuration of `sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub model: ModelTemplate,
    /// Average group size: `N = n·K`.
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "binary")]
    pub format: DumpFormat,
    #[serde(default = "yes")]
    pub with_truth: bool,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    seed_rule: &'a str,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

const SEED_RULE: &str =
    "instance seed = base_seed ^ splitmix64(series_key ^ splitmix64(point_key ^ splitmix64(trial))); key = f64 bits or FNV-1a of label";

/// Parse a JSON document, reporting the path of the offending field.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn load<T: DeserializeOwned>(args: &CommonArgs) -> Result<T> {
    if args.preset.is_some() {
        return Err(Error::Usage("--preset is only available for `experiment`".into()));
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::Usage("--config PATH is required".into()))?;
    read_config(path)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(format!("cannot serialize: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_manifest<C: Serialize>(dir: &Path, command: &str, config: &C, outputs: &[PathBuf], warnings: Vec<String>) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        seed_rule: SEED_RULE,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect(),
        warnings,
    };
    write_json(&manifest, &dir.join("manifest.json"))
}

fn print_config<C: Serialize>(config: &C) -> Result<()> {
    let text = serde_json::to_string_pretty(config).map_err(|e| Error::Numeric(format!("cannot serialize: {e}")))?;
    println!("{text}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct SaddleReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_value: Option<String>,
    #[serde(flatten)]
    saddle: SaddlePoint,
}

fn limit_points(cfg: &LimitsConfig) -> Result<Vec<(Option<SweepValue>, Option<SweepValue>, ProblemSpec)>> {
    let series: Vec<Option<SweepValue>> = match &cfg.series {
        Some(s) => s.points().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let sweep: Vec<Option<SweepValue>> = match &cfg.sweep {
        Some(s) => s.points().into_iter().map(Some).collect(),
        None => vec![None],
    };
    if sweep.is_empty() || series.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut out = Vec::new();
    for s in &series {
        for p in &sweep {
            let mut settings = Vec::new();
            if let (Some(sw), Some(v)) = (&cfg.series, s) {
                settings.push((sw.variable(), v));
            }
            if let (Some(sw), Some(v)) = (&cfg.sweep, p) {
                settings.push((sw.variable(), v));
            }
            out.push((s.clone(), p.clone(), cfg.model.build(&settings)?));
        }
    }
    Ok(out)
}

fn cmd_limits(args: &CommonArgs) -> Result<()> {
    let cfg: LimitsConfig = load(args)?;
    if args.print_config {
        return print_config(&cfg);
    }
    let points = limit_points(&cfg)?;
    fs::create_dir_all(&args.out)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for (s, p, spec) in points {
        let saddle = solve_limit(&spec, &cfg.solver)?;
        let m = mmse_from_saddle(&saddle, &spec)?;
        let label = p.as_ref().map_or_else(String::new, |v| v.to_string());
        let series = s.as_ref().map(|v| v.to_string());
        if !saddle.unique {
            warnings.push(format!(
                "maximizer is not unique at {}{label}; MMSE values there are bounds only",
                series.as_ref().map_or_else(String::new, |s| format!("series {s}, "))
            ));
        }
        let k = spec.groups();
        for a in 0..k {
            rows.push(MmseRow {
                series: series.clone(),
                sweep_value: label.clone(),
                group_or_block: format!("{}", a + 1),
                mmse: m.vector_mmse[a],
                unique_flag: !m.vector_bound_only[a],
            });
        }
        for a in 0..k {
            for b in a..k {
                rows.push(MmseRow {
                    series: series.clone(),
                    sweep_value: label.clone(),
                    group_or_block: format!("{},{}", a + 1, b + 1),
                    mmse: m.block_mmse[[a, b]],
                    unique_flag: !m.is_bound_only(a, b),
                });
            }
        }
        reports.push(SaddleReport {
            series,
            sweep_value: p.map(|v| v.to_string()),
            saddle,
        });
    }
    let mut outputs = write_per_series(&args.out, "mmse", cfg.series.as_ref(), &rows, |r| r.series.clone(), |rs, path| {
        write_mmse_csv(rs.iter().copied(), path)
    })?;
    let saddle_path = args.out.join("saddle.json");
    if reports.len() == 1 && cfg.sweep.is_none() && cfg.series.is_none() {
        write_json(&reports[0], &saddle_path)?;
    } else {
        write_json(&reports, &saddle_path)?;
    }
    outputs.push(saddle_path);
    if !warnings.is_empty() && !args.quiet {
        eprintln!("warning: non-unique maximizers found");
        for w in &warnings {
            eprintln!("  {w}");
        }
    }
    write_manifest(&args.out, "limits", &cfg, &outputs, warnings)?;
    if !args.quiet {
        eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    }
    Ok(())
}

/// Write `rows` to `<stem>.csv`, or one `<stem>_<label>.csv` per series value.
fn write_per_series<R, K, W>(dir: &Path, stem: &str, series: Option<&Sweep>, rows: &[R], key: K, write: W) -> Result<Vec<PathBuf>>
where
    K: Fn(&R) -> Option<String>,
    W: Fn(&[&R], &Path) -> Result<()>,
{
    let mut outputs = Vec::new();
    match series {
        None => {
            let path = dir.join(format!("{stem}.csv"));
            write(&rows.iter().collect::<Vec<_>>(), &path)?;
            outputs.push(path);
        }
        Some(s) => {
            for v in s.points() {
                let label = v.to_string();
                let subset: Vec<&R> = rows.iter().filter(|r| key(r).as_deref() == Some(label.as_str())).collect();
                let path = dir.join(format!("{stem}_{}.csv", v.slug()));
                write(&subset, &path)?;
                outputs.push(path);
            }
        }
    }
    Ok(outputs)
}

#[derive(Debug, Serialize)]
struct WpcaReport {
    #[serde(flatten)]
    analysis: WpcaAnalysis,
    mse: f64,
    solver_q0: f64,
    solver_unique: bool,
    agreement: bool,
}

fn cmd_wpca(args: &CommonArgs) -> Result<()> {
    let cfg: WpcaConfig = load(args)?;
    if args.print_config {
        return print_config(&cfg);
    }
    let analysis = wpca_analyze(cfg.beta0, &cfg.betas, &cfg.sigmas)?;
    let spec = make_hetero_pca(cfg.beta0, &cfg.betas, &cfg.sigmas)?;
    let saddle = solve_limit(&spec, &cfg.solver)?;
    let solver_q0 = saddle.q_star[0];
    let report = WpcaReport {
        mse: analysis.mse(),
        agreement: (solver_q0 - analysis.q0).abs() <= 1e-6,
        solver_q0,
        solver_unique: saddle.unique,
        analysis,
    };
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("analysis.json");
    write_json(&report, &path)?;
    let warnings = if report.agreement {
        vec![]
    } else {
        vec![format!(
            "root q0 = {} and saddle-point q0 = {} disagree",
            report.analysis.q0, report.solver_q0
        )]
    };
    write_manifest(&args.out, "wpca", &cfg, &[path], warnings)?;
    if !args.quiet {
        eprintln!(
            "q0 = {:.6}, above threshold: {}, MSE = {:.6}, solver agreement: {}",
            report.analysis.q0, report.analysis.above_threshold, report.mse, report.agreement
        );
    }
    Ok(())
}

/// Resolve the experiment configuration from `--preset` or `--config`, applying `--seed`.
pub fn experiment_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(_), Some(_)) => return Err(Error::Usage("use either --preset or --config, not both".into())),
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => read_config(path)?,
        (None, None) => return Err(Error::Usage("--config PATH or --preset NAME is required".into())),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_experiment(args: &CommonArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    if args.print_config {
        return print_config(&cfg);
    }
    let mut opts = RunOptions {
        trace: args.trace,
        ..RunOptions::default()
    };
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Error::Usage("--workers must be at least 1".into()));
        }
        opts.workers = w;
    }
    let out = run_experiment(&cfg, &opts)?;
    fs::create_dir_all(&args.out)?;
    let series = cfg.series.as_ref();
    let mut outputs = write_per_series(&args.out, "mmse", series, &out.mmse, |r| r.series.clone(), |rs, p| {
        write_mmse_csv(rs.iter().copied(), p)
    })?;
    if !cfg.algorithms.is_empty() {
        outputs.extend(write_per_series(&args.out, "results", series, &out.aggregates, |r| r.series.clone(), |rs, p| {
            write_results_csv(rs.iter().copied(), p)
        })?);
        let trials = args.out.join("trials.csv");
        write_trials_csv(&out.trials, &trials)?;
        outputs.push(trials);
    }
    for t in &out.traces {
        let mut name = format!("trace_{}", t.algorithm);
        if let Some(s) = &t.series {
            name.push_str(&format!("_{}", s.slug()));
        }
        name.push_str(&format!("_{}.csv", t.point.slug()));
        let path = args.out.join(name);
        write_trace_csv(&t.rows, &path)?;
        outputs.push(path);
    }
    let mut warnings = out.bound_warnings.clone();
    let nonunique = out.mmse.iter().filter(|r| !r.unique_flag).count();
    if nonunique > 0 {
        warnings.push(format!("{nonunique} MMSE entries are bounds only (non-unique maximizer)"));
    }
    let failed = out.trials.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        warnings.push(format!("{failed} of {} algorithm runs failed; see trials.csv", out.trials.len()));
    }
    write_manifest(&args.out, "experiment", &cfg, &outputs, warnings.clone())?;
    if !args.quiet {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        eprintln!(
            "{} runs, {} aggregate rows, {} MMSE rows written to {}",
            out.trials.len(),
            out.aggregates.len(),
            out.mmse.len(),
            args.out.display()
        );
    }
    Ok(())
}

fn cmd_sample(args: &CommonArgs) -> Result<()> {
    let mut cfg: SampleConfig = load(args)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.print_config {
        return print_config(&cfg);
    }
    let spec = cfg.model.build(&[])?;
    let ispec = InstanceSpec::per_group(spec, cfg.n, cfg.seed)?;
    let obs = sample_instance(&ispec)?;
    fs::create_dir_all(&args.out)?;
    let path = match cfg.format {
        DumpFormat::Csv => {
            let p = args.out.join("instance.csv");
            write_csv(&obs, &p, cfg.with_truth)?;
            p
        }
        DumpFormat::Binary => {
            let p = args.out.join("instance.bin");
            write_binary(&obs, &p, cfg.with_truth)?;
            p
        }
    };
    write_manifest(&args.out, "sample", &cfg, std::slice::from_ref(&path), vec![])?;
    if !args.quiet {
        eprintln!("sampled N = {} ({:?}) into {}", ispec.big_n, ispec.sizes, path.display());
    }
    Ok(())
}

/// Run the parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Limits(a) => cmd_limits(a),
        Command::Wpca(a) => cmd_wpca(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Sample(a) => cmd_sample(a),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
