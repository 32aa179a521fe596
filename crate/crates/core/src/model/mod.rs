//! Finite-size instances of the groupwise spiked model.

mod dump;
mod instance;
mod presets;
mod sym;

pub use dump::{read_binary, read_csv, write_binary, write_csv};
pub use instance::{group_sizes, sample_instance, InstanceSpec, ObservationView, Observations, MEMORY_BUDGET_BYTES};
pub use presets::{make_csbm, make_hetero_pca, make_three_group, make_two_group, parse_support};
pub use sym::{symmetrize, SymObservations};
