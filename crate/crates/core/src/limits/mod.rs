//! Asymptotic limits of the groupwise spiked model.

mod decoupled;
mod mmse;
mod saddle;
mod spec;
mod wpca;

pub use decoupled::{limit_value_decoupled_wigner, limit_value_decoupled_wishart};
pub use mmse::{immse_check, mmse_from_saddle, Component, MmseResult};
pub use saddle::{objective, solve_limit, stationarity_residuals, SaddlePoint, SolverOptions, StationaryPoint};
pub use spec::ProblemSpec;
pub use wpca::{wpca_analyze, wpca_objective, wpca_root_function, WpcaAnalysis};
