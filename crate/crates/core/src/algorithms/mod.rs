//! Estimators for the groupwise spiked model.

mod amp;
mod bp;
mod eigen;
mod gd;
mod operator;
mod pca;

pub use amp::{amp_general, amp_groupwise, AmpConfig, AmpGeneralOutput, AmpOutput, AmpState, AmpTraceRow};
pub use bp::{relaxed_bp, BpOutput, BP_MAX_NODES};
pub use eigen::{
    dense_largest, gershgorin_bound, lanczos_largest, power_iteration, power_iteration_dense, EigenOptions, EigenPair,
};
pub use gd::{gradient_descent, scaled_init, GdConfig, GdOutput, GdTraceRow, StepSchedule};
pub use operator::ScaledOperator;
pub use pca::{
    joint_pca, weight_grid_search, weighted_pca, EstimateSet, GridSearchResult, Normalization, WeightGrid,
    WeightedPcaTerms,
};
