//! Monte Carlo evaluation of the estimators against the asymptotic limits.

mod experiment;
mod metrics;
mod oracle;

pub use experiment::{
    run_experiment, trial_seed, write_mmse_csv, write_results_csv, write_trace_csv, write_trials_csv, AggregateRow,
    AlgorithmConfig, ExperimentConfig, ExperimentOutput, GroupScore, Metric, MmseRow, ModelTemplate, RunOptions,
    Sweep, SweepValue, TraceRecord, TraceRow, TrialResult,
};
pub use metrics::{diag_mse_direct, diag_mse_scaled, mean_stderr, overlap, scaled_terms, ScaledMseAccumulator};
pub use oracle::{exact_posterior_oracle, PosteriorOracle, ORACLE_MAX_STATES};
