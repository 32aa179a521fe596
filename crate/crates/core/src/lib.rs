//! Asymptotic MMSE limits and estimators for the groupwise heteroskedastic
//! spiked matrix model
//!
//! ```text
//! Y_kℓ = √(λ_kℓ / N) x_k x_ℓᵀ + W_kℓ,      Y_k = √r_k x_k + W_k.
//! ```
//!
//! [`limits`] solves the variational formula for the limiting relative
//! entropy and reads off the MMSE; [`model`] samples finite instances;
//! [`algorithms`] holds joint and weighted PCA, gradient descent and AMP;
//! [`eval`] is the Monte Carlo harness that compares them.

pub mod algorithms;
pub mod cli;
pub mod error;
pub mod eval;
pub mod limits;
pub mod model;
pub mod priors;
pub mod quadrature;

pub use error::{Error, Result};
pub use limits::{solve_limit, ProblemSpec, SaddlePoint, SolverOptions};
pub use priors::Prior;
