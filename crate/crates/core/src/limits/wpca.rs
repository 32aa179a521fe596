//! Heteroskedastic PCA: `L` matrices `Y_ℓ` share the left factor `u` and have
//! noise level `σ_ℓ`. The Bayes-optimal overlap of `u` is the unique root of
//! a rational function and coincides with the overlap of optimally weighted PCA.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WpcaAnalysis {
    pub beta0: f64,
    pub betas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub q0: f64,
    pub above_threshold: bool,
    pub q_ell: Vec<f64>,
}

impl WpcaAnalysis {
    /// Asymptotic squared-loss of the optimally scaled estimate of `u uᵀ`.
    pub fn mse(&self) -> f64 {
        1.0 - (self.q0 / self.beta0).powi(2)
    }
}

fn validate(beta0: f64, betas: &[f64], sigmas: &[f64]) -> Result<()> {
    if betas.len() != sigmas.len() || betas.is_empty() {
        return Err(Error::Usage("betas and sigmas must be nonempty and of equal length".into()));
    }
    if !(beta0 > 0.0 && beta0.is_finite()) || betas.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::Domain("group ratios must be positive".into()));
    }
    if sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Domain("noise levels must be positive".into()));
    }
    Ok(())
}

/// `R(x) = 1 − Σ_ℓ β_ℓ (β₀ − x) / (σ_ℓ² (σ_ℓ² + x))`.
pub fn wpca_root_function(x: f64, beta0: f64, betas: &[f64], sigmas: &[f64]) -> f64 {
    1.0 - betas
        .iter()
        .zip(sigmas)
        .map(|(&b, &s)| {
            let s2 = s * s;
            b * (beta0 - x) / (s2 * (s2 + x))
        })
        .sum::<f64>()
}

pub fn wpca_analyze(beta0: f64, betas: &[f64], sigmas: &[f64]) -> Result<WpcaAnalysis> {
    validate(beta0, betas, sigmas)?;
    let signal: f64 = betas.iter().zip(sigmas).map(|(&b, &s)| beta0 * b / s.powi(4)).sum();
    let above_threshold = signal > 1.0;
    let q0 = if above_threshold {
        // R(0) = 1 − signal < 0, R(β₀) = 1 and R increases on (0, β₀)
        let (mut lo, mut hi) = (0.0, beta0);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if wpca_root_function(mid, beta0, betas, sigmas) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    } else {
        0.0
    };
    let q_ell = betas
        .iter()
        .zip(sigmas)
        .map(|(&b, &s)| b * q0 / (s * s + q0))
        .collect();
    Ok(WpcaAnalysis {
        beta0,
        betas: betas.to_vec(),
        sigmas: sigmas.to_vec(),
        q0,
        above_threshold,
        q_ell,
    })
}

/// Reduced objective `F(x)` and its derivative, maximized at the root of `R`.
pub fn wpca_objective(x: f64, beta0: f64, betas: &[f64], sigmas: &[f64]) -> Result<(f64, f64)> {
    validate(beta0, betas, sigmas)?;
    if !(0.0..beta0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} must lie in [0, {beta0})")));
    }
    let mut f = x - beta0 * (beta0 / (beta0 - x)).ln();
    let mut df = -x / (beta0 - x);
    for (&b, &s) in betas.iter().zip(sigmas) {
        let s2 = s * s;
        f += b * x / s2 - b * (x / s2).ln_1p();
        df += b * x / (s2 * (s2 + x));
    }
    Ok((f, df))
}
