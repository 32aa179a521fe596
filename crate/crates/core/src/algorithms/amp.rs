//! Approximate message passing for the symmetric groupwise model.
//!
//! One iteration, for every group `k` at once:
//!
//! ```text
//! a_k = Σ_ℓ g_kℓ Y_kℓ m_ℓ − (Σ_ℓ g_kℓ² Y_kℓ^{∘2} v_ℓ) ∘ m_k^{prev}
//! b_k = Σ_ℓ g_kℓ² (‖m_ℓ‖² + Σ v_ℓ) − Σ_ℓ g_kℓ² Y_kℓ^{∘2} v_ℓ
//! m_k, v_k = η_k(a_k, b_k), η_k'(a_k, b_k)
//! ```
//!
//! with `g_kℓ = √(λ^sym_kℓ / N)`. Side information adds `√r_k Y_k` to `a_k`
//! and `r_k` to `b_k`.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::operator::ScaledOperator;
use super::pca::{split, EstimateSet, Normalization};
use crate::error::{Error, Result};
use crate::model::SymObservations;
use crate::priors::Prior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmpConfig {
    pub max_iter: usize,
    /// Early stop when `‖m^{t+1} − m^t‖ / ‖m^t‖` falls below this.
    pub tol: f64,
    /// Weight on the previous `(m, v)`; 0 disables damping.
    pub damping: f64,
    /// Standard deviation of the random initial means.
    pub init_std: f64,
    /// Drop each coordinate's own term from the diagonal blocks.
    pub exclude_self: bool,
    pub seed: u64,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-8,
            damping: 0.0,
            init_std: 1e-3,
            exclude_self: false,
            seed: 0,
        }
    }
}

/// Per-group state after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub t: usize,
    pub m: Vec<Array1<f64>>,
    pub v: Vec<Array1<f64>>,
    pub a: Vec<Array1<f64>>,
    pub b: Vec<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmpTraceRow {
    pub t: usize,
    pub group: usize,
    /// `‖m_k‖² / n_k`, the self-overlap of the current estimate.
    pub mean_overlap: f64,
    pub mean_variance: f64,
}

#[derive(Debug, Clone)]
pub struct AmpOutput {
    pub estimate: EstimateSet,
    pub state: AmpState,
    pub iterations: usize,
    pub trace: Vec<AmpTraceRow>,
    /// Full state per iteration when requested (small problems only).
    pub trajectory: Vec<AmpState>,
}

fn initial_means(n: usize, cfg: &AmpConfig) -> Result<Vec<f64>> {
    let dist = Normal::new(0.0, cfg.init_std).map_err(|e| Error::Config(format!("init_std: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// The tilt `b` estimates a nonnegative SNR; at small sizes the Onsager term
/// can push it below zero, so it is floored at 0 before denoising.
fn denoise(
    prior: &Prior,
    a: f64,
    b: f64,
    t: usize,
    i: usize,
) -> Result<(f64, f64)> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Numeric(format!("AMP state is not finite at iteration {t}, coordinate {i}")));
    }
    let b = b.max(0.0);
    let (m, v) = prior.posterior_moments(a, b).map_err(|e| match e {
        Error::Domain(msg) => Error::Numeric(format!("iteration {t}, coordinate {i}: {msg}")),
        other => other,
    })?;
    if v < -1e-12 {
        return Err(Error::Invariant(format!("negative posterior variance {v} at iteration {t}")));
    }
    Ok((m, v.max(0.0)))
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let d: f64 = new.iter().zip(old).map(|(a, b)| (a - b).powi(2)).sum();
    let s: f64 = old.iter().map(|a| a * a).sum();
    if s == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (d / s).sqrt()
    }
}

/// Groupwise AMP on a prebuilt operator.
pub fn amp_groupwise(
    op: &ScaledOperator,
    sym: &SymObservations,
    priors: &[Prior],
    cfg: &AmpConfig,
    keep_trajectory: bool,
) -> Result<AmpOutput> {
    let k = op.groups();
    if priors.len() != k {
        return Err(Error::Usage(format!("{} priors for {k} groups", priors.len())));
    }
    if !(0.0..1.0).contains(&cfg.damping) {
        return Err(Error::Config(format!("damping {} must lie in [0, 1)", cfg.damping)));
    }
    let n = op.dim();
    let groups = op.group_of_rows();
    let offsets = op.offsets().to_vec();
    let sizes = op.sizes().to_vec();
    let side: Vec<Option<(f64, &Array1<f64>)>> = (0..k)
        .map(|g| sym.side(g).map(|y| (sym.side_snr()[g], y)))
        .collect();

    let mut m = initial_means(n, cfg)?;
    let mut v = vec![0.0; n];
    let mut m_prev = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut sv = vec![0.0; n];
    let mut trace = Vec::new();
    let mut trajectory = Vec::new();
    let mut iterations = 0;

    for t in 0..cfg.max_iter {
        op.apply_pair(&m, &v, &mut a, &mut sv);
        let sq: Vec<f64> = (0..k)
            .map(|g| {
                let r = offsets[g]..offsets[g] + sizes[g];
                m[r.clone()].iter().map(|x| x * x).sum::<f64>() + v[r].iter().sum::<f64>()
            })
            .collect();
        let base = op.mix(&sq);
        for i in 0..n {
            let g = groups[i];
            a[i] -= sv[i] * m_prev[i];
            b[i] = base[g] - sv[i];
            if cfg.exclude_self {
                let gs = op.coupling_sq()[[g, g]];
                let d = op.entry(i, i);
                a[i] -= d * m[i] - d * d * v[i] * m_prev[i];
                b[i] -= gs * (m[i] * m[i] + v[i]) - d * d * v[i];
            }
        }
        for (g, s) in side.iter().enumerate() {
            if let Some((r, y)) = s {
                let rs = r.sqrt();
                for (j, &yj) in y.iter().enumerate() {
                    a[offsets[g] + j] += rs * yj;
                    b[offsets[g] + j] += r;
                }
            }
        }
        let mut m_new = vec![0.0; n];
        let mut v_new = vec![0.0; n];
        for i in 0..n {
            let (mi, vi) = denoise(&priors[groups[i]], a[i], b[i], t, i)?;
            m_new[i] = cfg.damping * m[i] + (1.0 - cfg.damping) * mi;
            v_new[i] = cfg.damping * v[i] + (1.0 - cfg.damping) * vi;
        }
        let change = relative_change(&m_new, &m);
        m_prev = std::mem::replace(&mut m, m_new);
        v = v_new;
        iterations = t + 1;
        for g in 0..k {
            let r = offsets[g]..offsets[g] + sizes[g];
            trace.push(AmpTraceRow {
                t,
                group: g,
                mean_overlap: m[r.clone()].iter().map(|x| x * x).sum::<f64>() / sizes[g] as f64,
                mean_variance: v[r].iter().sum::<f64>() / sizes[g] as f64,
            });
        }
        if keep_trajectory {
            trajectory.push(state(t, &m, &v, &a, &b, &sizes));
        }
        if change < cfg.tol {
            break;
        }
    }
    let st = state(iterations.saturating_sub(1), &m, &v, &a, &b, &sizes);
    Ok(AmpOutput {
        estimate: EstimateSet {
            xhat: st.m.clone(),
            normalization: Normalization::PosteriorMean,
        },
        state: st,
        iterations,
        trace,
        trajectory,
    })
}

fn state(t: usize, m: &[f64], v: &[f64], a: &[f64], b: &[f64], sizes: &[usize]) -> AmpState {
    let sp = |x: &[f64]| split(&Array1::from(x.to_vec()), sizes);
    AmpState {
        t,
        m: sp(m),
        v: sp(v),
        a: sp(a),
        b: sp(b),
    }
}

/// Result of the per-coordinate algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpGeneralOutput {
    pub m: Array1<f64>,
    pub v: Array1<f64>,
    pub a: Array1<f64>,
    pub b: Array1<f64>,
    pub iterations: usize,
    pub trajectory: Vec<(Array1<f64>, Array1<f64>)>,
}

/// Per-coordinate AMP on `(ỹ, λ̃)` with zero diagonals:
///
/// ```text
/// a = Ỹ m / √N − (Ỹ^{∘2} v / N) ∘ m^{prev}
/// b = λ̃ m^{∘2} / N + (λ̃ − Ỹ^{∘2}) v / N
/// ```
pub fn amp_general(
    y_tilde: &Array2<f64>,
    lambda_tilde: &Array2<f64>,
    priors: &[&Prior],
    big_n: usize,
    cfg: &AmpConfig,
) -> Result<AmpGeneralOutput> {
    let n = y_tilde.nrows();
    if y_tilde.dim() != (n, n) || lambda_tilde.dim() != (n, n) || priors.len() != n {
        return Err(Error::Usage("y_tilde, lambda_tilde and priors must agree in size".into()));
    }
    if (0..n).any(|i| y_tilde[[i, i]] != 0.0 || lambda_tilde[[i, i]] != 0.0) {
        return Err(Error::Usage("y_tilde and lambda_tilde must have zero diagonals".into()));
    }
    let nf = big_n as f64;
    let y2 = y_tilde.mapv(|x| x * x);
    let mut m = Array1::from(initial_means(n, cfg)?);
    let mut v = Array1::<f64>::zeros(n);
    let mut m_prev = Array1::<f64>::zeros(n);
    let mut a = Array1::zeros(n);
    let mut b = Array1::zeros(n);
    let mut trajectory = Vec::new();
    let mut iterations = 0;
    for t in 0..cfg.max_iter {
        let y2v = y2.dot(&v);
        a = y_tilde.dot(&m) / nf.sqrt() - &(&y2v / nf * &m_prev);
        b = (lambda_tilde.dot(&m.mapv(|x| x * x)) + lambda_tilde.dot(&v) - &y2v) / nf;
        let mut m_new = Array1::zeros(n);
        let mut v_new = Array1::zeros(n);
        for i in 0..n {
            let (mi, vi) = denoise(priors[i], a[i], b[i], t, i)?;
            m_new[i] = cfg.damping * m[i] + (1.0 - cfg.damping) * mi;
            v_new[i] = cfg.damping * v[i] + (1.0 - cfg.damping) * vi;
        }
        let change = relative_change(m_new.as_slice().unwrap(), m.as_slice().unwrap());
        m_prev = std::mem::replace(&mut m, m_new);
        v = v_new;
        iterations = t + 1;
        trajectory.push((m.clone(), v.clone()));
        if change < cfg.tol {
            break;
        }
    }
    Ok(AmpGeneralOutput {
        m,
        v,
        a,
        b,
        iterations,
        trajectory,
    })
}
