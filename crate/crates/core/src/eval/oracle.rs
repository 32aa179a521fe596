use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::limits::ProblemSpec;
use crate::model::Observations;

/// Largest number of latent configurations enumerated.
pub const ORACLE_MAX_STATES: usize = 1 << 20;

/// Exact posterior moments of a small instance with discrete priors.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorOracle {
    /// `E[x_k | Y]` per group.
    pub mean: Vec<Array1<f64>>,
    /// `E[x_k x_kᵀ | Y]` per group.
    pub second_moment: Vec<Array2<f64>>,
    /// `E[‖x_k‖⁴ | Y]` per group.
    pub fourth_moment: Vec<f64>,
    /// `n⁻¹ Σ_i Var(x_i | Y)` over all coordinates.
    pub vector_mmse: f64,
    /// `n_k⁻² E‖x_k x_kᵀ − E[x_k x_kᵀ | Y]‖_F²` per group.
    pub block_mmse: Vec<f64>,
}

impl PosteriorOracle {
    /// Posterior expected diagonal-block loss of `uhat` for group `k`.
    ///
    /// Estimates that carry scale are scored as they are; scale-free ones
    /// are rescaled to the radius that minimizes the posterior risk.
    pub fn posterior_risk(&self, k: usize, uhat: &Array1<f64>, scale_free: bool) -> f64 {
        let n = uhat.len() as f64;
        let m = &self.second_moment[k];
        let quad = uhat.dot(&m.dot(uhat));
        let hh = uhat.dot(uhat);
        let risk = if scale_free {
            if hh == 0.0 {
                self.fourth_moment[k]
            } else {
                self.fourth_moment[k] - quad * quad / (hh * hh)
            }
        } else {
            self.fourth_moment[k] - 2.0 * quad + hh * hh
        };
        risk / (n * n)
    }
}

/// Enumerates every latent configuration and weights it by prior times the
/// exact Gaussian likelihood.
pub fn exact_posterior_oracle(obs: &Observations, spec: &ProblemSpec, big_n: usize) -> Result<PosteriorOracle> {
    let k = spec.groups();
    let mut atoms: Vec<&[f64]> = Vec::new();
    let mut logp: Vec<Vec<f64>> = Vec::new();
    for (g, prior) in spec.priors().iter().enumerate() {
        let d = prior
            .as_discrete()
            .ok_or_else(|| Error::Usage(format!("group {} has a continuous prior; the oracle needs discrete priors", g + 1)))?;
        for _ in 0..obs.sizes[g] {
            atoms.push(d.atoms());
            logp.push(d.probs().iter().map(|p| p.ln()).collect());
        }
    }
    let n = atoms.len();
    let mut states: usize = 1;
    for a in &atoms {
        states = states
            .checked_mul(a.len())
            .filter(|&s| s <= ORACLE_MAX_STATES)
            .ok_or_else(|| Error::Resource(format!("posterior enumeration exceeds {ORACLE_MAX_STATES} states")))?;
    }

    let decode = |mut idx: usize, x: &mut [f64]| -> f64 {
        let mut lp = 0.0;
        for i in 0..n {
            let r = atoms[i].len();
            let j = idx % r;
            idx /= r;
            x[i] = atoms[i][j];
            lp += logp[i][j];
        }
        lp
    };

    let mut x = vec![0.0; n];
    let mut logw = Vec::with_capacity(states);
    for s in 0..states {
        let lp = decode(s, &mut x);
        logw.push(if lp.is_finite() { lp + obs.log_likelihood(spec, big_n, &x) } else { f64::NEG_INFINITY });
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric("posterior has no mass".into()));
    }

    let offsets: Vec<usize> = obs
        .sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let mut total = 0.0;
    let mut mean = Array1::<f64>::zeros(n);
    let mut sq = Array1::<f64>::zeros(n);
    let mut second: Vec<Array2<f64>> = obs.sizes.iter().map(|&s| Array2::zeros((s, s))).collect();
    let mut fourth = vec![0.0; k];
    for (s, lw) in logw.iter().enumerate() {
        let w = (lw - max).exp();
        if w == 0.0 {
            continue;
        }
        decode(s, &mut x);
        total += w;
        for i in 0..n {
            mean[i] += w * x[i];
            sq[i] += w * x[i] * x[i];
        }
        for g in 0..k {
            let xg = &x[offsets[g]..offsets[g] + obs.sizes[g]];
            let nrm: f64 = xg.iter().map(|v| v * v).sum();
            fourth[g] += w * nrm * nrm;
            let m = &mut second[g];
            for (i, &xi) in xg.iter().enumerate() {
                for (j, &xj) in xg.iter().enumerate() {
                    m[[i, j]] += w * xi * xj;
                }
            }
        }
    }
    mean /= total;
    sq /= total;
    second.iter_mut().for_each(|m| *m /= total);
    fourth.iter_mut().for_each(|f| *f /= total);

    let vector_mmse = (0..n).map(|i| sq[i] - mean[i] * mean[i]).sum::<f64>() / n as f64;
    let block_mmse = (0..k)
        .map(|g| {
            let ng = obs.sizes[g] as f64;
            let fro: f64 = second[g].iter().map(|v| v * v).sum();
            ((fourth[g] - fro) / (ng * ng)).max(0.0)
        })
        .collect();
    let mean = (0..k)
        .map(|g| mean.slice(ndarray::s![offsets[g]..offsets[g] + obs.sizes[g]]).to_owned())
        .collect();
    Ok(PosteriorOracle {
        mean,
        second_moment: second,
        fourth_moment: fourth,
        vector_mmse,
        block_mmse,
    })
}
