//! Relaxed belief propagation on the complete graph, for cross-checking AMP on
//! tiny instances.
//!
//! The message `i → j` carries the mean and variance of `x_i` with the edge to
//! `j` removed. Incoming fields are quadratic:
//!
//! ```text
//! a_{k→i} = ỹ_ki m_{k→i} / √N
//! b_{k→i} = (λ̃_ki m_{k→i}² + (λ̃_ki − ỹ_ki²) v_{k→i}) / N
//! ```

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::priors::Prior;

/// Largest number of nodes accepted.
pub const BP_MAX_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    /// `msg_mean[[i, j]]` is the mean of `x_i` in the message sent to `j`.
    pub msg_mean: Array2<f64>,
    pub msg_var: Array2<f64>,
    pub marginal_mean: Array1<f64>,
    pub marginal_var: Array1<f64>,
}

fn fields(
    y: &Array2<f64>,
    lam: &Array2<f64>,
    mm: &Array2<f64>,
    mv: &Array2<f64>,
    big_n: f64,
) -> (Array2<f64>, Array2<f64>) {
    let n = y.nrows();
    let a = Array2::from_shape_fn((n, n), |(k, i)| y[[k, i]] * mm[[k, i]] / big_n.sqrt());
    let b = Array2::from_shape_fn((n, n), |(k, i)| {
        (lam[[k, i]] * mm[[k, i]].powi(2) + (lam[[k, i]] - y[[k, i]].powi(2)) * mv[[k, i]]) / big_n
    });
    (a, b)
}

/// Runs `iterations` parallel sweeps of relaxed BP.
///
/// Messages start at `N(0, init_std²)` per source node with zero variance,
/// which matches the AMP initialization when the same seed is used.
pub fn relaxed_bp(
    y_tilde: &Array2<f64>,
    lambda_tilde: &Array2<f64>,
    priors: &[&Prior],
    big_n: usize,
    iterations: usize,
    init_std: f64,
    seed: u64,
) -> Result<BpOutput> {
    let n = y_tilde.nrows();
    if n > BP_MAX_NODES {
        return Err(Error::Resource(format!(
            "relaxed BP keeps n² messages; {n} nodes exceeds the limit of {BP_MAX_NODES}"
        )));
    }
    if y_tilde.dim() != (n, n) || lambda_tilde.dim() != (n, n) || priors.len() != n {
        return Err(Error::Usage("y_tilde, lambda_tilde and priors must agree in size".into()));
    }
    let nf = big_n as f64;
    let dist = Normal::new(0.0, init_std).map_err(|e| Error::Config(format!("init_std: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let mut mm = Array2::from_shape_fn((n, n), |(i, _)| init[i]);
    let mut mv = Array2::<f64>::zeros((n, n));

    for _ in 0..iterations {
        let (a, b) = fields(y_tilde, lambda_tilde, &mm, &mv, nf);
        let (sa, sb) = (a.sum_axis(ndarray::Axis(0)), b.sum_axis(ndarray::Axis(0)));
        let mut nm = Array2::zeros((n, n));
        let mut nv = Array2::zeros((n, n));
        for i in 0..n {
            // remove the self term and the target's own contribution
            let (ai, bi) = (sa[i] - a[[i, i]], sb[i] - b[[i, i]]);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (m, v) = priors[i].posterior_moments(ai - a[[j, i]], bi - b[[j, i]])?;
                nm[[i, j]] = m;
                nv[[i, j]] = v;
            }
        }
        mm = nm;
        mv = nv;
    }

    let (a, b) = fields(y_tilde, lambda_tilde, &mm, &mv, nf);
    let mut marginal_mean = Array1::zeros(n);
    let mut marginal_var = Array1::zeros(n);
    for i in 0..n {
        let ai: f64 = (0..n).filter(|&k| k != i).map(|k| a[[k, i]]).sum();
        let bi: f64 = (0..n).filter(|&k| k != i).map(|k| b[[k, i]]).sum();
        let (m, v) = priors[i].posterior_moments(ai, bi)?;
        marginal_mean[i] = m;
        marginal_var[i] = v;
    }
    Ok(BpOutput {
        msg_mean: mm,
        msg_var: mv,
        marginal_mean,
        marginal_var,
    })
}
