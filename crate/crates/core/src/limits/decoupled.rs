//! Specialised solvers for block structures where the limit splits into
//! independent low-dimensional problems. They share no code with the
//! general saddle solver and serve as cross-checks for it.

use super::spec::ProblemSpec;
use crate::error::{Error, Result};
use crate::priors::Prior;

const GRID: usize = 401;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize `f` on `[lo, hi]`: coarse grid, then golden section around the best cell.
pub(crate) fn maximize_1d<F>(mut f: F, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if hi <= lo {
        return Ok((lo, f(lo)?));
    }
    let step = (hi - lo) / (GRID - 1) as f64;
    let mut best = (lo, f(lo)?);
    let mut best_i = 0;
    for i in 1..GRID {
        let x = if i == GRID - 1 { hi } else { lo + i as f64 * step };
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let mut a = lo + best_i.saturating_sub(1) as f64 * step;
    let mut b = (lo + (best_i + 1) as f64 * step).min(hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > 1e-13 * (1.0 + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x)?;
    if v > best.1 {
        best = (x, v);
    }
    Ok(best)
}

fn require_plain(spec: &ProblemSpec) -> Result<()> {
    if spec.has_side_info() {
        return Err(Error::Usage("decoupled solvers require r = 0".into()));
    }
    Ok(())
}

/// Limit for diagonal `Λ`: a sum of independent single-group problems.
pub fn limit_value_decoupled_wigner(spec: &ProblemSpec) -> Result<f64> {
    require_plain(spec)?;
    if !spec.is_diagonal() {
        return Err(Error::Usage("Wigner decoupling requires a diagonal lambda".into()));
    }
    let mut total = 0.0;
    for (k, (prior, &beta)) in spec.priors().iter().zip(spec.beta()).enumerate() {
        let lam = spec.lambda()[[k, k]];
        if lam == 0.0 {
            continue;
        }
        let (_, v) = maximize_1d(
            |q| Ok(beta * prior.relative_entropy(2.0 * lam * q)? - 0.5 * lam * q * q),
            0.0,
            beta,
        )?;
        total += v;
    }
    Ok(total)
}

// min over q_l in [0, beta_l] of beta_k D_k(2 lbar q_l) - lbar q_k q_l, which is convex in q_l.
fn wishart_inner(prior_k: &Prior, beta_k: f64, beta_l: f64, lbar: f64, q_k: f64) -> Result<f64> {
    let slope = |x: f64| -> Result<f64> {
        Ok(2.0 * lbar * beta_k * prior_k.relative_entropy_deriv(2.0 * lbar * x)? - lbar * q_k)
    };
    let x = if slope(0.0)? >= 0.0 {
        0.0
    } else if slope(beta_l)? <= 0.0 {
        beta_l
    } else {
        let (mut lo, mut hi) = (0.0, beta_l);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(beta_k * prior_k.relative_entropy(2.0 * lbar * x)? - lbar * q_k * x)
}

/// Limit for anti-diagonal `Λ` with an even number of groups: independent
/// bipartite problems on the pairs `(k, K−1−k)`.
pub fn limit_value_decoupled_wishart(spec: &ProblemSpec) -> Result<f64> {
    require_plain(spec)?;
    let k = spec.groups();
    if k % 2 != 0 || !spec.is_anti_diagonal() {
        return Err(Error::Usage(
            "Wishart decoupling requires an even number of groups and an anti-diagonal lambda".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..k / 2 {
        let j = k - 1 - i;
        let lbar = 0.5 * (spec.lambda()[[i, j]] + spec.lambda()[[j, i]]);
        if lbar == 0.0 {
            continue;
        }
        let (pi, pj) = (&spec.priors()[i], &spec.priors()[j]);
        let (bi, bj) = (spec.beta()[i], spec.beta()[j]);
        let (_, v) = maximize_1d(
            |qi| Ok(bj * pj.relative_entropy(2.0 * lbar * qi)? + wishart_inner(pi, bi, bj, lbar, qi)?),
            0.0,
            bi,
        )?;
        total += v;
    }
    Ok(total)
}
