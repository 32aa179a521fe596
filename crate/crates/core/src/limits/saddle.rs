//! Global max-inf point of the variational limit formula.
//!
//! For fixed overlaps `q` the inner infimum over `r̃` separates across groups,
//! and differentiating the objective
//!
//! ```text
//! Σ_k β_k D_k(r_k + r̃_k) + ½ qᵀΛq − ½ r̃ᵀq
//! ```
//!
//! gives the stationarity system
//!
//! ```text
//! r̃ = (Λ + Λᵀ) q,        q_k = 2 β_k D_k'(r_k + r̃_k).
//! ```
//!
//! The second equation is a monotone fixed-point map on the box `[0, β]`
//! (`Λ ≥ 0` and `D_k'` is nondecreasing). We iterate it with damping from a
//! multistart set, polish with Newton steps (the Jacobian needs `D_k''`),
//! and keep the converged point with the largest objective. The multistart is
//! a heuristic: it is not a certified global optimizer.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::ProblemSpec;
use crate::error::{Error, Result};
use crate::priors::Prior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Initial damping of the fixed-point iteration.
    pub damping: f64,
    pub min_damping: f64,
    pub max_iter: usize,
    /// Sup-norm stationarity tolerance on `q − T(q)`.
    pub tol: f64,
    /// Two stationary values closer than this are considered tied.
    pub value_tol: f64,
    /// Tied maximizers further apart than this (sup norm) make the maximizer non-unique.
    pub uniqueness_gap: f64,
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            min_damping: 1.0 / 64.0,
            max_iter: 50_000,
            tol: 1e-10,
            value_tol: 1e-7,
            uniqueness_gap: 1e-4,
            random_starts: 32,
            seed: 0x5eed_0f_11_3175,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub q: Vec<f64>,
    pub value: f64,
}

/// Optimizer of the limit formula with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddlePoint {
    pub q_star: Vec<f64>,
    #[serde(rename = "r_tilde")]
    pub r_tilde_star: Vec<f64>,
    pub value: f64,
    pub unique: bool,
    pub stationary_points: Vec<StationaryPoint>,
    /// Sup-norm residual of `q − T(q)` at `q_star`.
    pub residual: f64,
}

/// Derivative evaluations for one group at one SNR.
struct GroupEval<'a> {
    prior: &'a Prior,
    beta: f64,
    r: f64,
}

impl GroupEval<'_> {
    fn overlap(&self, t: f64) -> Result<f64> {
        let d1 = self.prior.relative_entropy_deriv(self.r + t)?;
        if !d1.is_finite() {
            return Err(Error::Numeric(format!("D'({}) is not finite", self.r + t)));
        }
        Ok((2.0 * self.beta * d1).clamp(0.0, self.beta))
    }

    fn overlap_slope(&self, t: f64) -> Result<f64> {
        Ok(2.0 * self.beta * self.prior.relative_entropy_second_deriv(self.r + t)?)
    }

    /// `inf_{t ≥ 0} β D(r + t) − t q / 2`, with the minimizing `t`.
    fn inner_inf(&self, q: f64) -> Result<(f64, f64)> {
        let (beta, r) = (self.beta, self.r);
        let at_zero = 2.0 * beta * self.prior.relative_entropy_deriv(r)?;
        if q <= at_zero {
            return Ok((beta * self.prior.relative_entropy(r)?, 0.0));
        }
        if q >= beta {
            let v = if q > beta {
                f64::NEG_INFINITY
            } else {
                beta * (0.5 * r + self.prior.relative_entropy_offset_limit())
            };
            return Ok((v, f64::INFINITY));
        }
        let t = match self.prior {
            Prior::UnitGaussian => (q / (beta - q) - r).max(0.0),
            Prior::Discrete(_) => {
                let target = q / (2.0 * beta);
                let mut hi = 1.0;
                let mut guard = 0;
                while self.prior.relative_entropy_deriv(r + hi)? < target {
                    hi *= 2.0;
                    guard += 1;
                    if guard > 200 {
                        return Err(Error::Numeric("inner infimum bracket overflow".into()));
                    }
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.prior.relative_entropy_deriv(r + mid)? < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi.max(1.0) {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        Ok((beta * self.prior.relative_entropy(r + t)? - 0.5 * t * q, t))
    }
}

struct Problem<'a> {
    groups: Vec<GroupEval<'a>>,
    lambda: &'a Array2<f64>,
    lambda_sym: Array2<f64>,
    beta: &'a [f64],
}

impl<'a> Problem<'a> {
    fn new(spec: &'a ProblemSpec) -> Self {
        let groups = spec
            .priors()
            .iter()
            .zip(spec.beta())
            .zip(spec.r())
            .map(|((prior, &beta), &r)| GroupEval { prior, beta, r })
            .collect();
        Self {
            groups,
            lambda: spec.lambda(),
            lambda_sym: spec.lambda_sym(),
            beta: spec.beta(),
        }
    }

    fn k(&self) -> usize {
        self.beta.len()
    }

    fn coupling(&self, q: &[f64]) -> Vec<f64> {
        (0..self.k())
            .map(|i| (0..self.k()).map(|j| self.lambda_sym[[i, j]] * q[j]).sum())
            .collect()
    }

    fn map(&self, q: &[f64]) -> Result<Vec<f64>> {
        let t = self.coupling(q);
        self.groups.iter().zip(&t).map(|(g, &ti)| g.overlap(ti)).collect()
    }

    fn residual(&self, q: &[f64]) -> Result<(Vec<f64>, f64)> {
        let tq = self.map(q)?;
        let res = q
            .iter()
            .zip(&tq)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((tq, res))
    }

    fn quad_form(&self, q: &[f64]) -> f64 {
        let k = self.k();
        (0..k)
            .map(|i| (0..k).map(|j| q[i] * self.lambda[[i, j]] * q[j]).sum::<f64>())
            .sum()
    }

    /// Objective evaluated on the stationary manifold `r̃ = (Λ + Λᵀ) q`.
    fn stationary_value(&self, q: &[f64]) -> Result<f64> {
        let t = self.coupling(q);
        let mut v = 0.5 * self.quad_form(q);
        for ((g, &ti), &qi) in self.groups.iter().zip(&t).zip(q) {
            v += g.beta * g.prior.relative_entropy(g.r + ti)? - 0.5 * ti * qi;
        }
        Ok(v)
    }

    /// Objective with the inner infimum solved exactly for each group.
    fn value(&self, q: &[f64]) -> Result<f64> {
        let mut v = 0.5 * self.quad_form(q);
        for (g, &qi) in self.groups.iter().zip(q) {
            v += g.inner_inf(qi)?.0;
        }
        Ok(v)
    }

    fn clamp(&self, q: &mut [f64]) {
        for (qi, &b) in q.iter_mut().zip(self.beta) {
            *qi = qi.clamp(0.0, b);
        }
    }

    fn newton_polish(&self, q0: &[f64], tol: f64) -> Result<Option<(Vec<f64>, f64)>> {
        let k = self.k();
        let mut q = q0.to_vec();
        let (mut tq, mut res) = self.residual(&q)?;
        for _ in 0..60 {
            if res < 0.01 * tol {
                break;
            }
            let t = self.coupling(&q);
            let mut jac = nalgebra::DMatrix::<f64>::identity(k, k);
            for i in 0..k {
                let raw = 2.0 * self.groups[i].beta
                    * self.groups[i].prior.relative_entropy_deriv(self.groups[i].r + t[i])?;
                // a clamped coordinate does not respond to q
                if raw >= self.beta[i] {
                    continue;
                }
                let slope = self.groups[i].overlap_slope(t[i])?;
                for j in 0..k {
                    jac[(i, j)] -= slope * self.lambda_sym[[i, j]];
                }
            }
            let g = nalgebra::DVector::from_iterator(k, q.iter().zip(&tq).map(|(a, b)| a - b));
            let Some(step) = jac.lu().solve(&g) else {
                break;
            };
            let mut improved = false;
            let mut scale = 1.0;
            for _ in 0..20 {
                let mut cand: Vec<f64> = q.iter().zip(step.iter()).map(|(a, s)| a - scale * s).collect();
                self.clamp(&mut cand);
                let (ctq, cres) = self.residual(&cand)?;
                if cres < res {
                    q = cand;
                    tq = ctq;
                    res = cres;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Ok((res < tol).then_some((q, res)))
    }

    /// Damped fixed-point iteration followed by Newton polishing.
    fn converge_from(&self, start: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, f64, bool)> {
        let mut q = start.to_vec();
        self.clamp(&mut q);
        let mut omega = opts.damping;
        let mut prev_res = f64::INFINITY;
        let mut rises = 0;
        let mut last_newton: Option<usize> = None;
        let mut best = (q.clone(), f64::INFINITY);
        for it in 0..opts.max_iter {
            let (tq, res) = self.residual(&q)?;
            if res < best.1 {
                best = (q.clone(), res);
            }
            if res < opts.tol {
                return Ok((q, res, true));
            }
            let newton_due = last_newton.is_none_or(|l| it >= l + 50);
            if res < 1e-5 && newton_due {
                last_newton = Some(it);
                if let Some((qn, rn)) = self.newton_polish(&q, opts.tol)? {
                    return Ok((qn, rn, true));
                }
            }
            if res > prev_res {
                rises += 1;
                if rises >= 3 {
                    omega = (0.5 * omega).max(opts.min_damping);
                    rises = 0;
                }
            }
            prev_res = res;
            for (qi, ti) in q.iter_mut().zip(&tq) {
                *qi += omega * (ti - *qi);
            }
        }
        Ok((best.0, best.1, false))
    }

    fn starts(&self, opts: &SolverOptions) -> Vec<Vec<f64>> {
        let k = self.k();
        let mut starts = Vec::new();
        if k <= 4 {
            let total = 3usize.pow(k as u32);
            for code in 0..total {
                let mut c = code;
                let q: Vec<f64> = (0..k)
                    .map(|i| {
                        let level = c % 3;
                        c /= 3;
                        0.5 * level as f64 * self.beta[i]
                    })
                    .collect();
                starts.push(q);
            }
        } else {
            for frac in [0.0, 0.5, 1.0] {
                starts.push(self.beta.iter().map(|b| frac * b).collect());
            }
            for i in 0..k {
                let mut lo = vec![0.0; k];
                lo[i] = self.beta[i];
                starts.push(lo);
                let mut hi = self.beta.to_vec();
                hi[i] = 0.0;
                starts.push(hi);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.random_starts {
            starts.push(self.beta.iter().map(|&b| rng.random::<f64>() * b).collect());
        }
        starts
    }

    fn corners(&self, opts: &SolverOptions) -> Vec<Vec<f64>> {
        let k = self.k();
        let build = |mask: u64| -> Vec<f64> {
            (0..k)
                .map(|i| if mask >> i & 1 == 1 { self.beta[i] } else { 0.0 })
                .collect()
        };
        if k <= 4 {
            (0..(1u64 << k)).map(build).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xc0_12_e2);
            let mut out = vec![build(0), build(u64::MAX)];
            for _ in 0..16 {
                out.push((0..k).map(|i| if rng.random::<bool>() { self.beta[i] } else { 0.0 }).collect());
            }
            out
        }
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Value of the limit objective at `q` with the inner infimum solved exactly.
pub fn objective(spec: &ProblemSpec, q: &[f64]) -> Result<f64> {
    if q.len() != spec.groups() {
        return Err(Error::Usage(format!("q has {} entries, expected {}", q.len(), spec.groups())));
    }
    Problem::new(spec).value(q)
}

/// Sup-norm residuals of the two stationarity conditions at `(q, r̃)`.
pub fn stationarity_residuals(spec: &ProblemSpec, q: &[f64], r_tilde: &[f64]) -> Result<(f64, f64)> {
    let p = Problem::new(spec);
    let t = p.coupling(q);
    let outer = sup_dist(&t, r_tilde);
    let tq = p.map(q)?;
    let inner = sup_dist(q, &tq);
    Ok((outer, inner))
}

/// Solve the max-inf problem and return the global maximizer found by multistart.
pub fn solve_limit(spec: &ProblemSpec, opts: &SolverOptions) -> Result<SaddlePoint> {
    let problem = Problem::new(spec);
    let mut found: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let mut best_failed: Option<(Vec<f64>, f64)> = None;

    for start in problem.starts(opts) {
        let (q, res, ok) = problem.converge_from(&start, opts)?;
        if !ok {
            if best_failed.as_ref().is_none_or(|(_, r)| res < *r) {
                best_failed = Some((q, res));
            }
            continue;
        }
        if found.iter().any(|(p, _, _)| sup_dist(p, &q) < 1e-7) {
            continue;
        }
        let value = problem.stationary_value(&q)?;
        if value.is_nan() {
            return Err(Error::Numeric(format!("objective is NaN at q = {q:?}")));
        }
        found.push((q, value, res));
    }

    if found.is_empty() {
        return Err(Error::Solver {
            message: format!(
                "no start converged within {} iterations (best residual {:.3e})",
                opts.max_iter,
                best_failed.as_ref().map_or(f64::NAN, |b| b.1)
            ),
            best_q: best_failed.map(|b| b.0),
        });
    }

    found.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (mut q_star, mut value, mut residual) = found[0].clone();

    // a corner can only win when the supremum sits on the boundary of the box
    for corner in problem.corners(opts) {
        let v = problem.value(&corner)?;
        if v.is_finite() && v > value + opts.value_tol {
            let (_, res) = problem.residual(&corner)?;
            q_star = corner;
            value = v;
            residual = res;
        }
    }

    let near_best: Vec<&Vec<f64>> = found
        .iter()
        .filter(|(_, v, _)| *v >= value - opts.value_tol)
        .map(|(q, _, _)| q)
        .collect();
    let unique = near_best
        .iter()
        .all(|q| sup_dist(q, &q_star) <= opts.uniqueness_gap)
        && near_best.iter().all(|a| near_best.iter().all(|b| sup_dist(a, b) <= opts.uniqueness_gap));

    let r_tilde_star = problem.coupling(&q_star);
    let stationary_points = found
        .into_iter()
        .map(|(q, value, _)| StationaryPoint { q, value })
        .collect();
    Ok(SaddlePoint {
        q_star,
        r_tilde_star,
        value,
        unique,
        stationary_points,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_two_group;
    use ndarray::array;

    fn gaussian_two_group(alpha: f64, lambda: f64) -> ProblemSpec {
        make_two_group(alpha, lambda, Prior::gaussian(), Prior::gaussian()).unwrap()
    }

    #[test]
    fn zero_snr_gives_zero_overlap() {
        let spec = ProblemSpec::without_side_info(
            vec![0.3, 0.7],
            vec![Prior::gaussian(), Prior::rademacher()],
            Array2::zeros((2, 2)),
        )
        .unwrap();
        let s = solve_limit(&spec, &SolverOptions::default()).unwrap();
        assert_eq!(s.q_star, vec![0.0, 0.0]);
        assert_eq!(s.value, 0.0);
        assert!(s.unique);
    }

    #[test]
    fn gaussian_two_group_closed_form() {
        // symmetric fixed point: q/β = (λ − 1)/λ
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            let s = solve_limit(&gaussian_two_group(alpha, 2.0), &SolverOptions::default()).unwrap();
            for &q in &s.q_star {
                assert!((q - 0.25).abs() < 1e-10, "alpha {alpha}: {:?}", s.q_star);
            }
            assert!(s.unique);
            assert!(s.residual < 1e-10);
        }
    }

    #[test]
    fn stationarity_holds_at_solution() {
        let spec = ProblemSpec::new(
            vec![0.4, 0.6],
            vec![Prior::rademacher(), Prior::gaussian()],
            array![[1.5, 0.7], [0.2, 0.9]],
            vec![0.3, 0.0],
        )
        .unwrap();
        let s = solve_limit(&spec, &SolverOptions::default()).unwrap();
        let (outer, inner) = stationarity_residuals(&spec, &s.q_star, &s.r_tilde_star).unwrap();
        assert!(outer < 1e-12 && inner < 1e-8, "{outer} {inner}");
        for (q, b) in s.q_star.iter().zip(spec.beta()) {
            assert!(*q >= 0.0 && q <= b);
        }
        // objective with exact inner infimum matches the stationary value
        let v = objective(&spec, &s.q_star).unwrap();
        assert!((v - s.value).abs() < 1e-9);
    }

    #[test]
    fn inner_inf_boundaries() {
        let g = GroupEval {
            prior: &Prior::gaussian(),
            beta: 0.5,
            r: 0.0,
        };
        assert_eq!(g.inner_inf(0.5).unwrap().0, f64::NEG_INFINITY);
        let rad = Prior::rademacher();
        let d = GroupEval {
            prior: &rad,
            beta: 0.5,
            r: 0.0,
        };
        let (v, t) = d.inner_inf(0.5).unwrap();
        assert!((v + 0.5 * 2f64.ln()).abs() < 1e-15 && t.is_infinite());
        // interior: t solves 2βD'(t) = q
        let (_, t) = d.inner_inf(0.3).unwrap();
        let back = 2.0 * 0.5 * rad.relative_entropy_deriv(t).unwrap();
        assert!((back - 0.3).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_wrong_length() {
        assert!(objective(&gaussian_two_group(0.5, 2.0), &[0.1]).is_err());
    }
}
