use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::saddle::{solve_limit, SaddlePoint, SolverOptions};
use super::spec::ProblemSpec;
use crate::error::{Error, Result};

/// Asymptotic vector and block MMSEs read off a saddle point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmseResult {
    pub vector_mmse: Vec<f64>,
    pub block_mmse: Array2<f64>,
    /// `true` where the value is only a lower bound on the MMSE.
    pub vector_bound_only: Vec<bool>,
    pub block_bound_only: Array2<bool>,
}

impl MmseResult {
    pub fn is_bound_only(&self, k: usize, l: usize) -> bool {
        self.block_bound_only[[k, l]]
    }
}

pub fn mmse_from_saddle(saddle: &SaddlePoint, spec: &ProblemSpec) -> Result<MmseResult> {
    let k = spec.groups();
    if saddle.q_star.len() != k {
        return Err(Error::Usage(format!(
            "saddle point has {} overlaps but the spec has {k} groups",
            saddle.q_star.len()
        )));
    }
    let m: Vec<f64> = saddle
        .q_star
        .iter()
        .zip(spec.beta())
        .map(|(q, b)| (q / b).clamp(0.0, 1.0))
        .collect();
    let vector_mmse = m.iter().map(|mi| 1.0 - mi).collect();
    let block_mmse = Array2::from_shape_fn((k, k), |(i, j)| 1.0 - m[i] * m[j]);
    let lam = spec.lambda();
    // a non-unique maximizer leaves only the bound as well
    let ambiguous = !saddle.unique;
    let vector_bound_only = (0..k)
        .map(|i| ambiguous || (saddle.q_star[i] > 0.0 && spec.r()[i] == 0.0))
        .collect();
    let block_bound_only = Array2::from_shape_fn((k, k), |(i, j)| {
        ambiguous || (saddle.q_star[i] * saddle.q_star[j] > 0.0 && lam[[i, j]] + lam[[j, i]] == 0.0)
    });
    Ok(MmseResult {
        vector_mmse,
        block_mmse,
        vector_bound_only,
        block_bound_only,
    })
}

/// Parameter of the limit formula to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Lambda(usize, usize),
    SideSnr(usize),
}

/// Centered finite difference of the limit value in one parameter next to
/// the envelope-theorem derivative read off the saddle point.
pub fn immse_check(spec: &ProblemSpec, component: Component, h: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Usage(format!("step h must be positive, got {h}")));
    }
    let k = spec.groups();
    let shifted = |delta: f64| -> Result<ProblemSpec> {
        match component {
            Component::Lambda(i, j) => {
                let mut lam = spec.lambda().clone();
                lam[[i, j]] += delta;
                spec.with_lambda(lam)
            }
            Component::SideSnr(i) => {
                let mut r = spec.r().to_vec();
                r[i] += delta;
                spec.with_r(r)
            }
        }
    };
    let base = match component {
        Component::Lambda(i, j) if i < k && j < k => spec.lambda()[[i, j]],
        Component::SideSnr(i) if i < k => spec.r()[i],
        _ => return Err(Error::Usage(format!("component {component:?} is out of range"))),
    };
    if base - h < 0.0 {
        return Err(Error::Usage(format!(
            "component {component:?} = {base} is not interior for step {h}"
        )));
    }
    let up = solve_limit(&shifted(h)?, opts)?.value;
    let down = solve_limit(&shifted(-h)?, opts)?.value;
    let saddle = solve_limit(spec, opts)?;
    let q = &saddle.q_star;
    let analytic = match component {
        Component::Lambda(i, j) => 0.5 * q[i] * q[j],
        Component::SideSnr(i) => 0.5 * q[i],
    };
    Ok(((up - down) / (2.0 * h), analytic))
}
