use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::operator::ScaledOperator;
use super::pca::{split, EstimateSet, Normalization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { gamma: f64 },
    /// `γ_t = γ₀ / (1 + t)`.
    InverseTime { gamma0: f64 },
}

impl StepSchedule {
    fn at(&self, t: usize, scale: f64) -> f64 {
        match *self {
            StepSchedule::Constant { gamma } => gamma * scale,
            StepSchedule::InverseTime { gamma0 } => gamma0 * scale / (1.0 + t as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    pub steps: usize,
    pub schedule: StepSchedule,
    /// Stop when `‖x^{t+1} − x^t‖ / ‖x^t‖` falls below this.
    pub tol: f64,
    /// How many times the step may be halved after a divergence.
    pub max_halvings: usize,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            schedule: StepSchedule::Constant { gamma: 0.05 },
            tol: 1e-7,
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdTraceRow {
    pub t: usize,
    pub group: usize,
    pub mean_square: f64,
}

#[derive(Debug, Clone)]
pub struct GdOutput {
    pub estimate: EstimateSet,
    pub iterations: usize,
    pub step_scale: f64,
    pub trace: Vec<GdTraceRow>,
}

fn run(op: &ScaledOperator, init: &[f64], cfg: &GdConfig, scale: f64, trace: bool) -> Result<Option<GdOutput>> {
    let n = op.dim();
    let limit = 1e6 * (n as f64).sqrt();
    let mut x = init.to_vec();
    let mut grad = vec![0.0; n];
    let mut rows = Vec::new();
    let groups = op.group_of_rows();
    let mut iterations = 0;
    for t in 0..cfg.steps {
        op.apply(&x, &mut grad);
        let norms: Vec<f64> = op
            .offsets()
            .iter()
            .zip(op.sizes())
            .map(|(&o, &s)| x[o..o + s].iter().map(|v| v * v).sum())
            .collect();
        let shrink = op.mix(&norms);
        let gamma = cfg.schedule.at(t, scale);
        let mut delta = 0.0;
        let mut size = 0.0;
        for i in 0..n {
            let step = gamma * (grad[i] - shrink[groups[i]] * x[i]);
            delta += step * step;
            x[i] += step;
            size += x[i] * x[i];
        }
        iterations = t + 1;
        if !size.is_finite() || size.sqrt() > limit {
            return Ok(None);
        }
        if trace {
            for (g, (&o, &s)) in op.offsets().iter().zip(op.sizes()).enumerate() {
                let ms = x[o..o + s].iter().map(|v| v * v).sum::<f64>() / s as f64;
                rows.push(GdTraceRow { t, group: g, mean_square: ms });
            }
        }
        if size == 0.0 || delta.sqrt() <= cfg.tol * size.sqrt() {
            break;
        }
    }
    Ok(Some(GdOutput {
        estimate: EstimateSet {
            xhat: split(&Array1::from(x), op.sizes()),
            normalization: Normalization::PosteriorMean,
        },
        iterations,
        step_scale: scale,
        trace: rows,
    }))
}

/// Gradient ascent on the log-likelihood of the symmetric model, started from `init`.
///
/// On divergence the step is halved and the run restarted from `init`.
pub fn gradient_descent(op: &ScaledOperator, init: &[Array1<f64>], cfg: &GdConfig, trace: bool) -> Result<GdOutput> {
    let x0: Vec<f64> = init.iter().flat_map(|v| v.iter().copied()).collect();
    if x0.len() != op.dim() {
        return Err(Error::Usage(format!(
            "initial point has {} entries, operator has {}",
            x0.len(),
            op.dim()
        )));
    }
    let mut scale = 1.0;
    for _ in 0..=cfg.max_halvings {
        if let Some(out) = run(op, &x0, cfg, scale, trace)? {
            return Ok(out);
        }
        scale *= 0.5;
    }
    Err(Error::Divergence(format!(
        "iterates exceeded 1e6·sqrt(n) even after {} step halvings; use a smaller step",
        cfg.max_halvings
    )))
}

/// Unit-norm spectral estimate rescaled to norm `√n`, the starting point used for GD.
pub fn scaled_init(est: &EstimateSet) -> Vec<Array1<f64>> {
    let stacked = est.stacked();
    let n = stacked.len() as f64;
    let norm = stacked.dot(&stacked).sqrt();
    let c = if norm > 0.0 { n.sqrt() / norm } else { 0.0 };
    est.xhat.iter().map(|v| v * c).collect()
}
