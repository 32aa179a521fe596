use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use super::eigen::{dense_apply, lanczos_largest, EigenOptions};
use crate::error::{Error, Result};
use crate::model::SymObservations;

/// How an estimate should be scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Carries its own scale (AMP, gradient descent).
    PosteriorMean,
    /// Only the direction is meaningful (spectral methods).
    UnitScaleFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    pub xhat: Vec<Array1<f64>>,
    pub normalization: Normalization,
}

impl EstimateSet {
    pub fn stacked(&self) -> Array1<f64> {
        Array1::from_iter(self.xhat.iter().flat_map(|x| x.iter().copied()))
    }
}

pub(crate) fn split(v: &Array1<f64>, sizes: &[usize]) -> Vec<Array1<f64>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &n in sizes {
        out.push(v.slice(s![at..at + n]).to_owned());
        at += n;
    }
    out
}

/// Leading eigenvector of `Y*`, split into groups.
pub fn joint_pca(sym: &SymObservations, opts: &EigenOptions) -> Result<EstimateSet> {
    if sym.lambda_sym().iter().all(|&l| l == 0.0) {
        return Err(Error::Degenerate("every block has zero SNR, Y* is empty".into()));
    }
    let y = sym.assemble_observed();
    let pair = lanczos_largest(|x, out| dense_apply(&y, x, out), y.nrows(), None, opts)?;
    Ok(EstimateSet {
        xhat: split(&pair.vector, sym.sizes()),
        normalization: Normalization::UnitScaleFree,
    })
}

/// The matrices `Y^sym_kk` and `Y^sym_kℓ (Y^sym_kℓ)ᵀ` for one target group.
#[derive(Debug, Clone)]
pub struct WeightedPcaTerms {
    terms: Vec<Array2<f64>>,
}

impl WeightedPcaTerms {
    pub fn new(sym: &SymObservations, k: usize) -> Self {
        let terms = (0..sym.groups())
            .map(|l| {
                let b = sym.block(k, l);
                if l == k {
                    b.to_owned()
                } else {
                    b.dot(&b.t())
                }
            })
            .collect();
        Self { terms }
    }

    fn combine(&self, weights: &[f64]) -> Result<Array2<f64>> {
        if weights.len() != self.terms.len() {
            return Err(Error::Usage(format!(
                "expected {} weights, got {}",
                self.terms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Usage("weights must be nonnegative and finite".into()));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Usage("all weighted PCA weights are zero".into()));
        }
        let mut m = Array2::zeros(self.terms[0].raw_dim());
        for (t, &w) in self.terms.iter().zip(weights) {
            if w != 0.0 {
                m.scaled_add(w, t);
            }
        }
        Ok(m)
    }

    /// Leading eigenvector of `Σ_ℓ w_ℓ · term_ℓ`.
    pub fn leading(&self, weights: &[f64], start: Option<&[f64]>, opts: &EigenOptions) -> Result<Array1<f64>> {
        let m = self.combine(weights)?;
        Ok(lanczos_largest(|x, y| dense_apply(&m, x, y), m.nrows(), start, opts)?.vector)
    }
}

/// Leading eigenvector of `w_kk Y_kk + Σ_{ℓ≠k} w_kℓ Y_kℓ Y_kℓᵀ` (weights indexed by ℓ).
pub fn weighted_pca(sym: &SymObservations, weights: &[f64], k: usize, opts: &EigenOptions) -> Result<Array1<f64>> {
    WeightedPcaTerms::new(sym, k).leading(weights, None, opts)
}

/// Candidate weight vectors for the grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightGrid {
    /// All points of the probability simplex with coordinates in `{0, 1/(p−1), …, 1}`.
    Simplex { points: usize },
    Explicit { weights: Vec<Vec<f64>> },
}

impl Default for WeightGrid {
    fn default() -> Self {
        WeightGrid::Simplex { points: 17 }
    }
}

fn simplex_points(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(dim, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, steps, steps, &mut Vec::new(), &mut out);
    out
}

impl WeightGrid {
    pub fn candidates(&self, groups: usize) -> Result<Vec<Vec<f64>>> {
        let c = match self {
            WeightGrid::Simplex { points } if *points >= 2 => simplex_points(groups, points - 1),
            WeightGrid::Simplex { .. } => vec![],
            WeightGrid::Explicit { weights } => weights.clone(),
        };
        if c.is_empty() {
            return Err(Error::Usage("weight grid is empty".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    /// Row `k` holds the chosen weights for group `k`, in normalized units.
    pub weights: Array2<f64>,
    pub estimates: EstimateSet,
}

/// Oracle weight selection: for each group, the grid point whose eigenvector
/// has the largest squared correlation with the truth.
///
/// Grid weights are in normalized units: the diagonal term is scaled by
/// `N^{-1/2}` and the Gram terms by `N^{-1}`, so both are `O(1)` in operator norm.
pub fn weight_grid_search(
    sym: &SymObservations,
    truth: &[Array1<f64>],
    grid: &WeightGrid,
    opts: &EigenOptions,
) -> Result<GridSearchResult> {
    let k = sym.groups();
    let candidates = grid.candidates(k)?;
    let n_f = sym.big_n() as f64;
    let mut weights = Array2::zeros((k, k));
    let mut xhat = Vec::with_capacity(k);
    for g in 0..k {
        let terms = WeightedPcaTerms::new(sym, g);
        let u = &truth[g];
        let uu = u.dot(u);
        let mut best: Option<(f64, &Vec<f64>, Array1<f64>)> = None;
        let mut warm: Option<Array1<f64>> = None;
        for cand in &candidates {
            if cand.len() != k {
                return Err(Error::Usage(format!("weight vector has {} entries, expected {k}", cand.len())));
            }
            if cand.iter().all(|&w| w == 0.0) {
                continue;
            }
            let raw: Vec<f64> = cand
                .iter()
                .enumerate()
                .map(|(l, &w)| if l == g { w / n_f.sqrt() } else { w / n_f })
                .collect();
            let v = terms.leading(&raw, warm.as_ref().and_then(|w| w.as_slice()), opts)?;
            let c = u.dot(&v);
            let score = c * c / (uu * v.dot(&v)).max(f64::MIN_POSITIVE);
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, cand, v.clone()));
            }
            warm = Some(v);
        }
        let (_, w, v) = best.ok_or_else(|| Error::Usage("weight grid has only zero vectors".into()))?;
        weights.row_mut(g).assign(&Array1::from(w.clone()));
        xhat.push(v);
    }
    Ok(GridSearchResult {
        weights,
        estimates: EstimateSet {
            xhat,
            normalization: Normalization::UnitScaleFree,
        },
    })
}
