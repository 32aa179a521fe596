use ndarray::{s, Array1, Array2, ArrayView2};

use super::instance::{offsets, ObservationView};
use crate::limits::ProblemSpec;

/// Symmetrized observations `Y^sym_kℓ` for `k ≤ ℓ`.
///
/// Block `(k, ℓ)` carries signal `√(λ^sym_kℓ / N) x_k x_ℓᵀ` in unit-variance
/// noise; diagonal blocks are GOE (diagonal entries of variance 2).
#[derive(Debug, Clone, PartialEq)]
pub struct SymObservations {
    sizes: Vec<usize>,
    big_n: usize,
    lambda_sym: Array2<f64>,
    blocks: Vec<Array2<f64>>,
    side: Vec<Option<Array1<f64>>>,
    side_snr: Vec<f64>,
}

fn tri_index(k: usize, l: usize, groups: usize) -> usize {
    debug_assert!(k <= l);
    k * groups - k * (k + 1) / 2 + l
}

/// Combine `Y_kℓ` and `Y_ℓkᵀ` into the sufficient statistics of the symmetric model.
pub fn symmetrize(obs: ObservationView<'_>, spec: &ProblemSpec, big_n: usize) -> SymObservations {
    let k = obs.groups();
    let lam = spec.lambda();
    let lambda_sym = spec.lambda_sym();
    let mut blocks = Vec::with_capacity(k * (k + 1) / 2);
    for a in 0..k {
        for b in a..k {
            let y_ab = obs.block(a, b);
            let y_ba_t = obs.block(b, a).t();
            let block = if a == b {
                (y_ab + &y_ba_t) * std::f64::consts::FRAC_1_SQRT_2
            } else {
                let total = lambda_sym[[a, b]];
                let (wa, wb) = if total == 0.0 {
                    (0.5f64.sqrt(), 0.5f64.sqrt())
                } else {
                    ((lam[[a, b]] / total).sqrt(), (lam[[b, a]] / total).sqrt())
                };
                y_ab * wa + &(&y_ba_t * wb)
            };
            blocks.push(block);
        }
    }
    SymObservations {
        sizes: obs.sizes.to_vec(),
        big_n,
        lambda_sym,
        blocks,
        side: obs.side.to_vec(),
        side_snr: spec.r().to_vec(),
    }
}

impl SymObservations {
    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.sizes)
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    pub fn lambda_sym(&self) -> &Array2<f64> {
        &self.lambda_sym
    }

    /// `Y^sym_kℓ`, transposing the stored block when `k > ℓ`.
    pub fn block(&self, k: usize, l: usize) -> ArrayView2<'_, f64> {
        if k <= l {
            self.blocks[tri_index(k, l, self.groups())].view()
        } else {
            self.blocks[tri_index(l, k, self.groups())].t()
        }
    }

    pub fn side(&self, k: usize) -> Option<&Array1<f64>> {
        self.side[k].as_ref()
    }

    pub fn side_snr(&self) -> &[f64] {
        &self.side_snr
    }

    /// Block-constant scale `√(λ^sym_kℓ / N)`.
    pub fn coupling(&self, k: usize, l: usize) -> f64 {
        (self.lambda_sym[[k, l]] / self.big_n as f64).sqrt()
    }

    /// Full `n × n` matrix with block `(k, ℓ)` multiplied by `weight(k, ℓ)`.
    pub fn assemble_with<F: Fn(usize, usize) -> f64>(&self, weight: F) -> Array2<f64> {
        let n = self.total();
        let off = self.offsets();
        let mut full = Array2::zeros((n, n));
        for a in 0..self.groups() {
            for b in 0..self.groups() {
                let w = weight(a, b);
                if w == 0.0 {
                    continue;
                }
                let mut dst = full.slice_mut(s![off[a]..off[a] + self.sizes[a], off[b]..off[b] + self.sizes[b]]);
                dst.zip_mut_with(&self.block(a, b), |d, &v| *d = w * v);
            }
        }
        full
    }

    /// `Y*`: the symmetric data matrix with unobserved blocks set to zero.
    pub fn assemble_observed(&self) -> Array2<f64> {
        self.assemble_with(|a, b| if self.lambda_sym[[a, b]] > 0.0 { 1.0 } else { 0.0 })
    }

    /// `G^sym ∘ Y^sym`.
    pub fn assemble_scaled(&self) -> Array2<f64> {
        self.assemble_with(|a, b| self.coupling(a, b))
    }

    /// Entrywise `(ỹ, λ̃)` of the per-coordinate model `ỹ = √λ̃ · Y^sym`, zero diagonals.
    pub fn tilde_matrices(&self) -> (Array2<f64>, Array2<f64>) {
        let mut y = self.assemble_with(|a, b| self.lambda_sym[[a, b]].sqrt());
        let n = self.total();
        let off = self.offsets();
        let mut lam = Array2::zeros((n, n));
        for a in 0..self.groups() {
            for b in 0..self.groups() {
                lam.slice_mut(s![off[a]..off[a] + self.sizes[a], off[b]..off[b] + self.sizes[b]])
                    .fill(self.lambda_sym[[a, b]]);
            }
        }
        for i in 0..n {
            y[[i, i]] = 0.0;
            lam[[i, i]] = 0.0;
        }
        (y, lam)
    }

    /// Log-likelihood of stacked `x` under the symmetric model, up to an `x`-free constant.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let off = self.offsets();
        let nf = self.big_n as f64;
        let mut ll = 0.0;
        for a in 0..self.groups() {
            let xa = &x[off[a]..off[a] + self.sizes[a]];
            for b in a..self.groups() {
                let lam = self.lambda_sym[[a, b]];
                if lam == 0.0 {
                    continue;
                }
                let xb = &x[off[b]..off[b] + self.sizes[b]];
                let y = self.block(a, b);
                let g = (lam / nf).sqrt();
                if a == b {
                    // GOE: off-diagonal pairs once, diagonal entries with variance 2
                    for i in 0..xa.len() {
                        for j in i + 1..xa.len() {
                            let p = xa[i] * xa[j];
                            ll += g * y[[i, j]] * p - 0.5 * lam / nf * p * p;
                        }
                        let p = xa[i] * xa[i];
                        ll += 0.5 * (g * y[[i, i]] * p - 0.5 * lam / nf * p * p);
                    }
                } else {
                    for (i, &xi) in xa.iter().enumerate() {
                        for (j, &xj) in xb.iter().enumerate() {
                            let p = xi * xj;
                            ll += g * y[[i, j]] * p - 0.5 * lam / nf * p * p;
                        }
                    }
                }
            }
        }
        for (k, side) in self.side.iter().enumerate() {
            if let Some(y) = side {
                let r = self.side_snr[k];
                let xk = &x[off[k]..off[k] + self.sizes[k]];
                ll += xk.iter().zip(y).map(|(xi, yi)| r.sqrt() * yi * xi - 0.5 * r * xi * xi).sum::<f64>();
            }
        }
        ll
    }
}
