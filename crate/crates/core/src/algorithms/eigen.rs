//! Leading eigenpairs of symmetric operators.

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub vector: Array1<f64>,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    /// Residual target `‖Av − θv‖ ≤ tol · max(1, |θ|)`.
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            krylov_dim: 64,
            max_restarts: 200,
            seed: 0x1eaf,
        }
    }
}

fn random_unit(dim: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Array1<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.dot(&v).sqrt();
    v / norm
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Upper bound on the spectral radius from row sums.
pub fn gershgorin_bound(a: &Array2<f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Power iteration on `A + shift·I`, which makes the largest algebraic
/// eigenvalue dominant when `shift` bounds the spectral radius.
pub fn power_iteration<F>(mut apply: F, dim: usize, shift: f64, tol: f64, max_iter: usize, seed: u64) -> Result<EigenPair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::Degenerate("empty operator".into()));
    }
    let mut v = random_unit(dim, seed).to_vec();
    let mut av = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        apply(&v, &mut av);
        let theta: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        residual = v.iter().zip(&av).map(|(x, y)| (y - theta * x).powi(2)).sum::<f64>().sqrt();
        if residual <= tol {
            return Ok(EigenPair {
                vector: Array1::from(v),
                value: theta,
                residual,
            });
        }
        for (x, y) in v.iter_mut().zip(&av) {
            *x = y + shift * *x;
        }
        let n = norm(&v);
        if n == 0.0 {
            return Err(Error::Degenerate("power iteration collapsed to zero".into()));
        }
        v.iter_mut().for_each(|x| *x /= n);
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual,
    })
}

/// Power iteration on a dense symmetric matrix with a Gershgorin shift.
pub fn power_iteration_dense(a: &Array2<f64>, tol: f64, max_iter: usize, seed: u64) -> Result<EigenPair> {
    let shift = gershgorin_bound(a);
    power_iteration(|x, y| dense_apply(a, x, y), a.nrows(), shift, tol, max_iter, seed)
}

pub(crate) fn dense_apply(a: &Array2<f64>, x: &[f64], y: &mut [f64]) {
    let xv = ArrayView1::from(x);
    for (yi, row) in y.iter_mut().zip(a.rows()) {
        *yi = row.dot(&xv);
    }
}

/// Largest algebraic eigenpair by restarted Lanczos with full reorthogonalization.
pub fn lanczos_largest<F>(mut apply: F, dim: usize, start: Option<&[f64]>, opts: &EigenOptions) -> Result<EigenPair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::Degenerate("empty operator".into()));
    }
    let m = opts.krylov_dim.clamp(2, dim.max(2)).min(dim);
    let mut v = match start {
        Some(s) if s.len() == dim && norm(s) > 0.0 => {
            let n = norm(s);
            s.iter().map(|x| x / n).collect::<Vec<f64>>()
        }
        _ => random_unit(dim, opts.seed).to_vec(),
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut w = vec![0.0; dim];
    let mut residual = f64::INFINITY;

    for _ in 0..=opts.max_restarts {
        basis.clear();
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(v.clone());
        let mut last_beta = 0.0;
        let mut ritz_pair = None;
        for j in 0..m {
            apply(&basis[j], &mut w);
            let a: f64 = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c: f64 = w.iter().zip(q).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            last_beta = b;
            let scale = alpha.iter().map(|x: &f64| x.abs()).fold(1.0, f64::max);
            let done = j + 1 == m || b <= 1e-14 * scale;
            if done || (j + 1) % 8 == 0 {
                let (theta, y) = tridiagonal_top(&alpha, &beta);
                // ‖A z − θ z‖ = β_j |y_j| for the Ritz vector z
                let estimate = b * y[y.len() - 1].abs();
                let converged = estimate <= 0.5 * opts.tol * theta.abs().max(1.0);
                if done || converged {
                    ritz_pair = Some((theta, y));
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let (theta, y) = ritz_pair.expect("loop ends with a Ritz pair");
        let mut ritz = vec![0.0; dim];
        for (q, &c) in basis.iter().zip(y.iter()) {
            ritz.iter_mut().zip(q).for_each(|(r, x)| *r += c * x);
        }
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|r| *r /= rn);
        apply(&ritz, &mut w);
        residual = w.iter().zip(&ritz).map(|(a, x)| (a - theta * x).powi(2)).sum::<f64>().sqrt();
        if residual <= opts.tol * theta.abs().max(1.0) || (k == dim && last_beta <= 1e-12) {
            return Ok(EigenPair {
                vector: Array1::from(ritz),
                value: theta,
                residual,
            });
        }
        v = ritz;
    }
    Err(Error::Convergence {
        iterations: opts.max_restarts,
        residual,
    })
}

/// Largest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`.
fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Largest eigenpair of a small dense symmetric matrix by full decomposition.
pub fn dense_largest(a: &Array2<f64>) -> Result<EigenPair> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Degenerate("matrix must be square and nonempty".into()));
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let eig = m.symmetric_eigen();
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    let vector: Array1<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let mut av = vec![0.0; n];
    dense_apply(a, vector.as_slice().expect("contiguous"), &mut av);
    let residual = av.iter().zip(&vector).map(|(y, x)| (y - value * x).powi(2)).sum::<f64>().sqrt();
    Ok(EigenPair { vector, value, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Array2<f64> = Array2::from_shape_simple_fn((n, n), || StandardNormal.sample(&mut rng));
        (&g + &g.t()) * 0.5
    }

    #[test]
    fn diagonal_case() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let p = power_iteration_dense(&a, 1e-10, 10_000, 1).unwrap();
        assert!((p.value - 3.0).abs() < 1e-12);
        assert!((p.vector[0].abs() - 1.0).abs() < 1e-10);
        let l = lanczos_largest(|x, y| dense_apply(&a, x, y), 2, None, &EigenOptions::default()).unwrap();
        assert!((l.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_dominant_spectrum() {
        // largest algebraic, not largest magnitude
        let a = array![[-5.0, 0.0], [0.0, 1.0]];
        let p = power_iteration_dense(&a, 1e-10, 10_000, 2).unwrap();
        assert!((p.value - 1.0).abs() < 1e-10);
        let l = lanczos_largest(|x, y| dense_apply(&a, x, y), 2, None, &EigenOptions::default()).unwrap();
        assert!((l.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn matches_dense_oracle() {
        let a = random_symmetric(50, 3);
        let oracle = dense_largest(&a).unwrap();
        let p = power_iteration_dense(&a, 1e-8, 1_000_000, 4).unwrap();
        assert!((p.value - oracle.value).abs() < 1e-8);
        assert!((p.vector.dot(&oracle.vector).abs() - 1.0).abs() < 1e-6);
        let l = lanczos_largest(|x, y| dense_apply(&a, x, y), 50, None, &EigenOptions::default()).unwrap();
        assert!((l.value - oracle.value).abs() < 1e-9);
        assert!((l.vector.dot(&oracle.vector).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn restarted_lanczos_on_larger_matrix() {
        let a = random_symmetric(300, 5);
        let oracle = dense_largest(&a).unwrap();
        let opts = EigenOptions {
            krylov_dim: 20,
            ..EigenOptions::default()
        };
        let l = lanczos_largest(|x, y| dense_apply(&a, x, y), 300, None, &opts).unwrap();
        assert!((l.value - oracle.value).abs() < 1e-8);
    }

    #[test]
    fn rank_one_recovery() {
        let n = 40;
        let u = random_unit(n, 9);
        let noise = random_symmetric(n, 10);
        for eps in [1e-1, 1e-3, 1e-6] {
            let a = Array2::from_shape_fn((n, n), |(i, j)| 5.0 * u[i] * u[j]) + &noise * eps;
            let p = power_iteration_dense(&a, 1e-10, 100_000, 11).unwrap();
            let corr = p.vector.dot(&u).abs();
            assert!(1.0 - corr < 10.0 * eps, "eps {eps}: {corr}");
        }
    }

    #[test]
    fn convergence_error_carries_residual() {
        let a = random_symmetric(30, 12);
        match power_iteration_dense(&a, 1e-14, 3, 13) {
            Err(Error::Convergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
