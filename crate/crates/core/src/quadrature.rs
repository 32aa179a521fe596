//! Gauss–Hermite rules normalized against the standard Gaussian density.

use crate::error::{Error, Result};

/// Smallest order accepted for entropy integrals.
pub const MIN_ORDER: usize = 8;
/// Order used by the prior functionals unless overridden.
pub const DEFAULT_ORDER: usize = 61;

/// Quadrature rule with `E[g(Z)] ≈ Σ weights[i] · g(nodes[i])` for `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    /// Probabilists' Gauss–Hermite rule of the given order.
    ///
    /// Nodes come from Newton iteration on the Hermite-function recurrence,
    /// which stays finite up to orders of several hundred. The outermost
    /// weights of very high orders fall below the smallest `f64` and are 0.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(Error::Config(format!(
                "quadrature order {order} is below the minimum of {MIN_ORDER}"
            )));
        }
        let (x, w) = physicists_rule(order)?;
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let nodes = x.iter().map(|&xi| std::f64::consts::SQRT_2 * xi).collect();
        let weights = w.iter().map(|&wi| wi / sqrt_pi).collect();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(Z)]` for a standard Gaussian `Z`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * g(z))
            .sum()
    }
}

// Weight e^{-x^2}; returns nodes in descending order.
//
// Starting points are the eigenvalues of the Jacobi matrix; Newton steps on
// the Hermite-function recurrence then polish each node and give its weight.
fn physicists_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^{-1/4}
    const EPS: f64 = 1e-15;
    const MAX_NEWTON: usize = 20;

    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut start: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    start.sort_by(|a, b| b.total_cmp(a));

    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = start[i];
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..MAX_NEWTON {
            // Hermite functions carry the factor e^{-z^2/2}, which keeps the
            // recurrence finite at high orders
            let mut p1 = PIM4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            if pp == 0.0 {
                break;
            }
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "Gauss-Hermite node {i} of order {n} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 * (-z * z).exp() / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_order() {
        assert!(matches!(Quadrature::gauss_hermite(7), Err(Error::Config(_))));
        assert!(Quadrature::gauss_hermite(8).is_ok());
    }

    #[test]
    fn weights_positive_and_normalized() {
        for order in [8, 20, 61, 101, 201, 401] {
            let q = Quadrature::gauss_hermite(order).unwrap();
            assert_eq!(q.order(), order);
            assert!(q.weights().iter().all(|&w| w >= 0.0));
            assert!(q.weights()[order / 2] > 0.0);
            let total: f64 = q.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "order {order}: {total}");
        }
    }

    #[test]
    fn integrates_gaussian_moments() {
        for order in [61, 301] {
            let q = Quadrature::gauss_hermite(order).unwrap();
            moments_match(&q);
        }
    }

    fn moments_match(q: &Quadrature) {
        assert!(q.expect(|z| z).abs() < 1e-12);
        assert!((q.expect(|z| z * z) - 1.0).abs() < 1e-12);
        assert!((q.expect(|z| z.powi(4)) - 3.0).abs() < 1e-11);
        assert!((q.expect(|z| z.powi(6)) - 15.0).abs() < 1e-10);
        // E[cos Z] = e^{-1/2}
        assert!((q.expect(f64::cos) - (-0.5f64).exp()).abs() < 1e-13);
    }
}
