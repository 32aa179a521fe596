use ndarray::Array1;

use crate::error::{Error, Result};

/// `n⁻² ‖u uᵀ − û ûᵀ‖_F²`, expanded so the outer products are never formed.
pub fn diag_mse_direct(u: &Array1<f64>, uhat: &Array1<f64>) -> f64 {
    let n = u.len() as f64;
    let uu = u.dot(u);
    let hh = uhat.dot(uhat);
    let c = u.dot(uhat);
    ((uu * uu + hh * hh - 2.0 * c * c) / (n * n)).max(0.0)
}

/// Squared cosine between truth and estimate.
pub fn overlap(u: &Array1<f64>, uhat: &Array1<f64>) -> Result<f64> {
    let denom = u.dot(u) * uhat.dot(uhat);
    if denom == 0.0 {
        return Err(Error::Degenerate("overlap of a zero vector".into()));
    }
    Ok(u.dot(uhat).powi(2) / denom)
}

/// The two per-trial terms of the optimally scaled MSE: `‖u‖⁴ / n²` and
/// `(uᵀû)² / (n ‖û‖²)`.
pub fn scaled_terms(u: &Array1<f64>, uhat: &Array1<f64>) -> Result<(f64, f64)> {
    let hh = uhat.dot(uhat);
    if hh == 0.0 || !hh.is_finite() {
        return Err(Error::Degenerate("scale-free estimate is zero".into()));
    }
    let n = u.len() as f64;
    let uu = u.dot(u);
    Ok((uu * uu / (n * n), u.dot(uhat).powi(2) / (n * hh)))
}

/// Single-trial version of the scaled MSE, `‖u‖⁴/n² − ((uᵀû)²/(n‖û‖²))²`.
pub fn diag_mse_scaled(u: &Array1<f64>, uhat: &Array1<f64>) -> Result<f64> {
    let (a, b) = scaled_terms(u, uhat)?;
    Ok(a - b * b)
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let t = xs.len();
    if t == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / t as f64;
    if t == 1 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
    (mean, (var / t as f64).sqrt())
}

/// Pools scale-free estimates across trials as `mean(a) − mean(b)²`, where
/// the optimal radius of the estimate is fitted to the whole batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScaledMseAccumulator {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ScaledMseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, u: &Array1<f64>, uhat: &Array1<f64>) -> Result<()> {
        let (a, b) = scaled_terms(u, uhat)?;
        self.push_terms(a, b);
        Ok(())
    }

    pub fn push_terms(&mut self, a: f64, b: f64) {
        self.a.push(a);
        self.b.push(b);
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn mean(&self) -> f64 {
        let (ma, _) = mean_stderr(&self.a);
        let (mb, _) = mean_stderr(&self.b);
        ma - mb * mb
    }

    /// Delta-method standard error of `mean(a) − mean(b)²`.
    pub fn stderr(&self) -> f64 {
        let t = self.a.len();
        if t < 2 {
            return f64::NAN;
        }
        let tf = t as f64;
        let ma = self.a.iter().sum::<f64>() / tf;
        let mb = self.b.iter().sum::<f64>() / tf;
        let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
        for (a, b) in self.a.iter().zip(&self.b) {
            va += (a - ma).powi(2);
            vb += (b - mb).powi(2);
            cov += (a - ma) * (b - mb);
        }
        let d = tf - 1.0;
        let var = va / d + 4.0 * mb * mb * vb / d - 4.0 * mb * cov / d;
        (var.max(0.0) / tf).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn direct_is_sign_invariant() {
        let u = array![1.0, -2.0, 0.5];
        assert_eq!(diag_mse_direct(&u, &u), 0.0);
        assert_eq!(diag_mse_direct(&u, &(-&u)), 0.0);
        let uu = u.dot(&u);
        assert!((diag_mse_direct(&u, &Array1::zeros(3)) - uu * uu / 9.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_extremes() {
        let u = array![1.0, -1.0, 1.0, 1.0];
        assert!(diag_mse_scaled(&u, &(&u * 7.0)).unwrap().abs() < 1e-15);
        let perp = array![1.0, 1.0, 0.0, 0.0];
        assert!((diag_mse_scaled(&u, &perp).unwrap() - 1.0).abs() < 1e-15);
        assert!(diag_mse_scaled(&u, &Array1::zeros(4)).is_err());
    }

    #[test]
    fn accumulator_pools_before_squaring() {
        let mut acc = ScaledMseAccumulator::new();
        acc.push_terms(1.0, 0.2);
        acc.push_terms(1.0, 0.6);
        assert!((acc.mean() - (1.0 - 0.16)).abs() < 1e-15);
        assert!(acc.stderr() > 0.0);
    }
}
