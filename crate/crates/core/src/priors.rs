//! Scalar source distributions and their Gaussian-channel functionals.
//!
//! Every group's prior enters the limit formula only through the relative
//! entropy `D(γ) = D(P_{√γ x + w} ‖ P_w)` of a scalar Gaussian channel, and
//! enters AMP only through the posterior mean and variance of the tilted
//! measure `exp(a x − b x²/2) dP(x)`. Both are computed here.
//!
//! For the unit Gaussian all quantities are closed form. For finite discrete
//! priors the channel output is a Gaussian mixture; expectations over it are
//! taken component by component, centred on each component, and all exponent
//! sums go through log-sum-exp.
//!
//! The integrands are analytic in a strip of half-width about `π / (√γ s)`
//! around the real axis, where `s` is the spread of the atoms. The default
//! rule is therefore a truncated trapezoid rule with step `0.7 / (√γ s)`,
//! which converges geometrically at every SNR. Fixed Gauss–Hermite rules can
//! still be passed to the `*_with` variants.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Quadrature, MIN_ORDER};

const PROB_SUM_TOL: f64 = 1e-12;
const TRAPEZOID_HALF_WIDTH: f64 = 10.0;
const TRAPEZOID_MAX_STEP: f64 = 0.25;
const TRAPEZOID_MAX_NODES: usize = 4001;
const SECOND_MOMENT_TOL: f64 = 1e-9;

/// Finite discrete distribution with unit second moment.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior {
    atoms: Vec<f64>,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    mean: f64,
    fourth_moment: f64,
    entropy: f64,
    cumulative: Vec<f64>,
    spread: f64,
}

impl DiscretePrior {
    fn build(atoms: Vec<f64>, probs: Vec<f64>) -> Self {
        let mean = atoms.iter().zip(&probs).map(|(a, p)| a * p).sum();
        let fourth_moment = atoms.iter().zip(&probs).map(|(a, p)| p * a.powi(4)).sum();
        let entropy = -probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>();
        let log_probs = probs.iter().map(|&p| p.ln()).collect();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        let lo = atoms.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = atoms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            atoms,
            probs,
            log_probs,
            mean,
            fourth_moment,
            entropy,
            cumulative,
            spread: hi - lo,
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    // (mean, variance) of p_j exp(a x_j - b x_j^2 / 2), max-subtracted.
    fn tilted_moments(&self, a: f64, b: f64) -> (f64, f64) {
        let mut max_log = f64::NEG_INFINITY;
        for (&x, &lp) in self.atoms.iter().zip(&self.log_probs) {
            let l = lp + a * x - 0.5 * b * x * x;
            if l > max_log {
                max_log = l;
            }
        }
        let mut z = 0.0;
        let mut s1 = 0.0;
        for (&x, &lp) in self.atoms.iter().zip(&self.log_probs) {
            let w = (lp + a * x - 0.5 * b * x * x - max_log).exp();
            z += w;
            s1 += w * x;
        }
        let mean = s1 / z;
        let mut var = 0.0;
        for (&x, &lp) in self.atoms.iter().zip(&self.log_probs) {
            let w = (lp + a * x - 0.5 * b * x * x - max_log).exp();
            let d = x - mean;
            var += w * d * d;
        }
        (mean, var / z)
    }

    // log sum_j p_j exp(s a_j y - gamma a_j^2 / 2)
    fn log_density_ratio(&self, s: f64, gamma: f64, y: f64) -> f64 {
        let mut max_log = f64::NEG_INFINITY;
        for (&x, &lp) in self.atoms.iter().zip(&self.log_probs) {
            let l = lp + s * x * y - 0.5 * gamma * x * x;
            if l > max_log {
                max_log = l;
            }
        }
        let sum: f64 = self
            .atoms
            .iter()
            .zip(&self.log_probs)
            .map(|(&x, &lp)| (lp + s * x * y - 0.5 * gamma * x * x - max_log).exp())
            .sum();
        max_log + sum.ln()
    }

    // Expectation over Y = sqrt(gamma) X + Z of g(y), one quadrature per component.
    fn channel_expect<F: FnMut(f64) -> f64>(&self, gamma: f64, quad: &Quadrature, mut g: F) -> f64 {
        let s = gamma.sqrt();
        self.atoms
            .iter()
            .zip(&self.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&a, &p)| p * quad.expect(|z| g(s * a + z)))
            .sum()
    }

    // Same expectation with the trapezoid rule sized for this SNR.
    fn channel_expect_fine<F: FnMut(f64) -> f64>(&self, gamma: f64, mut g: F) -> f64 {
        let s = gamma.sqrt();
        let mut step = TRAPEZOID_MAX_STEP;
        if self.spread > 0.0 {
            step = step.min(0.7 / (s * self.spread));
        }
        let half = ((TRAPEZOID_HALF_WIDTH / step).ceil() as usize).min(TRAPEZOID_MAX_NODES / 2);
        let step = TRAPEZOID_HALF_WIDTH / half as f64;
        let norm = step / (2.0 * std::f64::consts::PI).sqrt();
        let weights: Vec<f64> = (0..=half)
            .map(|k| {
                let z = k as f64 * step;
                norm * (-0.5 * z * z).exp()
            })
            .collect();
        let mut total = 0.0;
        for (&a, &p) in self.atoms.iter().zip(&self.probs) {
            if p == 0.0 {
                continue;
            }
            let centre = s * a;
            let mut acc = weights[0] * g(centre);
            for (k, &w) in weights.iter().enumerate().skip(1) {
                let z = k as f64 * step;
                acc += w * (g(centre + z) + g(centre - z));
            }
            total += p * acc;
        }
        total
    }
}

#[derive(Debug, Clone, Copy)]
enum Functional {
    Entropy,
    Deriv,
    SecondDeriv,
}

/// Source distribution for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorConfig", into = "PriorConfig")]
pub enum Prior {
    UnitGaussian,
    Discrete(DiscretePrior),
}

/// Serialized form of a prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    Gaussian {},
    Discrete {
        atoms: Vec<f64>,
        probs: Vec<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        unnormalized: bool,
    },
}

impl TryFrom<PriorConfig> for Prior {
    type Error = Error;

    fn try_from(cfg: PriorConfig) -> Result<Self> {
        match cfg {
            PriorConfig::Gaussian {} => Ok(Prior::UnitGaussian),
            PriorConfig::Discrete {
                atoms,
                probs,
                unnormalized: false,
            } => Prior::discrete(atoms, probs),
            PriorConfig::Discrete {
                atoms,
                probs,
                unnormalized: true,
            } => Prior::discrete_unnormalized(atoms, probs),
        }
    }
}

impl From<Prior> for PriorConfig {
    fn from(p: Prior) -> Self {
        match p {
            Prior::UnitGaussian => PriorConfig::Gaussian {},
            Prior::Discrete(d) => PriorConfig::Discrete {
                atoms: d.atoms,
                probs: d.probs,
                unnormalized: false,
            },
        }
    }
}

fn validate_pmf(atoms: &[f64], probs: &[f64]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::Config("discrete prior needs at least one atom".into()));
    }
    if atoms.len() != probs.len() {
        return Err(Error::Config(format!(
            "discrete prior has {} atoms but {} probabilities",
            atoms.len(),
            probs.len()
        )));
    }
    if atoms.iter().chain(probs).any(|v| !v.is_finite()) {
        return Err(Error::Config("discrete prior entries must be finite".into()));
    }
    if probs.iter().any(|&p| p < 0.0) {
        return Err(Error::Config("discrete prior probabilities must be nonnegative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::Config(format!(
            "discrete prior probabilities sum to {total}, expected 1"
        )));
    }
    for (i, a) in atoms.iter().enumerate() {
        if atoms[..i].contains(a) {
            return Err(Error::Config(format!("discrete prior atom {a} is repeated")));
        }
    }
    Ok(())
}

fn second_moment(atoms: &[f64], probs: &[f64]) -> f64 {
    atoms.iter().zip(probs).map(|(a, p)| p * a * a).sum()
}

impl Prior {
    pub fn gaussian() -> Self {
        Prior::UnitGaussian
    }

    /// Discrete prior whose second moment must already equal one.
    pub fn discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        validate_pmf(&atoms, &probs)?;
        let m2 = second_moment(&atoms, &probs);
        if (m2 - 1.0).abs() > SECOND_MOMENT_TOL {
            return Err(Error::Config(format!(
                "discrete prior has second moment {m2}, expected 1 (set `unnormalized` to rescale)"
            )));
        }
        Ok(Prior::Discrete(DiscretePrior::build(atoms, probs)))
    }

    /// Discrete prior with atoms rescaled to unit second moment.
    pub fn discrete_unnormalized(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        validate_pmf(&atoms, &probs)?;
        let m2 = second_moment(&atoms, &probs);
        if m2 <= 0.0 {
            return Err(Error::Config("discrete prior is a point mass at zero".into()));
        }
        let scale = m2.sqrt().recip();
        let atoms = atoms.into_iter().map(|a| a * scale).collect();
        Ok(Prior::Discrete(DiscretePrior::build(atoms, probs)))
    }

    /// Discrete prior shifted to mean zero and scaled to unit variance.
    pub fn standardized(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        validate_pmf(&atoms, &probs)?;
        let mean: f64 = atoms.iter().zip(&probs).map(|(a, p)| a * p).sum();
        let centered: Vec<f64> = atoms.iter().map(|a| a - mean).collect();
        Self::discrete_unnormalized(centered, probs)
    }

    /// Uniform on {−1, +1}.
    pub fn rademacher() -> Self {
        Prior::Discrete(DiscretePrior::build(vec![-1.0, 1.0], vec![0.5, 0.5]))
    }

    /// Bernoulli(p) shifted and scaled to mean zero, variance one.
    ///
    /// For `p = 0.1` the atoms are `−1/3` (w.p. 0.9) and `3` (w.p. 0.1).
    pub fn bernoulli_standardized(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("Bernoulli parameter {p} not in (0, 1)")));
        }
        let sd = (p * (1.0 - p)).sqrt();
        Self::discrete(vec![-p / sd, (1.0 - p) / sd], vec![1.0 - p, p])
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Prior::UnitGaussian)
    }

    pub fn as_discrete(&self) -> Option<&DiscretePrior> {
        match self {
            Prior::Discrete(d) => Some(d),
            Prior::UnitGaussian => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Prior::UnitGaussian => 0.0,
            Prior::Discrete(d) => d.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        1.0 - self.mean() * self.mean()
    }

    pub fn fourth_moment(&self) -> f64 {
        match self {
            Prior::UnitGaussian => 3.0,
            Prior::Discrete(d) => d.fourth_moment,
        }
    }

    /// Limit of `D(γ) − γ/2` as `γ → ∞`, i.e. minus the entropy; `−∞` for the Gaussian.
    pub fn relative_entropy_offset_limit(&self) -> f64 {
        match self {
            Prior::UnitGaussian => f64::NEG_INFINITY,
            Prior::Discrete(d) => -d.entropy,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Prior::UnitGaussian => StandardNormal.sample(rng),
            Prior::Discrete(d) => {
                let u: f64 = rng.random();
                let idx = d
                    .cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(d.atoms.len() - 1);
                d.atoms[idx]
            }
        }
    }

    /// Relative entropy `D(γ)`.
    pub fn relative_entropy(&self, gamma: f64) -> Result<f64> {
        self.functional(gamma, Functional::Entropy, None)
    }

    /// `D(γ)` with an explicit quadrature rule for discrete priors.
    pub fn relative_entropy_with(&self, gamma: f64, quad: &Quadrature) -> Result<f64> {
        self.functional(gamma, Functional::Entropy, Some(quad))
    }

    /// `D'(γ) = E[E[x | y]²] / 2`.
    pub fn relative_entropy_deriv(&self, gamma: f64) -> Result<f64> {
        self.functional(gamma, Functional::Deriv, None)
    }

    pub fn relative_entropy_deriv_with(&self, gamma: f64, quad: &Quadrature) -> Result<f64> {
        self.functional(gamma, Functional::Deriv, Some(quad))
    }

    /// `D''(γ) = E[Var(x | y)²] / 2`, from `mmse'(γ) = −E[Var(x | y)²]`.
    pub fn relative_entropy_second_deriv(&self, gamma: f64) -> Result<f64> {
        self.functional(gamma, Functional::SecondDeriv, None)
    }

    pub fn relative_entropy_second_deriv_with(&self, gamma: f64, quad: &Quadrature) -> Result<f64> {
        self.functional(gamma, Functional::SecondDeriv, Some(quad))
    }

    fn functional(&self, gamma: f64, which: Functional, quad: Option<&Quadrature>) -> Result<f64> {
        check_gamma(gamma)?;
        if let Some(q) = quad {
            if q.order() < MIN_ORDER {
                return Err(Error::Config(format!(
                    "quadrature order {} is below the minimum of {MIN_ORDER}",
                    q.order()
                )));
            }
        }
        let d = match self {
            Prior::UnitGaussian => {
                return Ok(match which {
                    Functional::Entropy => 0.5 * (gamma - gamma.ln_1p()),
                    Functional::Deriv => 0.5 * gamma / (1.0 + gamma),
                    Functional::SecondDeriv => 0.5 / ((1.0 + gamma) * (1.0 + gamma)),
                })
            }
            Prior::Discrete(d) => d,
        };
        if gamma == 0.0 {
            return Ok(match which {
                Functional::Entropy => 0.0,
                Functional::Deriv => 0.5 * d.mean * d.mean,
                Functional::SecondDeriv => 0.5 * d.tilted_moments(0.0, 0.0).1.powi(2),
            });
        }
        let s = gamma.sqrt();
        let integrand = |y: f64| match which {
            Functional::Entropy => d.log_density_ratio(s, gamma, y),
            Functional::Deriv => d.tilted_moments(s * y, gamma).0.powi(2),
            Functional::SecondDeriv => d.tilted_moments(s * y, gamma).1.powi(2),
        };
        let value = match quad {
            Some(q) => d.channel_expect(gamma, q, integrand),
            None => d.channel_expect_fine(gamma, integrand),
        };
        Ok(match which {
            Functional::Entropy => value.max(0.0),
            _ => 0.5 * value,
        })
    }

    /// Scalar-channel MMSE `1 − 2 D'(γ)`.
    pub fn mmse(&self, gamma: f64) -> Result<f64> {
        Ok(1.0 - 2.0 * self.relative_entropy_deriv(gamma)?)
    }

    /// Mean and variance of the tilted measure `exp(a x − b x²/2) dP(x)`.
    ///
    /// For the Gaussian the tilt must satisfy `b > −1`; discrete priors accept
    /// any finite `b`.
    pub fn posterior_moments(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("non-finite tilt (a = {a}, b = {b})")));
        }
        match self {
            Prior::UnitGaussian => {
                let prec = 1.0 + b;
                if prec <= 0.0 {
                    return Err(Error::Domain(format!(
                        "Gaussian tilt b = {b} makes the posterior improper"
                    )));
                }
                Ok((a / prec, 1.0 / prec))
            }
            Prior::Discrete(d) => Ok(d.tilted_moments(a, b)),
        }
    }

    /// `η(a, b)`: posterior mean of the tilted measure.
    pub fn posterior_mean(&self, a: f64, b: f64) -> Result<f64> {
        self.posterior_moments(a, b).map(|(m, _)| m)
    }

    /// `η'(a, b) = ∂η/∂a`: posterior variance of the tilted measure.
    pub fn posterior_variance(&self, a: f64, b: f64) -> Result<f64> {
        self.posterior_moments(a, b).map(|(_, v)| v)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Domain(format!("SNR gamma = {gamma} must be nonnegative")));
    }
    if gamma.is_infinite() {
        return Err(Error::Domain("SNR gamma must be finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bernoulli() -> Prior {
        Prior::bernoulli_standardized(0.1).unwrap()
    }

    fn sparse_nonzero_mean() -> Prior {
        Prior::discrete(vec![0.0, 10f64.sqrt()], vec![0.9, 0.1]).unwrap()
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = Prior::gaussian();
        assert_eq!(g.relative_entropy(0.0).unwrap(), 0.0);
        let d1 = g.relative_entropy(1.0).unwrap();
        assert!((d1 - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((d1 - 0.153_426_4).abs() < 1e-7);
        assert_eq!(g.relative_entropy_deriv(0.0).unwrap(), 0.0);
        assert_eq!(g.relative_entropy_deriv(1.0).unwrap(), 0.25);
        assert_eq!(g.posterior_mean(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(g.posterior_variance(0.7, 0.0).unwrap(), 1.0);
        assert_eq!(g.fourth_moment(), 3.0);
    }

    #[test]
    fn rademacher_posterior() {
        let r = Prior::rademacher();
        let m = r.posterior_mean(3.0, 7.0).unwrap();
        assert!((m - 3f64.tanh()).abs() < 1e-15);
        assert!((m - 0.995_054_8).abs() < 1e-7);
        assert_eq!(r.posterior_variance(0.0, 5.0).unwrap(), 1.0);
        let v = r.posterior_variance(1.2, 0.3).unwrap();
        assert!((v - (1.0 - 1.2f64.tanh().powi(2))).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_atoms_standardized() {
        let b = bernoulli();
        let d = b.as_discrete().unwrap();
        assert!((d.atoms()[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((d.atoms()[1] - 3.0).abs() < 1e-15);
        assert!(b.mean().abs() < 1e-15);
        assert!((b.variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn untilted_posterior_is_prior_mean() {
        let p = sparse_nonzero_mean();
        let expected = 0.1 * 10f64.sqrt();
        assert!((p.posterior_mean(0.0, 0.0).unwrap() - expected).abs() < 1e-15);
        assert!((p.mean() - expected).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_flag_rescales() {
        let p = Prior::discrete_unnormalized(vec![-2.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(p, Prior::rademacher());
        assert!(Prior::discrete(vec![-2.0, 2.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn rejects_bad_pmf() {
        assert!(Prior::discrete(vec![1.0, -1.0], vec![0.5, 0.4]).is_err());
        assert!(Prior::discrete(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Prior::discrete(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(Prior::discrete(vec![-1.0, 1.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn domain_errors() {
        let g = Prior::gaussian();
        assert!(matches!(g.relative_entropy(-0.1), Err(Error::Domain(_))));
        assert!(matches!(g.relative_entropy_deriv(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(g.posterior_mean(f64::INFINITY, 0.0), Err(Error::Domain(_))));
        assert!(matches!(g.posterior_mean(1.0, -1.0), Err(Error::Domain(_))));
        let r = Prior::rademacher();
        assert!(matches!(r.posterior_variance(0.0, f64::NAN), Err(Error::Domain(_))));
        let q7 = Quadrature::gauss_hermite(7);
        assert!(matches!(q7, Err(Error::Config(_))));
    }

    #[test]
    fn large_tilts_do_not_overflow() {
        let b = bernoulli();
        let (m, v) = b.posterior_moments(1e4, -50.0).unwrap();
        assert!(m.is_finite() && v.is_finite() && v >= 0.0);
        let (m, v) = b.posterior_moments(-1e5, 1e3).unwrap();
        assert!((m + 1.0 / 3.0).abs() < 1e-12 && v >= 0.0);
    }

    #[test]
    fn rademacher_entropy_against_monte_carlo() {
        // D(2) = E_Y[log f_Y(Y) / φ(Y)], Y = √2 x + w, from 10^6 draws.
        let prior = Prior::rademacher();
        let gamma = 2.0f64;
        let s = gamma.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
        let n = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let x = prior.sample(&mut rng);
            let w: f64 = StandardNormal.sample(&mut rng);
            let y = s * x + w;
            // log(cosh(s y)) − γ/2
            let v = (s * y).abs() + (-2.0 * (s * y).abs()).exp().ln_1p() - 2f64.ln() - gamma / 2.0;
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let d = prior.relative_entropy(gamma).unwrap();
        assert!((d - mean).abs() < 3.0 * se, "quadrature {d} vs MC {mean} ± {se}");
    }

    #[test]
    fn gaussian_discretization_converges_to_closed_form() {
        let gamma = 1.5;
        let exact = Prior::gaussian().relative_entropy(gamma).unwrap();
        let mut last_err = f64::INFINITY;
        for m in [8, 16, 32, 64] {
            let rule = Quadrature::gauss_hermite(m).unwrap();
            let p = Prior::discrete_unnormalized(rule.nodes().to_vec(), {
                let w = rule.weights().to_vec();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|x| x / t).collect()
            })
            .unwrap();
            let err = (p.relative_entropy(gamma).unwrap() - exact).abs();
            assert!(err < last_err || err < 1e-12, "m = {m}: {err} !< {last_err}");
            last_err = err;
        }
        assert!(last_err < 1e-10);
    }

    #[test]
    fn samples_follow_atoms() {
        let b = bernoulli();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let hits = (0..n).filter(|_| b.sample(&mut rng) > 0.0).count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.1).abs() < 4.0 * (0.09f64 / n as f64).sqrt());
    }

    #[test]
    fn serde_forms() {
        let g: Prior = serde_json::from_str(r#"{"kind":"gaussian"}"#).unwrap();
        assert!(g.is_gaussian());
        let r: Prior =
            serde_json::from_str(r#"{"kind":"discrete","atoms":[-1,1],"probs":[0.5,0.5]}"#).unwrap();
        assert_eq!(r, Prior::rademacher());
        let u: Prior = serde_json::from_str(
            r#"{"kind":"discrete","atoms":[-3,3],"probs":[0.5,0.5],"unnormalized":true}"#,
        )
        .unwrap();
        assert_eq!(u, Prior::rademacher());
        assert!(serde_json::from_str::<Prior>(r#"{"kind":"gaussian","x":1}"#).is_err());
        assert!(serde_json::from_str::<Prior>(
            r#"{"kind":"discrete","atoms":[-3,3],"probs":[0.5,0.5]}"#
        )
        .is_err());
        let back = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Prior>(&back).unwrap(), r);
    }
}
