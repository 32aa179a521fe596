use ndarray::{array, Array2};

use crate::error::{Error, Result};
use crate::limits::ProblemSpec;
use crate::priors::Prior;

/// Two equal groups with `Λ(α, λ) = λ [[1−α, α], [α, 1−α]]`.
///
/// The global scale is `N = 2n`, so each group has `β = ½`.
pub fn make_two_group(alpha: f64, lambda: f64, prior1: Prior, prior2: Prior) -> Result<ProblemSpec> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in [0, 1]")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let lam = array![[1.0 - alpha, alpha], [alpha, 1.0 - alpha]] * lambda;
    ProblemSpec::without_side_info(vec![0.5, 0.5], vec![prior1, prior2], lam)
}

/// Three groups with equal SNR on the blocks in `support` (0-based `(k, ℓ)`),
/// scaled so that `βᵀΛβ = λ`.
pub fn make_three_group(support: &[(usize, usize)], lambda: f64, beta: [f64; 3], priors: [Prior; 3]) -> Result<ProblemSpec> {
    if support.is_empty() {
        return Err(Error::Usage("three-group support is empty".into()));
    }
    if let Some(&(k, l)) = support.iter().find(|&&(k, l)| k > 2 || l > 2) {
        return Err(Error::Usage(format!("block ({k}, {l}) is outside a 3x3 model")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let mut blocks = support.to_vec();
    blocks.sort_unstable();
    blocks.dedup();
    let mut pattern = Array2::<f64>::zeros((3, 3));
    for &(k, l) in &blocks {
        pattern[[k, l]] = 1.0;
    }
    let norm: f64 = blocks.iter().map(|&(k, l)| beta[k] * beta[l]).sum();
    if norm <= 0.0 {
        return Err(Error::Usage("support has zero normalizer".into()));
    }
    ProblemSpec::without_side_info(beta.to_vec(), priors.to_vec(), pattern * (lambda / norm))
}

/// Parse a support label such as `"11,23"` (1-based block indices).
pub fn parse_support(label: &str) -> Result<Vec<(usize, usize)>> {
    label
        .split(',')
        .map(|tok| {
            let digits: Vec<u32> = tok.trim().chars().filter_map(|c| c.to_digit(10)).collect();
            match digits[..] {
                [k, l] if (1..=9).contains(&k) && (1..=9).contains(&l) => Ok((k as usize - 1, l as usize - 1)),
                _ => Err(Error::Config(format!("bad block label {tok:?} in support {label:?}"))),
            }
        })
        .collect()
}

/// Heteroskedastic PCA: group 0 is `u`, groups `1..=L` are the `v_ℓ`, and
/// `λ_{0ℓ} = σ_ℓ⁻²`. All priors are Gaussian.
pub fn make_hetero_pca(beta0: f64, betas: &[f64], sigmas: &[f64]) -> Result<ProblemSpec> {
    if betas.len() != sigmas.len() {
        return Err(Error::Usage("betas and sigmas must have equal length".into()));
    }
    if sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Domain("noise levels must be positive".into()));
    }
    let k = betas.len() + 1;
    let mut lam = Array2::zeros((k, k));
    for (l, s) in sigmas.iter().enumerate() {
        lam[[0, l + 1]] = s.powi(-2);
    }
    let beta = std::iter::once(beta0).chain(betas.iter().copied()).collect();
    ProblemSpec::without_side_info(beta, vec![Prior::gaussian(); k], lam)
}

/// Contextual SBM: a graph on `u` and covariates `u vᵀ`; `v` is Gaussian.
pub fn make_csbm(lambda_uu: f64, lambda_uv: f64, beta: [f64; 2], prior_u: Prior) -> Result<ProblemSpec> {
    ProblemSpec::without_side_info(
        beta.to_vec(),
        vec![prior_u, Prior::gaussian()],
        array![[lambda_uu, lambda_uv], [0.0, 0.0]],
    )
}
