use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::Prior;

/// Group sizes, priors, block SNRs and side-information SNRs of a K-group model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ProblemSpec {
    beta: Vec<f64>,
    priors: Vec<Prior>,
    lambda: Array2<f64>,
    r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub beta: Vec<f64>,
    pub priors: Vec<Prior>,
    pub lambda: Vec<Vec<f64>>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
}

impl TryFrom<RawSpec> for ProblemSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let k = raw.beta.len();
        if raw.lambda.len() != k || raw.lambda.iter().any(|row| row.len() != k) {
            return Err(Error::Config(format!("lambda must be a {k}x{k} matrix")));
        }
        let flat: Vec<f64> = raw.lambda.into_iter().flatten().collect();
        let lambda = Array2::from_shape_vec((k, k), flat).expect("shape checked above");
        let r = raw.r.unwrap_or_else(|| vec![0.0; k]);
        ProblemSpec::new(raw.beta, raw.priors, lambda, r)
    }
}

impl From<ProblemSpec> for RawSpec {
    fn from(s: ProblemSpec) -> Self {
        RawSpec {
            lambda: s.lambda.outer_iter().map(|row| row.to_vec()).collect(),
            beta: s.beta,
            priors: s.priors,
            r: Some(s.r),
        }
    }
}

impl ProblemSpec {
    pub fn new(beta: Vec<f64>, priors: Vec<Prior>, lambda: Array2<f64>, r: Vec<f64>) -> Result<Self> {
        let k = beta.len();
        if k == 0 {
            return Err(Error::Config("model needs at least one group".into()));
        }
        if priors.len() != k || r.len() != k || lambda.dim() != (k, k) {
            return Err(Error::Config(format!(
                "dimension mismatch: {k} groups, {} priors, {} side SNRs, lambda {:?}",
                priors.len(),
                r.len(),
                lambda.dim()
            )));
        }
        if beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::Config("group ratios beta must be positive and finite".into()));
        }
        if lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("block SNRs lambda must be nonnegative and finite".into()));
        }
        if r.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Config("side-information SNRs r must be nonnegative and finite".into()));
        }
        Ok(Self {
            beta,
            priors,
            lambda,
            r,
        })
    }

    /// Same groups with no side information.
    pub fn without_side_info(beta: Vec<f64>, priors: Vec<Prior>, lambda: Array2<f64>) -> Result<Self> {
        let k = beta.len();
        Self::new(beta, priors, lambda, vec![0.0; k])
    }

    pub fn groups(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn priors(&self) -> &[Prior] {
        &self.priors
    }

    pub fn lambda(&self) -> &Array2<f64> {
        &self.lambda
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// `Λ + Λᵀ`, the coupling seen by the overlaps.
    pub fn lambda_sym(&self) -> Array2<f64> {
        &self.lambda + &self.lambda.t()
    }

    pub fn with_lambda(&self, lambda: Array2<f64>) -> Result<Self> {
        Self::new(self.beta.clone(), self.priors.clone(), lambda, self.r.clone())
    }

    pub fn with_r(&self, r: Vec<f64>) -> Result<Self> {
        Self::new(self.beta.clone(), self.priors.clone(), self.lambda.clone(), r)
    }

    pub fn is_diagonal(&self) -> bool {
        let k = self.groups();
        (0..k).all(|i| (0..k).all(|j| i == j || self.lambda[[i, j]] == 0.0))
    }

    pub fn is_anti_diagonal(&self) -> bool {
        let k = self.groups();
        (0..k).all(|i| (0..k).all(|j| i + j == k - 1 || self.lambda[[i, j]] == 0.0))
    }

    pub fn has_side_info(&self) -> bool {
        self.r.iter().any(|&x| x > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn validates_inputs() {
        let g = Prior::gaussian();
        assert!(ProblemSpec::without_side_info(vec![1.0], vec![g.clone()], array![[1.0]]).is_ok());
        assert!(ProblemSpec::without_side_info(vec![0.0], vec![g.clone()], array![[1.0]]).is_err());
        assert!(ProblemSpec::without_side_info(vec![1.0], vec![g.clone()], array![[-1.0]]).is_err());
        assert!(ProblemSpec::new(vec![1.0], vec![g.clone()], array![[1.0]], vec![-0.5]).is_err());
        assert!(ProblemSpec::without_side_info(vec![1.0, 1.0], vec![g], array![[1.0]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"beta":[0.5,0.5],"priors":[{"kind":"gaussian"},{"kind":"discrete","atoms":[-1,1],"probs":[0.5,0.5]}],"lambda":[[1,2],[0,3]]}"#;
        let spec: ProblemSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.r(), &[0.0, 0.0]);
        assert_eq!(spec.lambda()[[0, 1]], 2.0);
        let back: ProblemSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ProblemSpec>(r#"{"beta":[1],"priors":[{"kind":"gaussian"}],"lambda":[[1]],"extra":0}"#).is_err());
    }

    #[test]
    fn shape_predicates() {
        let g = Prior::gaussian();
        let d = ProblemSpec::without_side_info(vec![1.0, 1.0], vec![g.clone(), g.clone()], array![[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert!(d.is_diagonal() && !d.is_anti_diagonal());
        let a = ProblemSpec::without_side_info(vec![1.0, 1.0], vec![g.clone(), g], array![[0.0, 1.0], [3.0, 0.0]]).unwrap();
        assert!(a.is_anti_diagonal() && !a.is_diagonal());
        assert_eq!(a.lambda_sym(), array![[0.0, 4.0], [4.0, 0.0]]);
    }
}
