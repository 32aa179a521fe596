use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::ProblemSpec;

/// Largest instance `sample_instance` will allocate, in bytes.
pub const MEMORY_BUDGET_BYTES: usize = 4 << 30;

const STREAM_TRUTH: u64 = 1 << 40;
const STREAM_BLOCK: u64 = 2 << 40;
const STREAM_SIDE: u64 = 3 << 40;

/// A `ProblemSpec` together with a finite global scale, group sizes and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub spec: ProblemSpec,
    pub big_n: usize,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

/// `n_k ≈ β_k N` by largest remainder, so `Σ n_k = round(Σ β_k N)`, each at least 1.
pub fn group_sizes(beta: &[f64], big_n: usize) -> Vec<usize> {
    let raw: Vec<f64> = beta.iter().map(|b| b * big_n as f64).collect();
    let target = raw.iter().sum::<f64>().round() as usize;
    let mut sizes: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..beta.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let mut deficit = target.saturating_sub(sizes.iter().sum());
    for &i in order.iter().cycle().take(beta.len() * 2) {
        if deficit == 0 {
            break;
        }
        sizes[i] += 1;
        deficit -= 1;
    }
    for s in &mut sizes {
        *s = (*s).max(1);
    }
    sizes
}

impl InstanceSpec {
    pub fn new(spec: ProblemSpec, big_n: usize, seed: u64) -> Result<Self> {
        if big_n == 0 {
            return Err(Error::Config("global scale N must be positive".into()));
        }
        let sizes = group_sizes(spec.beta(), big_n);
        Ok(Self {
            spec,
            big_n,
            sizes,
            seed,
        })
    }

    /// Instance with `N = nK`, so groups have `n` rows on average.
    pub fn per_group(spec: ProblemSpec, n: usize, seed: u64) -> Result<Self> {
        Self::new(spec.clone(), n * spec.groups(), seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Start of each group inside the stacked vector.
    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.sizes)
    }

    fn check_budget(&self) -> Result<()> {
        let n = self.total() as u128;
        // raw blocks plus the symmetrized copy
        let bytes = n * n * 8 * 2;
        if bytes > MEMORY_BUDGET_BYTES as u128 {
            return Err(Error::Resource(format!(
                "instance with {n} rows needs {bytes} bytes, above the budget of {MEMORY_BUDGET_BYTES}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|&s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    use rand::Rng;
    Array1::from_iter((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Data blocks, side channels and the latent vectors that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub sizes: Vec<usize>,
    /// `K × K` blocks in row-major order.
    pub blocks: Vec<Array2<f64>>,
    pub side: Vec<Option<Array1<f64>>>,
    pub truth: Vec<Array1<f64>>,
}

/// Truth-free view handed to estimators.
#[derive(Debug, Clone, Copy)]
pub struct ObservationView<'a> {
    pub sizes: &'a [usize],
    pub blocks: &'a [Array2<f64>],
    pub side: &'a [Option<Array1<f64>>],
}

impl ObservationView<'_> {
    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn block(&self, k: usize, l: usize) -> &Array2<f64> {
        &self.blocks[k * self.groups() + l]
    }
}

impl Observations {
    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn block(&self, k: usize, l: usize) -> &Array2<f64> {
        &self.blocks[k * self.groups() + l]
    }

    pub fn redacted(&self) -> ObservationView<'_> {
        ObservationView {
            sizes: &self.sizes,
            blocks: &self.blocks,
            side: &self.side,
        }
    }

    /// Stacked truth `x = (x_1, …, x_K)`.
    pub fn stacked_truth(&self) -> Array1<f64> {
        Array1::from_iter(self.truth.iter().flat_map(|x| x.iter().copied()))
    }

    /// Log-likelihood of stacked latent vector `x`, dropping terms that do not depend on `x`.
    pub fn log_likelihood(&self, spec: &ProblemSpec, big_n: usize, x: &[f64]) -> f64 {
        let k = self.groups();
        let off = offsets(&self.sizes);
        let part = |g: usize| &x[off[g]..off[g] + self.sizes[g]];
        let mut ll = 0.0;
        for a in 0..k {
            for b in 0..k {
                let lam = spec.lambda()[[a, b]];
                if lam == 0.0 {
                    continue;
                }
                let s = (lam / big_n as f64).sqrt();
                let (xa, xb) = (part(a), part(b));
                let y = self.block(a, b);
                let mut cross = 0.0;
                for (i, &xi) in xa.iter().enumerate() {
                    let row = y.row(i);
                    cross += xi * row.iter().zip(xb).map(|(v, w)| v * w).sum::<f64>();
                }
                let na: f64 = xa.iter().map(|v| v * v).sum();
                let nb: f64 = xb.iter().map(|v| v * v).sum();
                ll += s * cross - 0.5 * lam / big_n as f64 * na * nb;
            }
        }
        for (g, side) in self.side.iter().enumerate() {
            if let Some(y) = side {
                let r = spec.r()[g];
                let xg = part(g);
                ll += r.sqrt() * y.iter().zip(xg).map(|(a, b)| a * b).sum::<f64>()
                    - 0.5 * r * xg.iter().map(|v| v * v).sum::<f64>();
            }
        }
        ll
    }
}

/// Draw one instance of the groupwise model.
///
/// Every truth vector, block and side channel has its own ChaCha stream, so
/// the draw of one never depends on which others are generated.
pub fn sample_instance(ispec: &InstanceSpec) -> Result<Observations> {
    ispec.check_budget()?;
    let spec = &ispec.spec;
    let k = spec.groups();
    if ispec.sizes.len() != k || ispec.sizes.contains(&0) {
        return Err(Error::Config("group sizes must be positive, one per group".into()));
    }
    let truth: Vec<Array1<f64>> = (0..k)
        .map(|g| {
            let mut rng = stream(ispec.seed, STREAM_TRUTH | g as u64);
            Array1::from_iter((0..ispec.sizes[g]).map(|_| spec.priors()[g].sample(&mut rng)))
        })
        .collect();
    let n_f = ispec.big_n as f64;
    let mut blocks = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let mut rng = stream(ispec.seed, STREAM_BLOCK | ((a as u64) << 20) | b as u64);
            let s = (spec.lambda()[[a, b]] / n_f).sqrt();
            let (xa, xb) = (&truth[a], &truth[b]);
            let mut y = Array2::<f64>::zeros((ispec.sizes[a], ispec.sizes[b]));
            for (i, mut row) in y.rows_mut().into_iter().enumerate() {
                let si = s * xa[i];
                for (j, v) in row.iter_mut().enumerate() {
                    use rand::Rng;
                    *v = si * xb[j] + rng.sample::<f64, _>(StandardNormal);
                }
            }
            blocks.push(y);
        }
    }
    let side = (0..k)
        .map(|g| {
            let r = spec.r()[g];
            (r > 0.0).then(|| {
                let mut rng = stream(ispec.seed, STREAM_SIDE | g as u64);
                let w = gaussian_vec(&mut rng, ispec.sizes[g]);
                &truth[g] * r.sqrt() + w
            })
        })
        .collect();
    Ok(Observations {
        sizes: ispec.sizes.clone(),
        blocks,
        side,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_two_group;
    use crate::priors::Prior;
    use ndarray::array;

    #[test]
    fn sizes_by_largest_remainder() {
        assert_eq!(group_sizes(&[0.5, 0.5], 2048), vec![1024, 1024]);
        assert_eq!(group_sizes(&[1.0 / 3.0; 3], 10), vec![4, 3, 3]);
        assert_eq!(group_sizes(&[0.01, 0.99], 10), vec![1, 10]);
        assert_eq!(group_sizes(&[0.2, 0.4, 0.4], 5).iter().sum::<usize>(), 5);
    }

    #[test]
    fn pure_noise_statistics() {
        let spec = ProblemSpec::without_side_info(
            vec![0.5, 0.5],
            vec![Prior::gaussian(), Prior::rademacher()],
            Array2::zeros((2, 2)),
        )
        .unwrap();
        let obs = sample_instance(&InstanceSpec::new(spec, 400, 7).unwrap()).unwrap();
        for y in &obs.blocks {
            let n = y.len() as f64;
            let mean = y.sum() / n;
            let var = y.mapv(|v| (v - mean).powi(2)).sum() / n;
            assert!(mean.abs() < 4.0 / n.sqrt());
            assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
        }
        assert!(obs.side.iter().all(Option::is_none));
        assert!(obs.truth[1].iter().all(|&v| v.abs() == 1.0));
    }

    #[test]
    fn deterministic_and_stream_separated() {
        let spec = make_two_group(0.3, 2.0, Prior::gaussian(), Prior::gaussian()).unwrap();
        let is = InstanceSpec::per_group(spec.clone(), 32, 99).unwrap();
        let a = sample_instance(&is).unwrap();
        let b = sample_instance(&is).unwrap();
        assert_eq!(a, b);
        // adding side information leaves blocks and truth untouched
        let with_side = InstanceSpec { spec: spec.with_r(vec![1.0, 0.0]).unwrap(), ..is.clone() };
        let c = sample_instance(&with_side).unwrap();
        assert_eq!(a.blocks, c.blocks);
        assert_eq!(a.truth, c.truth);
        assert!(c.side[0].is_some() && c.side[1].is_none());
        let d = sample_instance(&is.with_seed(100)).unwrap();
        assert_ne!(a.truth, d.truth);
    }

    #[test]
    fn memory_budget() {
        let spec = ProblemSpec::without_side_info(vec![1.0], vec![Prior::gaussian()], array![[1.0]]).unwrap();
        let is = InstanceSpec::new(spec, 1 << 20, 0).unwrap();
        assert!(matches!(sample_instance(&is), Err(Error::Resource(_))));
    }
}
