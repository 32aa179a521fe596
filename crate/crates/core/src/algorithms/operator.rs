use ndarray::{Array1, Array2};

use crate::model::SymObservations;

/// Dense `G^sym ∘ Y^sym` with the list of nonzero block columns per group.
#[derive(Debug, Clone)]
pub struct ScaledOperator {
    matrix: Array2<f64>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    /// `λ^sym_kℓ / N`.
    coupling_sq: Array2<f64>,
    active: Vec<Vec<(usize, usize)>>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s: f64 = acc.iter().sum();
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

// (Σ a_j m_j, Σ a_j² v_j) in one pass
#[inline]
fn dot_pair(a: &[f64], m: &[f64], v: &[f64]) -> (f64, f64) {
    let mut s1 = [0.0; 4];
    let mut s2 = [0.0; 4];
    let n = a.len() / 4 * 4;
    for j in (0..n).step_by(4) {
        for l in 0..4 {
            let x = a[j + l];
            s1[l] += x * m[j + l];
            s2[l] += x * x * v[j + l];
        }
    }
    let (mut t1, mut t2): (f64, f64) = (s1.iter().sum(), s2.iter().sum());
    for j in n..a.len() {
        t1 += a[j] * m[j];
        t2 += a[j] * a[j] * v[j];
    }
    (t1, t2)
}

impl ScaledOperator {
    pub fn new(sym: &SymObservations) -> Self {
        let k = sym.groups();
        let sizes = sym.sizes().to_vec();
        let offsets = sym.offsets();
        let coupling_sq = Array2::from_shape_fn((k, k), |(a, b)| sym.lambda_sym()[[a, b]] / sym.big_n() as f64);
        let active = (0..k)
            .map(|a| {
                (0..k)
                    .filter(|&b| coupling_sq[[a, b]] > 0.0)
                    .map(|b| (offsets[b], offsets[b] + sizes[b]))
                    .collect()
            })
            .collect();
        Self {
            matrix: sym.assemble_scaled(),
            sizes,
            offsets,
            coupling_sq,
            active,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn coupling_sq(&self) -> &Array2<f64> {
        &self.coupling_sq
    }

    pub fn group_of_rows(&self) -> Vec<usize> {
        (0..self.groups()).flat_map(|g| std::iter::repeat_n(g, self.sizes[g])).collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[[i, j]]
    }

    /// `y = (G ∘ Y) x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let data = self.matrix.as_slice().expect("standard layout");
        let n = self.dim();
        for g in 0..self.groups() {
            for i in self.offsets[g]..self.offsets[g] + self.sizes[g] {
                let row = &data[i * n..(i + 1) * n];
                y[i] = self.active[g].iter().map(|&(lo, hi)| dot(&row[lo..hi], &x[lo..hi])).sum();
            }
        }
    }

    /// `((G ∘ Y) m, (G ∘ Y)^{∘2} v)` in a single sweep over the matrix.
    pub fn apply_pair(&self, m: &[f64], v: &[f64], out_m: &mut [f64], out_v: &mut [f64]) {
        let data = self.matrix.as_slice().expect("standard layout");
        let n = self.dim();
        for g in 0..self.groups() {
            for i in self.offsets[g]..self.offsets[g] + self.sizes[g] {
                let row = &data[i * n..(i + 1) * n];
                let (mut s1, mut s2) = (0.0, 0.0);
                for &(lo, hi) in &self.active[g] {
                    let (a, b) = dot_pair(&row[lo..hi], &m[lo..hi], &v[lo..hi]);
                    s1 += a;
                    s2 += b;
                }
                out_m[i] = s1;
                out_v[i] = s2;
            }
        }
    }

    /// Per-group `Σ_ℓ (λ^sym_kℓ / N) · f(ℓ)`.
    pub fn mix(&self, per_group: &[f64]) -> Array1<f64> {
        let k = self.groups();
        Array1::from_iter((0..k).map(|a| (0..k).map(|b| self.coupling_sq[[a, b]] * per_group[b]).sum::<f64>()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_two_group, sample_instance, symmetrize, InstanceSpec};
    use crate::priors::Prior;

    #[test]
    fn fused_pass_matches_dense_products() {
        for alpha in [0.0, 0.4] {
            let spec = make_two_group(alpha, 2.0, Prior::gaussian(), Prior::rademacher()).unwrap();
            let is = InstanceSpec::per_group(spec.clone(), 13, 3).unwrap();
            let obs = sample_instance(&is).unwrap();
            let sym = symmetrize(obs.redacted(), &spec, is.big_n);
            let op = ScaledOperator::new(&sym);
            let full = sym.assemble_scaled();
            let m: Vec<f64> = (0..26).map(|i| (i as f64 * 0.37).sin()).collect();
            let v: Vec<f64> = (0..26).map(|i| 0.5 + (i as f64 * 0.11).cos().abs()).collect();
            let (mut a, mut b, mut c) = (vec![0.0; 26], vec![0.0; 26], vec![0.0; 26]);
            op.apply_pair(&m, &v, &mut a, &mut b);
            op.apply(&m, &mut c);
            for i in 0..26 {
                let ea: f64 = (0..26).map(|j| full[[i, j]] * m[j]).sum();
                let eb: f64 = (0..26).map(|j| full[[i, j]].powi(2) * v[j]).sum();
                assert!((a[i] - ea).abs() < 1e-12 && (c[i] - ea).abs() < 1e-12);
                assert!((b[i] - eb).abs() < 1e-12);
            }
        }
    }
}
