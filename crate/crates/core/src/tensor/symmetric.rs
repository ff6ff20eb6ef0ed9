use serde::{Deserialize, Serialize};

use super::dense::{increment, DenseTensor};
use crate::error::{Error, Result};
use crate::numerics::BaseNorm;

/// A tensor whose entries are invariant under permutations of the
/// multi-index.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SymTensor {
    inner: DenseTensor,
}

impl<'de> Deserialize<'de> for SymTensor {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let t = DenseTensor::deserialize(de)?;
        SymTensor::new(t, 1e-12).map_err(serde::de::Error::custom)
    }
}

/// A sorted multi-index together with the number of distinct
/// permutations of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multiset {
    pub index: Vec<usize>,
    pub multiplicity: usize,
}

/// All sorted multi-indices of length `d` over `0..n`, in lexicographic order.
pub fn multisets(n: usize, d: usize) -> Vec<Multiset> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        out.push(Multiset {
            multiplicity: permutation_count(&idx),
            index: idx.clone(),
        });
        // next non-decreasing sequence
        let mut slot = d;
        while slot > 0 && idx[slot - 1] == n - 1 {
            slot -= 1;
        }
        if slot == 0 {
            break;
        }
        let v = idx[slot - 1] + 1;
        for s in idx.iter_mut().skip(slot - 1) {
            *s = v;
        }
    }
    out
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// Number of distinct rearrangements of a sorted multi-index.
fn permutation_count(sorted: &[usize]) -> usize {
    let mut denom = 1;
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            denom *= factorial(run);
            run = 1;
        }
    }
    denom *= factorial(run);
    factorial(sorted.len()) / denom
}

fn sorted_flat(idx: &[usize], n: usize, scratch: &mut Vec<usize>) -> usize {
    scratch.clear();
    scratch.extend_from_slice(idx);
    scratch.sort_unstable();
    scratch.iter().fold(0, |acc, &i| acc * n + i)
}

/// Largest deviation of an entry from the entry at its sorted multi-index.
pub fn symmetry_defect(t: &DenseTensor) -> f64 {
    let n = t.dim();
    let e = t.entries();
    let mut idx = vec![0usize; t.order()];
    let mut scratch = Vec::with_capacity(t.order());
    let mut worst = 0.0f64;
    for &v in e {
        let rep = sorted_flat(&idx, n, &mut scratch);
        worst = worst.max((v - e[rep]).abs());
        increment(&mut idx, n);
    }
    worst
}

/// Average of `t` over all index permutations.
pub fn symmetrize(t: &DenseTensor) -> SymTensor {
    let n = t.dim();
    let e = t.entries();
    let mut sum = vec![0.0; e.len()];
    let mut count = vec![0usize; e.len()];
    let mut reps = Vec::with_capacity(e.len());
    let mut idx = vec![0usize; t.order()];
    let mut scratch = Vec::with_capacity(t.order());
    for &v in e {
        let rep = sorted_flat(&idx, n, &mut scratch);
        sum[rep] += v;
        count[rep] += 1;
        reps.push(rep);
        increment(&mut idx, n);
    }
    let entries = reps.iter().map(|&r| sum[r] / count[r] as f64).collect();
    SymTensor {
        inner: DenseTensor::from_parts_unchecked(t.order(), n, entries),
    }
}

/// `x ⊗ ··· ⊗ x` (d factors).
pub fn veronese(x: &[f64], d: usize) -> Result<SymTensor> {
    if d == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    let t = DenseTensor::elementary(&vec![x.to_vec(); d])?;
    Ok(SymTensor { inner: t })
}

impl SymTensor {
    /// Certifies symmetry within `tol` relative to the largest entry.
    pub fn new(t: DenseTensor, tol: f64) -> Result<Self> {
        let defect = symmetry_defect(&t);
        if defect > tol * t.max_abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "tensor is not symmetric (defect {defect:.3e})"
            )));
        }
        Ok(Self { inner: t })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Ok(Self {
            inner: DenseTensor::zeros(order, dim)?,
        })
    }

    pub(crate) fn from_dense_unchecked(t: DenseTensor) -> Self {
        Self { inner: t }
    }

    pub fn as_dense(&self) -> &DenseTensor {
        &self.inner
    }

    pub fn into_dense(self) -> DenseTensor {
        self.inner
    }

    pub fn order(&self) -> usize {
        self.inner.order()
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        Ok(Self {
            inner: self.inner.add(&other.inner)?,
        })
    }

    pub fn sub(&self, other: &SymTensor) -> Result<SymTensor> {
        Ok(Self {
            inner: self.inner.sub(&other.inner)?,
        })
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        Self {
            inner: self.inner.scale(s),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &SymTensor) -> Result<()> {
        self.inner.axpy(s, &other.inner)
    }

    /// Entries at the sorted multi-indices, in [`multisets`] order.
    pub fn reduced(&self) -> Vec<f64> {
        multisets(self.dim(), self.order())
            .iter()
            .map(|m| self.inner.get(&m.index))
            .collect()
    }

    /// Inverse of [`SymTensor::reduced`].
    pub fn from_reduced(order: usize, dim: usize, values: &[f64]) -> Result<SymTensor> {
        let ms = multisets(dim, order);
        if values.len() != ms.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} multiset values, got {}",
                ms.len(),
                values.len()
            )));
        }
        let mut lookup = vec![0.0; dim.pow(order as u32)];
        let probe = DenseTensor::from_parts_unchecked(order, dim, vec![0.0; lookup.len()]);
        for (m, v) in ms.iter().zip(values) {
            lookup[probe.flat_index(&m.index)] = *v;
        }
        let mut entries = vec![0.0; lookup.len()];
        let mut idx = vec![0usize; order];
        let mut scratch = Vec::with_capacity(order);
        for e in entries.iter_mut() {
            *e = lookup[sorted_flat(&idx, dim, &mut scratch)];
            increment(&mut idx, dim);
        }
        DenseTensor::new(order, dim, entries).map(|inner| Self { inner })
    }

    /// `⟨self, x^{⊗d}⟩`.
    pub fn eval_power(&self, x: &[f64]) -> f64 {
        let mut flat = self.inner.entries().to_vec();
        for _ in 0..self.order() {
            flat = super::dense::contract_last_flat(&flat, x);
        }
        flat[0]
    }
}

/// One signed rank-one term `sign · x^{⊗d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedAtom {
    pub sign: f64,
    pub vector: Vec<f64>,
}

/// `Σ signᵢ · xᵢ^{⊗d}` with cost `Σ ‖xᵢ‖ᵈ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SymmetricDecomposition {
    pub terms: Vec<SignedAtom>,
}

impl SymmetricDecomposition {
    /// Term `λ · v^{⊗d}` rescaled to the form `±x^{⊗d}`.
    pub fn push_scaled(&mut self, lambda: f64, v: &[f64], d: usize) {
        if lambda == 0.0 {
            return;
        }
        let mut sign = lambda.signum();
        let mut r = lambda.abs().powf(1.0 / d as f64);
        if d % 2 == 1 && sign < 0.0 {
            // odd powers absorb the sign
            sign = 1.0;
            r = -r;
        }
        self.terms.push(SignedAtom {
            sign,
            vector: v.iter().map(|x| x * r).collect(),
        });
    }

    pub fn cost(&self, base: BaseNorm, d: usize) -> f64 {
        self.terms.iter().map(|t| base.norm(&t.vector).powi(d as i32)).sum()
    }

    pub fn reconstruct(&self, order: usize, dim: usize) -> Result<SymTensor> {
        let mut acc = SymTensor::zeros(order, dim)?;
        for t in &self.terms {
            acc.axpy(t.sign, &veronese(&t.vector, order)?)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_counts() {
        let ms = multisets(3, 3);
        assert_eq!(ms.len(), 10);
        let total: usize = ms.iter().map(|m| m.multiplicity).sum();
        assert_eq!(total, 27);
        assert_eq!(multisets(1, 4).len(), 1);
        assert_eq!(multisets(4, 1).len(), 4);
    }

    #[test]
    fn veronese_basis_vector() {
        let v = veronese(&[1.0, 0.0], 2).unwrap();
        assert_eq!(v.as_dense().entries(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn veronese_of_zero() {
        let v = veronese(&[0.0, 0.0], 3).unwrap();
        assert!(v.as_dense().is_zero());
    }

    #[test]
    fn symmetrize_rank_one_pair() {
        let t = DenseTensor::elementary(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = symmetrize(&t);
        assert_eq!(s.as_dense().entries(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn symmetrize_three_distinct_slots() {
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v
        };
        let t = DenseTensor::elementary(&[e(0), e(1), e(2)]).unwrap();
        let s = symmetrize(&t);
        let d = s.as_dense();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for p in perms {
            assert!((d.get(&p) - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((d.l1() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_input_unchanged() {
        let v = veronese(&[0.3, -1.2, 2.0], 3).unwrap();
        let s = symmetrize(v.as_dense());
        let diff = s.sub(&v).unwrap();
        assert!(diff.as_dense().max_abs() <= 1e-14);
    }

    #[test]
    fn reduced_round_trip() {
        let v = symmetrize(&DenseTensor::new(3, 3, (0..27).map(|i| i as f64).collect()).unwrap());
        let back = SymTensor::from_reduced(3, 3, &v.reduced()).unwrap();
        assert!(back.sub(&v).unwrap().as_dense().max_abs() < 1e-14);
    }

    #[test]
    fn non_symmetric_rejected() {
        let t = DenseTensor::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(SymTensor::new(t, 1e-12).is_err());
    }

    #[test]
    fn decomposition_signs() {
        let mut dec = SymmetricDecomposition::default();
        dec.push_scaled(-8.0, &[1.0, 0.0], 3);
        dec.push_scaled(-4.0, &[0.0, 1.0], 2);
        let r3 = dec.terms[0].clone();
        assert_eq!(r3.sign, 1.0);
        assert!((r3.vector[0] + 2.0).abs() < 1e-12);
        assert_eq!(dec.terms[1].sign, -1.0);
        assert!((dec.terms[1].vector[1] - 2.0).abs() < 1e-12);
    }
}
