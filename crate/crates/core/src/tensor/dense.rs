use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An order-d tensor over ℝⁿ stored densely in row-major multi-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRecord", into = "TensorRecord")]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<TensorRecord> for DenseTensor {
    type Error = Error;

    fn try_from(r: TensorRecord) -> Result<Self> {
        DenseTensor::new(r.order, r.dim, r.entries)
    }
}

impl From<DenseTensor> for TensorRecord {
    fn from(t: DenseTensor) -> Self {
        TensorRecord {
            order: t.order,
            dim: t.dim,
            entries: t.entries,
        }
    }
}

pub(crate) fn checked_len(order: usize, dim: usize) -> Result<usize> {
    u32::try_from(order)
        .ok()
        .and_then(|o| dim.checked_pow(o))
        .filter(|len| *len <= 1 << 24)
        .ok_or(Error::DimensionTooLarge {
            what: "dense tensor entries",
            needed: (dim as u128).saturating_pow(order.min(64) as u32),
            budget: 1 << 24,
        })
}

impl DenseTensor {
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(Error::InvalidInput(
                "tensor order and dimension must be at least 1".into(),
            ));
        }
        let len = checked_len(order, dim)?;
        if entries.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "order {order}, dim {dim} needs {len} entries, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("tensor entries must be finite".into()));
        }
        Ok(Self { order, dim, entries })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Self::new(order, dim, vec![0.0; len])
    }

    /// `x₁ ⊗ ··· ⊗ x_d`.
    pub fn elementary(factors: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidInput("empty factor list".into()));
        };
        let n = first.len();
        if factors.iter().any(|f| f.len() != n) {
            return Err(Error::ShapeMismatch("factors of unequal length".into()));
        }
        let mut entries = first.clone();
        for f in &factors[1..] {
            entries = entries.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
        }
        Self::new(factors.len(), n, entries)
    }

    pub(crate) fn from_parts_unchecked(order: usize, dim: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), dim.pow(order as u32));
        Self { order, dim, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for slot in (0..self.order).rev() {
            idx[slot] = flat % self.dim;
            flat /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flat_index(idx)]
    }

    pub fn same_shape(&self, other: &DenseTensor) -> bool {
        self.order == other.order && self.dim == other.dim
    }

    fn check_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.order, self.dim, other.order, other.dim
            )))
        }
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_shape(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_shape(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    fn zip_map(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> DenseTensor {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::from_parts_unchecked(self.order, self.dim, entries)
    }

    pub fn scale(&self, s: f64) -> DenseTensor {
        let entries = self.entries.iter().map(|v| v * s).collect();
        Self::from_parts_unchecked(self.order, self.dim, entries)
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &DenseTensor) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| *v == 0.0)
    }

    pub fn abs(&self) -> DenseTensor {
        let entries = self.entries.iter().map(|v| v.abs()).collect();
        Self::from_parts_unchecked(self.order, self.dim, entries)
    }

    /// Rows indexed by the first `split` slots, columns by the rest.
    pub fn matricize(&self, split: usize) -> DMatrix<f64> {
        assert!(split >= 1 && split < self.order.max(2));
        let rows = self.dim.pow(split as u32);
        let cols = self.entries.len() / rows;
        DMatrix::from_row_slice(rows, cols, &self.entries)
    }

    /// Contracts every slot against the given vectors, slot by slot.
    pub fn contract_all(&self, vectors: &[&[f64]]) -> Result<f64> {
        if vectors.len() != self.order || vectors.iter().any(|v| v.len() != self.dim) {
            return Err(Error::ShapeMismatch(format!(
                "need {} functionals of length {}",
                self.order, self.dim
            )));
        }
        let mut flat = self.entries.clone();
        for v in vectors.iter().rev() {
            flat = contract_last_flat(&flat, v);
        }
        Ok(flat[0])
    }

    /// Contracts every slot except `slot`, returning a length-n vector.
    pub fn contract_except(&self, slot: usize, vectors: &[&[f64]]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        let mut idx = vec![0usize; self.order];
        for &z in &self.entries {
            if z != 0.0 {
                let mut w = z;
                for (k, &i) in idx.iter().enumerate() {
                    if k != slot {
                        w *= vectors[k][i];
                    }
                }
                out[idx[slot]] += w;
            }
            increment(&mut idx, n);
        }
        out
    }

    /// Removes coordinates on which the tensor vanishes in every slot
    /// position; returns the compressed tensor and the kept coordinates.
    pub fn support_compress(&self) -> (DenseTensor, Vec<usize>) {
        let n = self.dim;
        let mut used = vec![false; n];
        let mut idx = vec![0usize; self.order];
        for &z in &self.entries {
            if z != 0.0 {
                for &i in &idx {
                    used[i] = true;
                }
            }
            increment(&mut idx, n);
        }
        let keep: Vec<usize> = (0..n).filter(|&i| used[i]).collect();
        if keep.len() == n || keep.is_empty() {
            return (self.clone(), (0..n).collect());
        }
        (self.restrict(&keep), keep)
    }

    /// Sub-tensor on the listed coordinates.
    pub fn restrict(&self, keep: &[usize]) -> DenseTensor {
        let k = keep.len();
        let len = k.pow(self.order as u32);
        let mut entries = Vec::with_capacity(len);
        let mut idx = vec![0usize; self.order];
        for _ in 0..len {
            let full: Vec<usize> = idx.iter().map(|&i| keep[i]).collect();
            entries.push(self.get(&full));
            increment(&mut idx, k);
        }
        Self::from_parts_unchecked(self.order, k, entries)
    }

    /// Zero-pads into ℝⁿ, placing coordinate `i` at `positions[i]`.
    pub fn embed(&self, n: usize, positions: &[usize]) -> DenseTensor {
        let mut out = vec![0.0; n.pow(self.order as u32)];
        let mut idx = vec![0usize; self.order];
        for &z in &self.entries {
            let flat = idx.iter().fold(0, |acc, &i| acc * n + positions[i]);
            out[flat] = z;
            increment(&mut idx, self.dim);
        }
        Self::from_parts_unchecked(self.order, n, out)
    }
}

/// Advances a row-major multi-index counter.
pub(crate) fn increment(idx: &mut [usize], n: usize) {
    for slot in (0..idx.len()).rev() {
        idx[slot] += 1;
        if idx[slot] < n {
            return;
        }
        idx[slot] = 0;
    }
}

/// Contracts the last slot of a flat row-major array against `v`.
pub(crate) fn contract_last_flat(flat: &[f64], v: &[f64]) -> Vec<f64> {
    flat.chunks_exact(v.len())
        .map(|c| c.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_count_is_enforced() {
        assert!(DenseTensor::new(2, 2, vec![0.0; 3]).is_err());
        assert!(DenseTensor::new(3, 2, vec![0.0; 8]).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let t = DenseTensor::zeros(3, 4).unwrap();
        for flat in 0..64 {
            assert_eq!(t.flat_index(&t.multi_index(flat)), flat);
        }
    }

    #[test]
    fn elementary_entries() {
        let t = DenseTensor::elementary(&[vec![1.0, 2.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(t.entries(), &[3.0, 5.0, 6.0, 10.0]);
        assert_eq!(t.get(&[1, 0]), 6.0);
    }

    #[test]
    fn contraction_matches_definition() {
        let t = DenseTensor::new(3, 2, (0..8).map(|v| v as f64 - 3.0).collect()).unwrap();
        let (a, b, c) = ([0.5, -1.0], [2.0, 1.0], [1.0, 3.0]);
        let mut direct = 0.0;
        for flat in 0..8 {
            let i = t.multi_index(flat);
            direct += t.entries()[flat] * a[i[0]] * b[i[1]] * c[i[2]];
        }
        let got = t.contract_all(&[&a, &b, &c]).unwrap();
        assert!((got - direct).abs() < 1e-12);
        let g = t.contract_except(1, &[&a, &b, &c]);
        assert!((crate::numerics::linalg::dot(&g, &b) - direct).abs() < 1e-12);
    }

    #[test]
    fn compress_and_embed_round_trip() {
        let t = DenseTensor::elementary(&[vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let (c, keep) = t.support_compress();
        assert_eq!(keep, vec![0, 2]);
        assert_eq!(c.dim(), 2);
        assert_eq!(c.embed(3, &keep), t);
    }

    #[test]
    fn serde_rejects_bad_shape() {
        let bad = r#"{"order":2,"dim":2,"entries":[1,2,3]}"#;
        assert!(serde_json::from_str::<DenseTensor>(bad).is_err());
        let good = r#"{"order":1,"dim":3,"entries":[1,2,3]}"#;
        let t: DenseTensor = serde_json::from_str(good).unwrap();
        assert_eq!(t.dim(), 3);
    }
}
