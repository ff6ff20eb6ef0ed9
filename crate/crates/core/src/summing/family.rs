use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{same_cone_point, veronese, SymTensor};

/// Pairs `(xᵢ, yᵢ)` of points of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRecord", into = "FamilyRecord")]
pub struct PairFamily {
    dim: usize,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

#[derive(Serialize, Deserialize)]
struct FamilyRecord {
    dim: usize,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TryFrom<FamilyRecord> for PairFamily {
    type Error = Error;

    fn try_from(r: FamilyRecord) -> Result<Self> {
        let f = PairFamily::new(r.pairs)?;
        if f.dim != r.dim {
            return Err(Error::ShapeMismatch(format!(
                "declared dimension {} but pairs live in ℝ^{}",
                r.dim, f.dim
            )));
        }
        Ok(f)
    }
}

impl From<PairFamily> for FamilyRecord {
    fn from(f: PairFamily) -> Self {
        FamilyRecord {
            dim: f.dim,
            pairs: f.pairs,
        }
    }
}

/// Distinct cone points of a family (the origin first) and, for every
/// pair, the indices of its two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeIndex {
    pub points: Vec<Vec<f64>>,
    pub pairs: Vec<(usize, usize)>,
}

impl PairFamily {
    pub fn new(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let dim = pairs
            .first()
            .map(|(x, _)| x.len())
            .ok_or_else(|| Error::InvalidInput("a family needs at least one pair".into()))?;
        if dim == 0 {
            return Err(Error::InvalidInput("pairs must have dimension ≥ 1".into()));
        }
        if pairs.iter().any(|(x, y)| x.len() != dim || y.len() != dim) {
            return Err(Error::ShapeMismatch("pairs of unequal dimension".into()));
        }
        if pairs
            .iter()
            .flat_map(|(x, y)| x.iter().chain(y))
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite coordinate in family".into()));
        }
        Ok(Self { dim, pairs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.pairs
    }

    pub fn pairs_mut(&mut self) -> &mut [(Vec<f64>, Vec<f64>)] {
        &mut self.pairs
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::ShapeMismatch("pair of the wrong dimension".into()));
        }
        self.pairs.push((x, y));
        Ok(())
    }

    /// `ν(xᵢ) − ν(yᵢ)` for each pair.
    pub fn differences(&self, d: usize) -> Result<Vec<SymTensor>> {
        self.pairs
            .iter()
            .map(|(x, y)| veronese(x, d)?.sub(&veronese(y, d)?))
            .collect()
    }

    /// Identifies endpoints that are the same cone point in degree `d`.
    pub fn cone_index(&self, d: usize) -> ConeIndex {
        let mut points = vec![vec![0.0; self.dim]];
        let mut locate = |v: &Vec<f64>| -> usize {
            match points.iter().position(|p| same_cone_point(p, v, d, 1e-12)) {
                Some(i) => i,
                None => {
                    points.push(v.clone());
                    points.len() - 1
                }
            }
        };
        let pairs = self.pairs.iter().map(|(x, y)| (locate(x), locate(y))).collect();
        ConeIndex { points, pairs }
    }

    /// Every pair of distinct points from `points`, in lexicographic order.
    pub fn all_pairs(points: &[Vec<f64>]) -> Result<Self> {
        let mut pairs = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                pairs.push((points[i].clone(), points[j].clone()));
            }
        }
        Self::new(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PairFamily::new(vec![]).is_err());
        assert!(PairFamily::new(vec![(vec![1.0], vec![1.0, 2.0])]).is_err());
        assert!(PairFamily::new(vec![(vec![f64::NAN], vec![1.0])]).is_err());
        let f = PairFamily::new(vec![(vec![1.0, 0.0], vec![0.0, 1.0])]).unwrap();
        assert_eq!((f.len(), f.dim()), (1, 2));
    }

    #[test]
    fn cone_index_merges_antipodes_in_even_degree() {
        let f = PairFamily::new(vec![
            (vec![1.0, 2.0], vec![0.0, 0.0]),
            (vec![-1.0, -2.0], vec![3.0, 1.0]),
        ])
        .unwrap();
        let even = f.cone_index(2);
        assert_eq!(even.points.len(), 3);
        assert_eq!(even.pairs, vec![(1, 0), (1, 2)]);
        let odd = f.cone_index(3);
        assert_eq!(odd.points.len(), 4);
    }

    #[test]
    fn serde_checks_declared_dimension() {
        let f = PairFamily::new(vec![(vec![1.0, 0.0], vec![0.0, 1.0])]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<PairFamily>(&s).unwrap(), f);
        assert!(serde_json::from_str::<PairFamily>(&s.replace("\"dim\":2", "\"dim\":3")).is_err());
    }
}
