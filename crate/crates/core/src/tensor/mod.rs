//! Order-d tensors over ℝⁿ, symmetric tensors, the Veronese map and
//! cone points.

mod dense;
mod sequence;
mod symmetric;

use serde::{Deserialize, Serialize};

pub(crate) use dense::contract_last_flat;
pub use dense::DenseTensor;
pub use sequence::{cone_sequence_limit, ConeLimit};
pub use symmetric::{
    multisets, symmetrize, symmetry_defect, veronese, Multiset, SignedAtom, SymTensor, SymmetricDecomposition,
};

use crate::error::{Error, Result};
use crate::numerics::linalg;

/// `x ⊗ ··· ⊗ x` kept in factored form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub base: Vec<f64>,
    pub degree: usize,
}

impl ConePoint {
    pub fn new(base: Vec<f64>, degree: usize) -> Result<Self> {
        if degree == 0 || base.is_empty() {
            return Err(Error::InvalidInput(
                "cone point needs degree ≥ 1 and dimension ≥ 1".into(),
            ));
        }
        Ok(Self { base, degree })
    }

    pub fn origin(dim: usize, degree: usize) -> Self {
        Self {
            base: vec![0.0; dim],
            degree,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn tensor(&self) -> SymTensor {
        veronese(&self.base, self.degree).expect("cone point shape is validated")
    }
}

/// `Σ z[i₁…i_d] φ₁[i₁]···φ_d[i_d]`.
pub fn apply_functionals(z: &DenseTensor, functionals: &[Vec<f64>]) -> Result<f64> {
    let refs: Vec<&[f64]> = functionals.iter().map(|f| f.as_slice()).collect();
    z.contract_all(&refs)
}

/// Whether `x^{⊗d}` and `y^{⊗d}` coincide: `x = y` for odd `d`, `x = ±y`
/// for even `d`, with Euclidean tolerance.
pub fn same_cone_point(x: &[f64], y: &[f64], d: usize, tol: f64) -> bool {
    let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    if linalg::l2(&minus) <= tol {
        return true;
    }
    if d.is_multiple_of(2) {
        let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        return linalg::l2(&plus) <= tol;
    }
    false
}
