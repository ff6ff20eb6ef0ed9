//! Lipschitz q-summing constants of polynomials: the polynomial and
//! Lipschitz-dual denominators, ratios and their maximization, discrete
//! Pietsch measures, McShane extension and the factorization through a
//! weighted `L_q` space.

mod denominators;
mod factorization;
mod family;
mod mcshane;
mod pietsch;
mod ratio;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use denominators::{
    lip_denominator, lip_denominator_detailed, poly_denominator, poly_denominator_detailed, Denominator,
};
pub use factorization::{build_factorization, DiscreteFactorization};
pub use family::{ConeIndex, PairFamily};
pub use mcshane::{mcshane_extend, McShaneFunction, Metric};
pub use pietsch::{
    pietsch_constant, pietsch_measure, poly_dictionary, PietschCertificate, PietschConstant, PIETSCH_TOL,
};
pub use ratio::{estimate_pi_q, summing_ratio, summing_ratio_detailed, PiEstimate, SummingRatio};

use crate::tensor::SymTensor;

/// Which unit ball the denominator ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Homogeneous polynomials of sup norm at most one.
    Poly,
    /// 1-Lipschitz functions on the cone vanishing at the origin.
    Lip,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Poly => "poly",
            Mode::Lip => "lip",
        })
    }
}

impl FromStr for Mode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poly" => Ok(Mode::Poly),
            "lip" => Ok(Mode::Lip),
            other => Err(crate::Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

/// A scalar functional from one of the two unit balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// Polynomial `x ↦ ⟨A, x^{⊗d}⟩` with sup norm at most one.
    Polynomial { coefficients: SymTensor },
    /// Values of a 1-Lipschitz function at an indexed point list, zero at
    /// the origin.
    Table { values: Vec<f64> },
}
