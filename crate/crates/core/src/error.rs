use thiserror::Error;

use crate::numerics::{BaseNorm, Bracket};

/// Errors raised by the workbench.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("operation does not support the {0} base norm")]
    UnsupportedNorm(BaseNorm),

    #[error("{what} needs {needed} items, budget is {budget}")]
    DimensionTooLarge {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("refinement budget exhausted with bracket [{}, {}]", best.lower, best.upper)]
    BudgetExhausted { best: Bracket },

    #[error("tensor sequence is not Cauchy: tail spread {spread:.3e} exceeds tolerance {tol:.3e}")]
    NotCauchy { spread: f64, tol: f64 },

    #[error("basis vector {index} is not aligned with a coordinate axis")]
    NonCoordinateSubspace { index: usize },

    #[error("family of {k} pairs exceeds the cap of {cap}")]
    FamilyTooLarge { k: usize, cap: usize },

    #[error("denominator upper bound {upper:.3e} is below the degeneracy threshold")]
    DegenerateFamily { upper: f64 },

    #[error("Pietsch LP left violation {violation:.3e} after {refinements} refinements")]
    Infeasible {
        violation: f64,
        refinements: usize,
        certificate: Box<crate::summing::PietschCertificate>,
    },

    #[error("values are not {lipschitz}-Lipschitz on the anchor set: pair ({i}, {j}) has ratio {ratio:.6e}")]
    NotLipschitzOnS {
        i: usize,
        j: usize,
        ratio: f64,
        lipschitz: f64,
    },

    #[error("domination fails on pair {pair}: ratio {ratio:.6e} exceeds {bound:.6e}")]
    LipschitzExceeded { pair: usize, ratio: f64, bound: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
