//! Finite-dimensional workbench for tensor cross-norms, the Veronese cone
//! metric, homogeneous polynomials as Lipschitz maps on the cone, and
//! Lipschitz q-summing constants with discrete Pietsch certificates.

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod cone;
pub mod norms;
pub mod poly;
pub mod sphere;
pub mod summing;
pub mod tensor;
