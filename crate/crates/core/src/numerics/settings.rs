use serde::{Deserialize, Serialize};

use super::BaseNorm;

/// Every tolerance and budget used by the library, in one record so that
/// reports can echo the full configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Equality residual accepted from the LP solver (∞-norm).
    pub eq_residual: f64,
    /// Relative bracket gap targeted by refinement loops.
    pub bracket_gap: f64,
    /// Entrywise tolerance for certifying tensor symmetry.
    pub symmetry_tol: f64,
    /// Restarts for alternating maximization.
    pub restarts: usize,
    /// Restarts for the cone Lipschitz pair search.
    pub lipschitz_restarts: usize,
    /// Initial size of the sphere-grid atom dictionary.
    pub atoms_initial: usize,
    /// Hard cap on the atom dictionary.
    pub atoms_cap: usize,
    /// Largest vertex-tuple enumeration attempted.
    pub vertex_budget: u128,
    /// Relative tolerance of the sphere branch-and-bound.
    pub sup_rel_tol: f64,
    /// Box budget of the sphere branch-and-bound.
    pub sup_max_boxes: usize,
    /// Largest family for 2^k sign-pattern enumeration.
    pub family_cap: usize,
    /// Dual-support evaluations per q > 1 denominator.
    pub denominator_evals: usize,
    /// Largest family size tried by the summing-constant search.
    pub search_max_family: usize,
    /// Column-generation rounds for Pietsch certificates.
    pub pietsch_refinements: usize,
    /// Drop coordinates on which a tensor vanishes before computing norms.
    pub compress_support: bool,
    /// Norm on the codomain of polynomials.
    pub codomain: BaseNorm,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            eq_residual: 1e-8,
            bracket_gap: 1e-3,
            symmetry_tol: 1e-12,
            restarts: 32,
            lipschitz_restarts: 64,
            atoms_initial: 256,
            atoms_cap: 8192,
            vertex_budget: 1 << 22,
            sup_rel_tol: 1e-5,
            sup_max_boxes: 400_000,
            family_cap: 12,
            denominator_evals: 2000,
            search_max_family: 6,
            pietsch_refinements: 8,
            compress_support: true,
            codomain: BaseNorm::L2,
            seed: 0x5eed,
        }
    }
}

impl Settings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
