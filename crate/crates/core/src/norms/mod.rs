//! Certified brackets for the injective, projective and symmetric
//! projective norms of tensors over ℓpⁿ.

mod atoms;
mod injective;
mod projective;
mod symmetric;

use serde::{Deserialize, Serialize};

pub use atoms::{direction_grid, AtomDictionary};
pub use injective::{alternating_max, injective_norm, AlternatingMax};
pub use projective::projective_norm;
pub use symmetric::{
    polarization_constant, sym_projective_detailed, sym_projective_norm, sym_projective_upper, SymProjective,
};

use crate::error::{Error, Result};
use crate::numerics::{BaseNorm, Bracket, Method, Settings};
use crate::tensor::{symmetry_defect, DenseTensor, SymTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Injective,
    Projective,
    SymProjective,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::Injective, NormKind::Projective, NormKind::SymProjective];
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormKind::Injective => "injective",
            NormKind::Projective => "projective",
            NormKind::SymProjective => "sym_projective",
        })
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "injective" | "eps" | "epsilon" => Ok(NormKind::Injective),
            "projective" | "pi" => Ok(NormKind::Projective),
            "sym_projective" | "symprojective" | "spi" | "s_pi" => Ok(NormKind::SymProjective),
            other => Err(Error::InvalidInput(format!("unknown norm kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormSelector {
    pub kind: NormKind,
    pub base: BaseNorm,
}

impl NormSelector {
    pub fn new(kind: NormKind, base: BaseNorm) -> Self {
        Self { kind, base }
    }
}

/// Serialized form of one norm computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub kind: NormKind,
    pub base: BaseNorm,
    #[serde(flatten)]
    pub bracket: Bracket,
    pub atoms_used: usize,
    pub seed: u64,
}

/// Restriction to the coordinates the tensor uses. Exact for ℓp bases,
/// whose coordinate subspaces are norm-one complemented.
pub(crate) fn compress(z: &DenseTensor, settings: &Settings) -> (DenseTensor, Vec<usize>) {
    if settings.compress_support {
        z.support_compress()
    } else {
        (z.clone(), (0..z.dim()).collect())
    }
}

/// Exact crossnorm value when `z` is elementary up to rounding. The residual
/// of the rank-one fit is charged in the coefficient ℓ1 norm, which bounds
/// both ε and π from above for every ℓp base.
pub(crate) fn elementary_bracket(z: &DenseTensor, base: BaseNorm) -> Option<Bracket> {
    let (n, d) = (z.dim(), z.order());
    if d < 2 || z.is_zero() {
        return None;
    }
    let (pivot_flat, pivot) = z
        .entries()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, v)| (i, *v))?;
    let pivot_idx = z.multi_index(pivot_flat);
    let factors: Vec<Vec<f64>> = (0..d)
        .map(|slot| {
            let mut idx = pivot_idx.clone();
            (0..n)
                .map(|k| {
                    idx[slot] = k;
                    z.get(&idx)
                })
                .collect()
        })
        .collect();
    let scale = pivot.powi(1 - d as i32);
    let mut fit = DenseTensor::elementary(&factors).ok()?;
    fit = fit.scale(scale);
    let residual = z.sub(&fit).ok()?.l1();
    if residual.is_nan() || residual > ELEMENTARY_TOL * z.l1() {
        return None;
    }
    let value = factors.iter().map(|f| base.norm(f)).product::<f64>() * scale.abs();
    Some(Bracket::new(
        (value - residual).max(0.0),
        value + residual,
        Method::CrossnormIdentity,
        Method::CrossnormIdentity,
    ))
}

const ELEMENTARY_TOL: f64 = 1e-10;

fn is_symmetric(z: &DenseTensor, settings: &Settings) -> bool {
    symmetry_defect(z) <= settings.symmetry_tol * z.max_abs().max(1.0)
}

/// Replaces a budget error by the bracket it carries.
pub fn accept_best(r: Result<Bracket>) -> Result<Bracket> {
    match r {
        Err(Error::BudgetExhausted { best }) => Ok(best),
        other => other,
    }
}

/// Dispatches on the selector; symmetric projective requires a symmetric
/// input.
pub fn tensor_norm(z: &DenseTensor, selector: NormSelector, settings: &Settings) -> Result<Bracket> {
    Ok(norm_result(z, selector, settings)?.bracket)
}

pub fn norm_result(z: &DenseTensor, selector: NormSelector, settings: &Settings) -> Result<NormResult> {
    let (bracket, atoms_used) = match selector.kind {
        NormKind::Injective => (injective_norm(z, selector.base, settings)?, 0),
        NormKind::Projective => (projective_norm(z, selector.base, settings)?, 0),
        NormKind::SymProjective => {
            if !is_symmetric(z, settings) {
                return Err(Error::InvalidInput(
                    "symmetric projective norm needs a symmetric tensor".into(),
                ));
            }
            let u = SymTensor::from_dense_unchecked(z.clone());
            let r = sym_projective_detailed(&u, selector.base, settings)?;
            (r.bracket, r.atoms_used)
        }
    };
    Ok(NormResult {
        kind: selector.kind,
        base: selector.base,
        bracket,
        atoms_used,
        seed: settings.seed,
    })
}

/// A certified upper bound, computed as cheaply as the selector allows.
pub fn tensor_distance_upper(diff: &SymTensor, selector: NormSelector, settings: &Settings) -> Result<f64> {
    match selector.kind {
        NormKind::SymProjective => sym_projective_upper(diff, selector.base, settings),
        NormKind::Projective if selector.base == BaseNorm::L2 && diff.order() > 2 => {
            sym_projective_upper(diff, selector.base, settings)
        }
        NormKind::Injective if selector.base == BaseNorm::L2 && diff.order() > 2 => {
            injective::unfolding_bound(diff.as_dense())
        }
        _ => Ok(tensor_norm(diff.as_dense(), selector, settings)?.upper),
    }
}

/// Outcome of comparing ε, π and (for symmetric input) s,π on one tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub injective: Bracket,
    pub projective: Bracket,
    pub sym_projective: Option<Bracket>,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Checks `ε ≤ π` on both bracket ends and, for symmetric tensors,
/// `π ≤ s,π` on the upper ends.
pub fn sandwich_check(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<SandwichReport> {
    let eps = injective_norm(z, base, settings)?;
    let pi = projective_norm(z, base, settings)?;
    let slack = |v: f64| 1e-9 * v.abs().max(1.0);
    let mut failures = Vec::new();
    if eps.upper > pi.upper + slack(pi.upper) {
        failures.push(format!("ε.upper {} > π.upper {}", eps.upper, pi.upper));
    }
    if eps.lower > pi.lower + slack(pi.lower) && eps.lower > pi.upper + slack(pi.upper) {
        failures.push(format!("ε.lower {} > π bracket", eps.lower));
    }
    let sym = if is_symmetric(z, settings) {
        let u = SymTensor::from_dense_unchecked(z.clone());
        let s = accept_best(sym_projective_norm(&u, base, settings))?;
        if pi.lower > s.upper + slack(s.upper) {
            failures.push(format!("π.lower {} > s,π.upper {}", pi.lower, s.upper));
        }
        Some(s)
    } else {
        None
    };
    Ok(SandwichReport {
        injective: eps,
        projective: pi,
        sym_projective: sym,
        pass: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::veronese;

    #[test]
    fn swap_tensor_sandwich() {
        let z = DenseTensor::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let r = sandwich_check(&z, BaseNorm::L2, &Settings::default()).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert!((r.injective.upper - 1.0).abs() < 1e-12);
        assert!((r.projective.upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sym_projective_rejects_asymmetric() {
        let z = DenseTensor::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let sel = NormSelector::new(NormKind::SymProjective, BaseNorm::L2);
        assert!(tensor_norm(&z, sel, &Settings::default()).is_err());
    }

    #[test]
    fn selector_round_trip() {
        for k in NormKind::ALL {
            assert_eq!(k.to_string().parse::<NormKind>().unwrap(), k);
        }
    }

    #[test]
    fn distance_upper_bounds_dominate_brackets() {
        let u = veronese(&[1.0, 0.3], 3)
            .unwrap()
            .sub(&veronese(&[0.2, 1.0], 3).unwrap())
            .unwrap();
        let st = Settings::default();
        for kind in NormKind::ALL {
            for base in BaseNorm::ALL {
                let sel = NormSelector::new(kind, base);
                let ub = tensor_distance_upper(&u, sel, &st).unwrap();
                let b = accept_best(tensor_norm(u.as_dense(), sel, &st)).unwrap();
                assert!(ub >= b.lower * (1.0 - 1e-9), "{kind} {base}: {ub} < {:?}", b);
            }
        }
    }
}
