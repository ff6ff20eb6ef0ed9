use super::injective::{alternating_max, injective_norm};
use super::symmetric::sym_projective_detailed;
use crate::error::Result;
use crate::numerics::{linalg, lp_solve, BaseNorm, Bracket, LpProblem, LpStatus, Method, Settings};
use crate::tensor::{symmetry_defect, DenseTensor, SymTensor};

/// Vertex-product atoms for the ℓ∞ base: slot 0 with first sign fixed and
/// slots 1… with first sign fixed, which removes every sign redundancy.
const LINF_ATOM_CAP: usize = 1024;

/// Projective norm: `inf Σ_k Π_i ‖x_i^{(k)}‖` over rank-one decompositions.
pub fn projective_norm(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
    if let Some(b) = super::elementary_bracket(z, base) {
        return Ok(b.outward());
    }
    projective_bracket(z, base, settings).map(|b| b.outward())
}

fn projective_bracket(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
    if z.is_zero() {
        return Ok(Bracket::zero());
    }
    let (z, _) = super::compress(z, settings);
    let (n, d) = (z.dim(), z.order());
    if d == 1 {
        return Ok(Bracket::exact(base.norm(z.entries()), Method::BaseNorm));
    }
    if n == 1 {
        return Ok(Bracket::exact(z.entries()[0].abs(), Method::Trivial));
    }
    match base {
        BaseNorm::L1 => Ok(Bracket::exact(z.l1(), Method::CoefficientL1)),
        BaseNorm::L2 if d == 2 => Ok(Bracket::exact(linalg::nuclear_norm(&z.matricize(1))?, Method::Svd)),
        BaseNorm::L2 if symmetry_defect(&z) <= settings.symmetry_tol * z.max_abs().max(1.0) => {
            // on symmetric tensors over a Hilbert space π agrees with s,π
            let u = SymTensor::from_dense_unchecked(z.clone());
            let r = sym_projective_detailed(&u, base, settings)?;
            let generic_lower = dual_sampling_lower(&z, base, settings)?;
            let b = r
                .bracket
                .with_methods(r.bracket.method_lower, Method::CrossnormIdentity);
            Ok(Bracket::new(
                b.lower.max(generic_lower.min(b.upper)),
                b.upper,
                if generic_lower > b.lower {
                    Method::DualSampling
                } else {
                    b.method_lower
                },
                b.method_upper,
            ))
        }
        BaseNorm::Linf if (n - 1) * d < 63 && 1usize << ((n - 1) * d) <= LINF_ATOM_CAP => vertex_lp(&z),
        _ => general(&z, base, settings),
    }
}

/// `max(ε(z), ⟨B, z⟩ / ‖B‖)` with the form norm bounded above by the
/// injective norm under the dual base.
fn dual_sampling_lower(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<f64> {
    let mut best = injective_norm(z, base, settings)?.lower;
    let sign = DenseTensor::new(z.order(), z.dim(), z.entries().iter().map(|v| v.signum()).collect())?;
    for b in [z.clone(), sign] {
        let norm_b = injective_norm(&b, base.dual(), settings)?.upper;
        if norm_b > 0.0 {
            best = best.max(b.inner(z)?.abs() / norm_b);
        }
    }
    Ok(best)
}

/// Exact π under the ℓ∞ base as an LP over products of cube vertices; the
/// optimal dual multiplier is a form certified by the same enumeration.
fn vertex_lp(z: &DenseTensor) -> Result<Bracket> {
    let (n, d) = (z.dim(), z.order());
    let per_slot = 1usize << (n - 1);
    let count = per_slot.pow(d as u32);
    let slot_vec = |mask: usize| -> Vec<f64> {
        let mut v = vec![1.0; n];
        for (i, item) in v.iter_mut().enumerate().skip(1) {
            if mask >> (i - 1) & 1 == 1 {
                *item = -1.0;
            }
        }
        v
    };
    let atoms: Vec<DenseTensor> = (0..count)
        .map(|mut code| {
            let factors: Vec<Vec<f64>> = (0..d)
                .map(|_| {
                    let m = code % per_slot;
                    code /= per_slot;
                    slot_vec(m)
                })
                .collect();
            DenseTensor::elementary(&factors)
        })
        .collect::<Result<_>>()?;
    let len = z.entries().len();
    let mut prob = LpProblem::new(vec![1.0; 2 * count]);
    for row in 0..len {
        let mut r = vec![0.0; 2 * count];
        for (k, a) in atoms.iter().enumerate() {
            r[2 * k] = a.entries()[row];
            r[2 * k + 1] = -a.entries()[row];
        }
        prob.add_equality(r, z.entries()[row]);
    }
    let sol = lp_solve(&prob)?;
    if sol.status != LpStatus::Optimal {
        return Err(crate::error::Error::NumericalFailure(format!(
            "vertex LP ended with status {:?}",
            sol.status
        )));
    }
    let mut residual = z.clone();
    for (k, a) in atoms.iter().enumerate() {
        residual.axpy(-(sol.x[2 * k] - sol.x[2 * k + 1]), a)?;
    }
    let upper = sol.objective + residual.l1();
    let form = DenseTensor::new(d, n, sol.duals.clone())?;
    let form_norm = atoms
        .iter()
        .map(|a| form.inner(a).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let lower = if form_norm > 0.0 {
        (form.inner(z)?.abs() / form_norm).min(upper)
    } else {
        0.0
    };
    Ok(Bracket::new(lower, upper, Method::LpDual, Method::AtomLp))
}

/// Greedy rank-one peeling for the upper bound (each remaining coefficient
/// costs its absolute value, since `‖e_i‖ = 1`) and dual sampling for the
/// lower bound.
fn general(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
    let mut residual = z.clone();
    let mut spent = 0.0;
    let mut upper = z.l1();
    let local = Settings {
        restarts: settings.restarts.min(8),
        ..settings.clone()
    };
    let steps = 4 * z.dim().pow(z.order() as u32 - 1);
    for _ in 0..steps {
        let best = alternating_max(&residual, base.dual(), &local);
        let atom = DenseTensor::elementary(&best.functionals)?;
        let cost_per_unit: f64 = best.functionals.iter().map(|f| base.norm(f)).product();
        let energy = atom.inner(&atom)?;
        if energy == 0.0 || cost_per_unit == 0.0 {
            break;
        }
        let sigma = residual.inner(&atom)? / energy;
        let mut next = residual.clone();
        next.axpy(-sigma, &atom)?;
        let next_spent = spent + sigma.abs() * cost_per_unit;
        let candidate = next_spent + next.l1();
        if candidate >= upper * (1.0 - 1e-12) {
            break;
        }
        upper = candidate;
        spent = next_spent;
        residual = next;
    }
    let lower = dual_sampling_lower(z, base, settings)?.min(upper);
    Ok(Bracket::new(lower, upper, Method::DualSampling, Method::Peeling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::veronese;

    #[test]
    fn l1_coefficient_sum() {
        let z = DenseTensor::new(2, 2, vec![1.0, -2.0, 0.0, 3.0]).unwrap();
        let b = projective_norm(&z, BaseNorm::L1, &Settings::default()).unwrap();
        assert!(b.contains(6.0, 0.0) && b.rel_gap() < 1e-14);
        assert_eq!(b.method_upper, Method::CoefficientL1);
    }

    #[test]
    fn elementary_linf_beyond_vertex_cap() {
        let x = vec![vec![1.0, -0.5, 0.25, 2.0]; 4];
        let z = DenseTensor::elementary(&x).unwrap();
        let b = projective_norm(&z, BaseNorm::Linf, &Settings::default()).unwrap();
        assert!(b.contains(16.0, 1e-12) && b.rel_gap() < 1e-12);
    }

    #[test]
    fn nuclear_norm_of_diag() {
        let z = DenseTensor::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let b = projective_norm(&z, BaseNorm::L2, &Settings::default()).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linf_vertex_lp_is_tight() {
        let z = DenseTensor::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let b = projective_norm(&z, BaseNorm::Linf, &Settings::default()).unwrap();
        // (e1e1 − e2e2) = ½[(1,1)⊗(1,−1) + (1,−1)⊗(1,1)], cost 1
        assert!(b.contains(1.0, 1e-9) && b.rel_gap() < 1e-9, "{b:?}");
    }

    #[test]
    fn veronese_crossnorm_equality() {
        let x = [3.0, 4.0];
        let v = veronese(&x, 2).unwrap();
        let b = projective_norm(v.as_dense(), BaseNorm::L2, &Settings::default()).unwrap();
        assert!((b.lower - 25.0).abs() < 1e-9 && (b.upper - 25.0).abs() < 1e-9);
        let v3 = veronese(&[0.5, -1.0, 2.0], 3).unwrap();
        for base in BaseNorm::ALL {
            let want = base.norm(&[0.5, -1.0, 2.0]).powi(3);
            let b = projective_norm(v3.as_dense(), base, &Settings::default()).unwrap();
            assert!(b.contains(want, 1e-3), "{base}: {b:?} vs {want}");
        }
    }

    #[test]
    fn general_route_brackets_elementary_tensor() {
        let x = vec![vec![1.0, 2.0, 0.0], vec![0.5, -1.0, 1.0], vec![2.0, 0.0, 1.0]];
        let z = DenseTensor::elementary(&x).unwrap();
        let want: f64 = x.iter().map(|v| BaseNorm::L2.norm(v)).product();
        let b = projective_norm(&z, BaseNorm::L2, &Settings::default()).unwrap();
        assert!(b.contains(want, 1e-6), "{b:?} vs {want}");
    }
}
