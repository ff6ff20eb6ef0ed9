use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{linalg, BaseNorm, Bracket, Method, SeedStream, Settings};
use crate::sphere::sup_on_sphere;
use crate::tensor::{symmetry_defect, DenseTensor, SymTensor};

/// Best value and maximizing functionals found by alternating maximization.
#[derive(Debug, Clone)]
pub struct AlternatingMax {
    pub value: f64,
    pub functionals: Vec<Vec<f64>>,
}

/// Maximizes `|z(φ₁,…,φ_d)|` over the dual unit balls by cyclically
/// replacing each `φ_k` with the norming functional of its partial
/// contraction. Each sweep is non-decreasing; the first maximizer is kept
/// on ties.
pub fn alternating_max(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> AlternatingMax {
    let (n, d) = (z.dim(), z.order());
    let seeds = SeedStream::new(settings.seed).child(0xa17e);
    let restarts = settings.restarts.max(1);
    let runs: Vec<AlternatingMax> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeds.fork(r as u64);
            let mut phis: Vec<Vec<f64>> = (0..d)
                .map(|_| {
                    let g: Vec<f64> = if r == 0 {
                        vec![1.0; n]
                    } else {
                        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
                    };
                    base.dual().normalize(&g).unwrap_or_else(|| vec![0.0; n])
                })
                .collect();
            let mut value = 0.0f64;
            for _ in 0..200 {
                for k in 0..d {
                    let refs: Vec<&[f64]> = phis.iter().map(|p| p.as_slice()).collect();
                    let g = z.contract_except(k, &refs);
                    phis[k] = base.norming_functional(&g);
                }
                let refs: Vec<&[f64]> = phis.iter().map(|p| p.as_slice()).collect();
                let v = z.contract_all(&refs).unwrap_or(0.0).abs();
                let done = v <= value * (1.0 + 1e-13);
                value = value.max(v);
                if done {
                    break;
                }
            }
            AlternatingMax {
                value,
                functionals: phis,
            }
        })
        .collect();
    runs.into_iter()
        .fold(None::<AlternatingMax>, |best, run| match best {
            Some(b) if b.value >= run.value => Some(b),
            _ => Some(run),
        })
        .expect("at least one restart")
}

/// Largest spectral norm over all unfoldings bounds ε under ℓ2 from above.
pub(crate) fn unfolding_bound(z: &DenseTensor) -> Result<f64> {
    let mut best = z.frobenius();
    for split in 1..z.order() {
        best = best.min(linalg::spectral_norm(&z.matricize(split))?);
    }
    Ok(best)
}

/// Injective norm: `sup |z(φ₁,…,φ_d)|` over the unit ball of the dual of
/// `base` in every slot.
pub fn injective_norm(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
    if let Some(b) = super::elementary_bracket(z, base) {
        return Ok(b.outward());
    }
    injective_bracket(z, base, settings).map(|b| b.outward())
}

fn injective_bracket(z: &DenseTensor, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
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
        BaseNorm::Linf => Ok(Bracket::exact(z.max_abs(), Method::VertexEnumeration)),
        BaseNorm::L1 => {
            let bits = n * (d - 1);
            let needed = 1u128 << bits.min(127);
            if bits <= 64 && needed / 2 <= settings.vertex_budget {
                Ok(Bracket::exact(cube_enumeration(&z), Method::VertexEnumeration))
            } else if settings.vertex_budget == 0 {
                Err(Error::DimensionTooLarge {
                    what: "dual vertex tuples",
                    needed,
                    budget: settings.vertex_budget,
                })
            } else {
                let lower = alternating_max(&z, base, settings).value;
                Ok(Bracket::new(
                    lower,
                    z.l1(),
                    Method::AlternatingMaximization,
                    Method::CoefficientL1,
                ))
            }
        }
        BaseNorm::L2 => {
            if d == 2 {
                let s = linalg::spectral_norm(&z.matricize(1))?;
                return Ok(Bracket::exact(s, Method::Svd));
            }
            let unfold = unfolding_bound(&z)?;
            let alt = alternating_max(&z, base, settings).value;
            let generic = Bracket::new(
                alt.min(unfold),
                unfold,
                Method::AlternatingMaximization,
                Method::UnfoldingSpectral,
            );
            if symmetry_defect(&z) <= settings.symmetry_tol * z.max_abs().max(1.0) {
                // symmetric forms attain their injective norm on the diagonal
                let sym = SymTensor::from_dense_unchecked(z.clone());
                let s = sup_on_sphere(&[sym], BaseNorm::L2, BaseNorm::L2, settings)?;
                let b = s.bracket.with_methods(Method::BranchAndBound, Method::BranchAndBound);
                Ok(b.intersect(&generic))
            } else {
                Ok(generic)
            }
        }
    }
}

/// Exact ε under the ℓ1 base: sign vectors in the first d−1 slots and the
/// ℓ1 norm of what remains. The overall sign is fixed in slot 0.
fn cube_enumeration(z: &DenseTensor) -> f64 {
    let (n, d) = (z.dim(), z.order());
    fn recurse(flat: &[f64], n: usize, slots_left: usize, first: bool) -> f64 {
        if slots_left == 0 {
            return flat.iter().map(|v| v.abs()).sum();
        }
        let block = flat.len() / n;
        let masks = if first { 1usize << (n - 1) } else { 1usize << n };
        let mut best = 0.0f64;
        let mut acc = vec![0.0; block];
        for mask in 0..masks {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for i in 0..n {
                let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                for (a, v) in acc.iter_mut().zip(&flat[i * block..(i + 1) * block]) {
                    *a += s * v;
                }
            }
            best = best.max(recurse(&acc, n, slots_left - 1, false));
        }
        best
    }
    recurse(z.entries(), n, d - 1, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::veronese;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn diag_one_minus_one_under_l2() {
        let z = DenseTensor::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let b = injective_norm(&z, BaseNorm::L2, &Settings::default()).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_tensor_under_linf() {
        let mut z = DenseTensor::elementary(&[e(2, 0), e(2, 1)]).unwrap();
        z.axpy(1.0, &DenseTensor::elementary(&[e(2, 1), e(2, 0)]).unwrap())
            .unwrap();
        let b = injective_norm(&z, BaseNorm::Linf, &Settings::default()).unwrap();
        assert!(b.contains(1.0, 0.0) && b.rel_gap() < 1e-14);
        assert_eq!(b.method_lower, Method::VertexEnumeration);
    }

    #[test]
    fn elementary_tensors_attain_the_product() {
        let x = vec![vec![1.0, -2.0, 0.5], vec![0.3, 0.0, 1.0], vec![2.0, 1.0, -1.0]];
        let z = DenseTensor::elementary(&x).unwrap();
        for base in BaseNorm::ALL {
            let prod: f64 = x.iter().map(|v| base.norm(v)).product();
            let b = injective_norm(&z, base, &Settings::default()).unwrap();
            assert!(b.contains(prod, 1e-9), "{base}: {b:?} vs {prod}");
        }
    }

    #[test]
    fn veronese_under_l2_uses_diagonal() {
        let v = veronese(&[3.0, 4.0], 3).unwrap();
        let b = injective_norm(v.as_dense(), BaseNorm::L2, &Settings::default()).unwrap();
        assert!(b.contains(125.0, 1e-8), "{b:?}");
    }

    #[test]
    fn l1_enumeration_matches_brute_force() {
        let z = DenseTensor::new(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.0, 2.0, 1.0]).unwrap();
        let mut brute = 0.0f64;
        let signs = crate::numerics::ball_vertices(2, BaseNorm::Linf).unwrap();
        for a in &signs {
            for b in &signs {
                for c in &signs {
                    let v = z.contract_all(&[a, b, c]).unwrap().abs();
                    brute = brute.max(v);
                }
            }
        }
        let got = injective_norm(&z, BaseNorm::L1, &Settings::default()).unwrap();
        assert!((got.lower - brute).abs() < 1e-12 && got.rel_gap() < 1e-14);
    }
}
