//! Homogeneous polynomials `P: ℝⁿ → ℝᵐ` stored by their symmetric
//! coefficient tensors, so that the linearization `T_P` on symmetric
//! tensors is the stored data itself.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::ConeMetricSpace;
use crate::error::{Error, Result};
use crate::norms::{tensor_distance_upper, NormKind};
use crate::numerics::{BaseNorm, Bracket, Method, SeedStream, Settings};
use crate::sphere::{sup_on_sphere, SphereSup};
use crate::tensor::{symmetrize, veronese, ConePoint, DenseTensor, SymTensor};

/// `P(x)_j = ⟨A_j, x^{⊗d}⟩` with symmetric `A_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRecord", into = "PolyRecord")]
pub struct HomPoly {
    degree: usize,
    dim: usize,
    coefficients: Vec<SymTensor>,
}

#[derive(Serialize, Deserialize)]
struct PolyRecord {
    degree: usize,
    dim: usize,
    targets: usize,
    coefficients: Vec<SymTensor>,
}

impl TryFrom<PolyRecord> for HomPoly {
    type Error = Error;

    fn try_from(r: PolyRecord) -> Result<Self> {
        if r.targets != r.coefficients.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} targets declared, {} coefficient tensors given",
                r.targets,
                r.coefficients.len()
            )));
        }
        let p = HomPoly::new(r.coefficients)?;
        if p.degree != r.degree || p.dim != r.dim {
            return Err(Error::ShapeMismatch(format!(
                "declared degree {} and dimension {} do not match the coefficients",
                r.degree, r.dim
            )));
        }
        Ok(p)
    }
}

impl From<HomPoly> for PolyRecord {
    fn from(p: HomPoly) -> Self {
        PolyRecord {
            degree: p.degree,
            dim: p.dim,
            targets: p.coefficients.len(),
            coefficients: p.coefficients,
        }
    }
}

impl HomPoly {
    pub fn new(coefficients: Vec<SymTensor>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial needs at least one target".into()))?;
        let (degree, dim) = (first.order(), first.dim());
        if coefficients.iter().any(|a| a.order() != degree || a.dim() != dim) {
            return Err(Error::ShapeMismatch("coefficient tensors of unequal shape".into()));
        }
        Ok(Self {
            degree,
            dim,
            coefficients,
        })
    }

    pub fn zero(dim: usize, degree: usize, targets: usize) -> Result<Self> {
        Self::new(vec![SymTensor::zeros(degree, dim)?; targets.max(1)])
    }

    /// Scalar polynomial from an arbitrary coefficient tensor, symmetrized.
    pub fn from_tensor(t: &DenseTensor) -> Self {
        Self::new(vec![symmetrize(t)]).expect("one coefficient tensor")
    }

    /// `x ↦ Mx` for the rows of `M`.
    pub fn linear(rows: &[Vec<f64>]) -> Result<Self> {
        let coefficients = rows
            .iter()
            .map(|r| DenseTensor::new(1, r.len(), r.clone()).map(SymTensor::from_dense_unchecked))
            .collect::<Result<_>>()?;
        Self::new(coefficients)
    }

    /// `x ↦ ⟨φ, x⟩ᵈ`.
    pub fn norming_power(phi: &[f64], degree: usize) -> Result<Self> {
        Self::new(vec![veronese(phi, degree)?])
    }

    /// Gaussian coefficients, symmetrized.
    pub fn random<R: Rng>(dim: usize, degree: usize, targets: usize, rng: &mut R) -> Result<Self> {
        let len = dim.pow(degree as u32);
        let coefficients = (0..targets)
            .map(|_| {
                let entries = (0..len).map(|_| rng.sample(StandardNormal)).collect();
                DenseTensor::new(degree, dim, entries).map(|t| symmetrize(&t))
            })
            .collect::<Result<_>>()?;
        Self::new(coefficients)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn targets(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[SymTensor] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|a| a.as_dense().is_zero())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|a| a.scale(s)).collect(),
            ..*self
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "point of dimension {} for a polynomial on ℝ^{}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.coefficients.iter().map(|a| a.eval_power(x)).collect())
    }

    /// `T_P(u) = (⟨A_j, u⟩)_j`.
    pub fn apply_operator(&self, u: &SymTensor) -> Result<Vec<f64>> {
        if u.order() != self.degree || u.dim() != self.dim {
            return Err(Error::ShapeMismatch(
                "symmetric tensor does not match the polynomial".into(),
            ));
        }
        self.coefficients
            .iter()
            .map(|a| a.as_dense().inner(u.as_dense()))
            .collect()
    }

    pub fn restrict_to_cone(&self) -> VOperator<'_> {
        VOperator { poly: self }
    }
}

/// `T_P` restricted to the Veronese cone, acting on factored points.
#[derive(Debug, Clone, Copy)]
pub struct VOperator<'a> {
    pub poly: &'a HomPoly,
}

impl VOperator<'_> {
    pub fn apply(&self, u: &ConePoint) -> Result<Vec<f64>> {
        if u.degree != self.poly.degree {
            return Err(Error::ShapeMismatch("cone point degree differs".into()));
        }
        self.poly.eval(&u.base)
    }
}

/// Detailed supremum of `‖P(x)‖` over the unit ball.
pub fn poly_norm_detailed(p: &HomPoly, base: BaseNorm, settings: &Settings) -> Result<SphereSup> {
    sup_on_sphere(p.coefficients(), base, settings.codomain, settings)
}

/// `‖P‖ = sup_{‖x‖ ≤ 1} ‖P(x)‖`; budget exhaustion carries the bracket.
pub fn poly_norm(p: &HomPoly, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
    let s = poly_norm_detailed(p, base, settings)?;
    if s.converged {
        Ok(s.bracket)
    } else {
        Err(Error::BudgetExhausted { best: s.bracket })
    }
}

/// Factor relating Lipschitz constants under ε or π to `‖P‖`.
pub fn lipschitz_sandwich_constant(d: usize) -> f64 {
    let mut c = 2f64.powi(d as i32 - 1);
    for k in 1..=d {
        c *= d as f64 / k as f64;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeLipschitz {
    pub bracket: Bracket,
    pub poly_norm: Bracket,
    /// Base points of the best certified pair.
    pub witness: (Vec<f64>, Vec<f64>),
}

/// Certified cone ratio `‖P(x) − P(y)‖ / d_α(ν(x), ν(y))`, using an upper
/// bound on the distance.
fn certified_ratio(p: &HomPoly, x: &[f64], y: &[f64], space: &ConeMetricSpace, settings: &Settings) -> Result<f64> {
    let num = diff_norm(p, x, y, settings.codomain)?;
    if num == 0.0 {
        return Ok(0.0);
    }
    let d = space.degree as i32;
    // every reasonable cross-norm is exact on elementary tensors
    let dist = if y.iter().all(|v| *v == 0.0) {
        space.base.norm(x).powi(d)
    } else if x.iter().all(|v| *v == 0.0) {
        space.base.norm(y).powi(d)
    } else {
        let diff = veronese(x, space.degree)?.sub(&veronese(y, space.degree)?)?;
        tensor_distance_upper(&diff, space.selector(), settings)?
    };
    Ok(if dist > 0.0 { num / dist } else { 0.0 })
}

fn diff_norm(p: &HomPoly, x: &[f64], y: &[f64], codomain: BaseNorm) -> Result<f64> {
    let px = p.eval(x)?;
    let py = p.eval(y)?;
    let diff: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
    Ok(codomain.norm(&diff))
}

/// Ratio used to steer the pair search; the Frobenius distance stands in
/// for the cone metric.
fn proxy_ratio(p: &HomPoly, x: &[f64], y: &[f64], codomain: BaseNorm) -> f64 {
    let d = p.degree();
    let (Ok(vx), Ok(vy)) = (veronese(x, d), veronese(y, d)) else {
        return 0.0;
    };
    let dist = vx.sub(&vy).map(|t| t.as_dense().frobenius()).unwrap_or(0.0);
    if dist <= 1e-14 {
        return 0.0;
    }
    diff_norm(p, x, y, codomain).unwrap_or(0.0) / dist
}

/// Coordinate ascent on the pair `(x, y)` with a shrinking step.
fn pair_ascent(p: &HomPoly, x: &mut [f64], y: &mut [f64], codomain: BaseNorm) -> f64 {
    let n = x.len();
    let mut best = proxy_ratio(p, x, y, codomain);
    let mut step = 0.5;
    let mut evals = 0;
    while step > 1e-6 && evals < 600 {
        let mut improved = false;
        for slot in 0..2 * n {
            for dir in [1.0, -1.0] {
                let v = if slot < n { &mut x[slot] } else { &mut y[slot - n] };
                let old = *v;
                *v = old + dir * step;
                evals += 1;
                let r = proxy_ratio(p, x, y, codomain);
                if r > best {
                    best = r;
                    improved = true;
                    break;
                }
                let v = if slot < n { &mut x[slot] } else { &mut y[slot - n] };
                *v = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

const CERTIFIED_CANDIDATES: usize = 6;

/// Bracket for the Lipschitz constant of `T_P` on the Veronese cone under
/// the space's cross-norm.
pub fn cone_lipschitz_constant(p: &HomPoly, space: &ConeMetricSpace, settings: &Settings) -> Result<ConeLipschitz> {
    if p.dim() != space.dim || p.degree() != space.degree {
        return Err(Error::ShapeMismatch("polynomial and cone space differ in shape".into()));
    }
    let sup = poly_norm_detailed(p, space.base, settings)?;
    let norm = sup.bracket;
    let (upper, method_upper) = if space.kind == NormKind::SymProjective || space.degree == 1 {
        (norm.upper, Method::TheoremIsometry)
    } else {
        (
            lipschitz_sandwich_constant(space.degree) * norm.upper,
            Method::TheoremBound,
        )
    };

    let n = p.dim();
    let zero = vec![0.0; n];
    let mut best = certified_ratio(p, &sup.argmax, &zero, space, settings)?;
    let mut witness = (sup.argmax.clone(), zero);

    let seeds = SeedStream::new(settings.seed).child(0x11b);
    let mut found: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..settings.lipschitz_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeds.fork(r as u64);
            let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mut y: Vec<f64> = match r % 3 {
                0 => x
                    .iter()
                    .map(|v| -v + 0.1 * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
                1 => x
                    .iter()
                    .map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
                _ => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            };
            let v = pair_ascent(p, &mut x, &mut y, settings.codomain);
            (v, x, y)
        })
        .collect();
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, x, y) in found.into_iter().take(CERTIFIED_CANDIDATES) {
        let r = certified_ratio(p, &x, &y, space, settings)?;
        if r > best {
            best = r;
            witness = (x, y);
        }
    }
    let lower = best.min(upper);
    Ok(ConeLipschitz {
        bracket: Bracket::new(lower, upper, Method::PairSearch, method_upper),
        poly_norm: norm,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationCheck {
    pub samples: usize,
    pub max_residual: f64,
    pub pass: bool,
}

pub const FACTORIZATION_TOL: f64 = 1e-10;

/// Compares `P(x)` with `T_P(x^{⊗d})` on the origin and random points.
pub fn factorization_check(p: &HomPoly, samples: usize, seed: u64) -> Result<FactorizationCheck> {
    let mut rng = SeedStream::new(seed).fork(0xfac);
    let mut max_residual: f64 = 0.0;
    for s in 0..=samples {
        let x: Vec<f64> = if s == 0 {
            vec![0.0; p.dim()]
        } else {
            (0..p.dim()).map(|_| rng.sample(StandardNormal)).collect()
        };
        let direct = p.eval(&x)?;
        let via = p.apply_operator(&veronese(&x, p.degree())?)?;
        for (a, b) in direct.iter().zip(&via) {
            max_residual = max_residual.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Ok(FactorizationCheck {
        samples: samples + 1,
        max_residual,
        pass: max_residual <= FACTORIZATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn x1x2() -> HomPoly {
        HomPoly::from_tensor(&DenseTensor::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap())
    }

    fn x1_pow(d: usize, n: usize) -> HomPoly {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        HomPoly::norming_power(&e, d).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert!((x1x2().eval(&[2.0, 3.0]).unwrap()[0] - 6.0).abs() < 1e-12);
        assert_eq!(x1_pow(2, 2).eval(&[-2.0, 5.0]).unwrap(), vec![4.0]);
        assert_eq!(x1x2().eval(&[0.0, 0.0]).unwrap(), vec![0.0]);
        assert!(x1x2().eval(&[1.0]).is_err());
    }

    #[test]
    fn operator_examples() {
        let p = x1x2();
        let (x, y) = ([1.5, -0.5], [0.25, 2.0]);
        let u = veronese(&x, 2).unwrap().add(&veronese(&y, 2).unwrap()).unwrap();
        let want = p.eval(&x).unwrap()[0] + p.eval(&y).unwrap()[0];
        assert!((p.apply_operator(&u).unwrap()[0] - want).abs() < 1e-12);
        assert_eq!(p.apply_operator(&SymTensor::zeros(2, 2).unwrap()).unwrap(), vec![0.0]);
        let cone = ConePoint::new(x.to_vec(), 2).unwrap();
        assert_eq!(p.restrict_to_cone().apply(&cone).unwrap(), p.eval(&x).unwrap());
    }

    #[test]
    fn norm_examples() {
        let st = Settings::default();
        assert!(poly_norm(&x1x2(), BaseNorm::L2, &st).unwrap().contains(0.5, 1e-4));
        for base in BaseNorm::ALL {
            for d in 1..=3 {
                assert!(poly_norm(&x1_pow(d, 3), base, &st).unwrap().contains(1.0, 1e-4));
            }
        }
        let z = HomPoly::zero(3, 2, 1).unwrap();
        assert_eq!(poly_norm(&z, BaseNorm::L2, &st).unwrap().upper, 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        let st = Settings::default();
        let sp = ConeMetricSpace::new(2, 2, BaseNorm::L2, NormKind::SymProjective).unwrap();
        let l = cone_lipschitz_constant(&x1_pow(2, 2), &sp, &st).unwrap();
        assert!(l.bracket.contains(1.0, 1e-4), "{l:?}");
        let l = cone_lipschitz_constant(&x1x2(), &sp, &st).unwrap();
        assert!(l.bracket.contains(0.5, 1e-4) && l.bracket.rel_gap() < 1e-3, "{l:?}");
    }

    #[test]
    fn linear_case_is_operator_norm() {
        let st = Settings::default();
        let m = vec![vec![2.0, 1.0], vec![0.0, 1.0]];
        let p = HomPoly::linear(&m).unwrap();
        // singular values of [[2,1],[0,1]]: sqrt(3 ± sqrt(5))
        let want = (3.0 + 5f64.sqrt()).sqrt();
        for kind in NormKind::ALL {
            let sp = ConeMetricSpace::new(2, 1, BaseNorm::L2, kind).unwrap();
            let l = cone_lipschitz_constant(&p, &sp, &st).unwrap();
            assert!(l.bracket.contains(want, 1e-6), "{kind}: {l:?}");
        }
    }

    #[test]
    fn sandwich_bound_holds_for_injective() {
        let st = Settings::default();
        let mut rng = SeedStream::new(4).fork(0);
        let p = HomPoly::random(2, 2, 1, &mut rng).unwrap();
        let sp = ConeMetricSpace::new(2, 2, BaseNorm::L2, NormKind::Injective).unwrap();
        let l = cone_lipschitz_constant(&p, &sp, &st).unwrap();
        assert!(l.bracket.lower >= l.poly_norm.lower * (1.0 - 1e-9));
        assert!(l.bracket.lower <= lipschitz_sandwich_constant(2) * l.poly_norm.upper);
    }

    #[test]
    fn sandwich_constant_values() {
        assert_eq!(lipschitz_sandwich_constant(1), 1.0);
        assert!((lipschitz_sandwich_constant(2) - 4.0).abs() < 1e-12);
        assert!((lipschitz_sandwich_constant(3) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn factorization_identity() {
        let mut rng = SeedStream::new(9).fork(0);
        for d in 1..=3 {
            let p = HomPoly::random(3, d, 2, &mut rng).unwrap();
            let r = factorization_check(&p, 100, 1).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn serde_roundtrip_and_validation() {
        let mut rng = SeedStream::new(2).fork(0);
        let p = HomPoly::random(2, 3, 2, &mut rng).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: HomPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let bad = s.replace("\"targets\":2", "\"targets\":3");
        assert!(serde_json::from_str::<HomPoly>(&bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eval_is_homogeneous(seed in 0u64..1000, lambda in -3.0f64..3.0, d in 1usize..4) {
            let mut rng = SeedStream::new(seed).fork(0);
            let p = HomPoly::random(3, d, 2, &mut rng).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let lx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let a = p.eval(&lx).unwrap();
            let b = p.eval(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                let w = lambda.powi(d as i32) * v;
                prop_assert!((u - w).abs() <= 1e-10 * w.abs().max(1.0));
            }
        }

        #[test]
        fn operator_is_linear(seed in 0u64..1000, s in -2.0f64..2.0) {
            let mut rng = SeedStream::new(seed).fork(1);
            let p = HomPoly::random(2, 3, 1, &mut rng).unwrap();
            let u = HomPoly::random(2, 3, 1, &mut rng).unwrap().coefficients()[0].clone();
            let v = HomPoly::random(2, 3, 1, &mut rng).unwrap().coefficients()[0].clone();
            let mut w = u.clone();
            w.axpy(s, &v).unwrap();
            let lhs = p.apply_operator(&w).unwrap()[0];
            let rhs = p.apply_operator(&u).unwrap()[0] + s * p.apply_operator(&v).unwrap()[0];
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }
}
