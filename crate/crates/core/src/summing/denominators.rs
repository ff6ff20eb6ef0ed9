//! The two summing denominators
//! `D_q = sup_f Σᵢ |f(uᵢ) − f(vᵢ)|^q` where `f` ranges over the unit ball
//! of homogeneous polynomials (Poly) or of the Lipschitz dual of the cone
//! (Lip).
//!
//! Both are handled through the support function
//! `N(g) = sup_f Σᵢ gᵢ (f(uᵢ) − f(vᵢ))`, a seminorm on ℝᵏ, since
//! `D_q^{1/q} = sup_{‖g‖_{q'} ≤ 1} N(g)`. For `q = 1` the supremum is
//! attained at sign vectors; for `q > 1` it is bracketed by branch and
//! bound on the `ℓ_{q'}` sphere.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::{Functional, PairFamily};
use crate::cone::{cone_distance_bases, ConeMetricSpace};
use crate::error::{Error, Result};
use crate::norms::sym_projective_detailed;
use crate::numerics::lp::{LpBuilder, Relation};
use crate::numerics::{BaseNorm, Bracket, LpStatus, Method, Settings};
use crate::sphere::sup_on_sphere;
use crate::tensor::{veronese, DenseTensor, SymTensor};

/// A certified bracket with the best functional found and its pair
/// increments `f(uᵢ) − f(vᵢ)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Denominator {
    pub bracket: Bracket,
    pub functional: Functional,
    pub values: Vec<f64>,
}

pub(crate) struct Support {
    pub bracket: Bracket,
    pub values: Vec<f64>,
    pub functional: Functional,
}

/// Linear maximization over a unit ball of functionals.
pub(crate) trait DualBall: Sync {
    fn pairs(&self) -> usize;
    fn support(&self, g: &[f64]) -> Result<Support>;
    /// Certified bound on `sup_f |f(uᵢ) − f(vᵢ)|`.
    fn axis_bound(&self, i: usize) -> f64;
    fn zero_functional(&self) -> Functional;
}

pub(crate) struct PolyBall {
    diffs: Vec<SymTensor>,
    base: BaseNorm,
    settings: Settings,
    axis: OnceLock<Vec<f64>>,
}

impl PolyBall {
    pub(crate) fn new(diffs: Vec<SymTensor>, base: BaseNorm, settings: &Settings) -> Self {
        Self {
            diffs,
            base,
            settings: settings.clone(),
            axis: OnceLock::new(),
        }
    }

    /// `‖ν(xᵢ) − ν(yᵢ)‖_{s,π}` upper bounds, computed on first use.
    fn axis(&self) -> &[f64] {
        self.axis.get_or_init(|| {
            self.diffs
                .par_iter()
                .map(|w| {
                    sym_projective_detailed(w, self.base, &self.settings).map_or(f64::INFINITY, |r| r.bracket.upper)
                })
                .collect()
        })
    }

    pub(crate) fn values_of(&self, coefficients: &SymTensor) -> Result<Vec<f64>> {
        self.diffs
            .iter()
            .map(|w| coefficients.as_dense().inner(w.as_dense()))
            .collect()
    }
}

impl DualBall for PolyBall {
    fn pairs(&self) -> usize {
        self.diffs.len()
    }

    fn support(&self, g: &[f64]) -> Result<Support> {
        let mut u = self.diffs[0].scale(g[0]);
        for (w, gi) in self.diffs.iter().zip(g).skip(1) {
            u.axpy(*gi, w)?;
        }
        let r = sym_projective_detailed(&u, self.base, &self.settings)?;
        let values = self.values_of(&r.dual)?;
        Ok(Support {
            bracket: r.bracket,
            values,
            functional: Functional::Polynomial { coefficients: r.dual },
        })
    }

    fn axis_bound(&self, i: usize) -> f64 {
        self.axis()[i]
    }

    fn zero_functional(&self) -> Functional {
        let w = &self.diffs[0];
        Functional::Polynomial {
            coefficients: SymTensor::zeros(w.order(), w.dim()).expect("shape of an existing tensor"),
        }
    }
}

/// Lipschitz functions on the finite cone point set of a family, pinned to
/// zero at the origin. Pairwise constraint radii come from distance
/// brackets: lower radii give feasible (certified) functions, upper radii
/// give a relaxation whose optimum bounds the true one from above.
pub(crate) struct LipBall {
    pub(crate) points: Vec<Vec<f64>>,
    pub(crate) pair_index: Vec<(usize, usize)>,
    r_lo: Vec<f64>,
    r_hi: Vec<f64>,
    exact: bool,
}

impl LipBall {
    pub(crate) fn new(family: &PairFamily, space: &ConeMetricSpace, settings: &Settings) -> Result<Self> {
        if family.dim() != space.dim {
            return Err(Error::ShapeMismatch("family and cone space differ in dimension".into()));
        }
        let idx = family.cone_index(space.degree);
        let p = idx.points.len();
        let jobs: Vec<(usize, usize)> = (0..p).flat_map(|a| (a + 1..p).map(move |b| (a, b))).collect();
        let brackets: Vec<Bracket> = jobs
            .par_iter()
            .map(|&(a, b)| {
                if a == 0 {
                    // every reasonable cross-norm is exact on elementary tensors
                    Ok(Bracket::exact(
                        space.base.norm(&idx.points[b]).powi(space.degree as i32),
                        Method::BaseNorm,
                    ))
                } else {
                    cone_distance_bases(&idx.points[a], &idx.points[b], space, settings)
                }
            })
            .collect::<Result<_>>()?;
        let mut r_lo = vec![0.0; p * p];
        let mut r_hi = vec![0.0; p * p];
        let mut exact = true;
        for (&(a, b), br) in jobs.iter().zip(&brackets) {
            r_lo[a * p + b] = br.lower;
            r_lo[b * p + a] = br.lower;
            r_hi[a * p + b] = br.upper;
            r_hi[b * p + a] = br.upper;
            if br.gap() > 1e-12 * br.upper.max(1e-300) {
                exact = false;
            }
        }
        Ok(Self {
            points: idx.points,
            pair_index: idx.pairs,
            r_lo,
            r_hi,
            exact,
        })
    }

    fn weights(&self, g: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.points.len()];
        for (&(a, b), gi) in self.pair_index.iter().zip(g) {
            c[a] += gi;
            c[b] -= gi;
        }
        c
    }

    /// `max Σ_p c_p h_p` over `|h_a − h_b| ≤ r_ab`, `h_0 = 0`.
    fn solve(&self, c: &[f64], radii: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = self.points.len();
        if c.iter().all(|v| *v == 0.0) {
            return Ok((0.0, vec![0.0; p]));
        }
        let mut lp = LpBuilder::new();
        for a in 1..p {
            let r = radii[a];
            lp.add_var(-c[a], -r, r);
        }
        for a in 1..p {
            for b in a + 1..p {
                let r = radii[a * p + b];
                lp.add_row(vec![(a - 1, 1.0), (b - 1, -1.0)], Relation::Le, r);
                lp.add_row(vec![(a - 1, 1.0), (b - 1, -1.0)], Relation::Ge, -r);
            }
        }
        let sol = lp.solve()?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::NumericalFailure(format!(
                "Lipschitz LP ended with status {:?}",
                sol.status
            )));
        }
        let mut h = vec![0.0; p];
        h[1..].copy_from_slice(&sol.x);
        Ok((-sol.objective, h))
    }

    pub(crate) fn increments(&self, h: &[f64]) -> Vec<f64> {
        self.pair_index.iter().map(|&(a, b)| h[a] - h[b]).collect()
    }
}

impl DualBall for LipBall {
    fn pairs(&self) -> usize {
        self.pair_index.len()
    }

    fn support(&self, g: &[f64]) -> Result<Support> {
        let c = self.weights(g);
        let (lo, h) = self.solve(&c, &self.r_lo)?;
        let hi = if self.exact {
            lo
        } else {
            self.solve(&c, &self.r_hi)?.0.max(lo)
        };
        let values = self.increments(&h);
        Ok(Support {
            bracket: Bracket::new(lo, hi, Method::McShaneLp, Method::McShaneLp),
            values,
            functional: Functional::Table { values: h },
        })
    }

    fn axis_bound(&self, i: usize) -> f64 {
        let (a, b) = self.pair_index[i];
        self.r_hi[a * self.points.len() + b]
    }

    fn zero_functional(&self) -> Functional {
        Functional::Table {
            values: vec![0.0; self.points.len()],
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "summing exponent q = {q} must be finite and ≥ 1"
        )));
    }
    Ok(())
}

fn q_norm(a: &[f64], q: f64) -> f64 {
    a.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

fn power_sum(a: &[f64], q: f64) -> f64 {
    a.iter().map(|v| v.abs().powf(q)).sum()
}

/// Maximum of `N(σ)` over sign vectors with `σ₀ = +1`; this is `D₁`.
fn sign_enumeration(ball: &dyn DualBall, cap: usize) -> Result<Denominator> {
    let k = ball.pairs();
    if k > cap {
        return Err(Error::FamilyTooLarge { k, cap });
    }
    let patterns: Vec<u64> = (0..1u64 << (k - 1)).collect();
    let results: Vec<Support> = patterns
        .par_iter()
        .map(|mask| {
            let g: Vec<f64> = (0..k)
                .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            ball.support(&g)
        })
        .collect::<Result<_>>()?;
    let mut bracket = results[0].bracket;
    for r in &results[1..] {
        bracket = bracket.max(&r.bracket);
    }
    let best = results
        .into_iter()
        .max_by(|a, b| power_sum(&a.values, 1.0).total_cmp(&power_sum(&b.values, 1.0)))
        .expect("at least one pattern");
    let lower = bracket.lower.max(power_sum(&best.values, 1.0)).min(bracket.upper);
    Ok(Denominator {
        bracket: Bracket::new(
            lower,
            bracket.upper,
            Method::SignPatternEnumeration,
            Method::SignPatternEnumeration,
        ),
        functional: best.functional,
        values: best.values,
    })
}

struct Cell {
    ub: f64,
    center: Vec<f64>,
    radius: Vec<f64>,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.ub == other.ub
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub)
    }
}

/// Hölder-optimal `g` for increments `a`: `‖g‖_{q'} = 1`, `Σ gᵢaᵢ = ‖a‖_q`.
fn holder_dual(a: &[f64], q: f64) -> Option<Vec<f64>> {
    let g: Vec<f64> = a.iter().map(|v| v.signum() * v.abs().powf(q - 1.0)).collect();
    let qp = q / (q - 1.0);
    let n = q_norm(&g, qp);
    (n > 0.0).then(|| g.iter().map(|v| v / n).collect())
}

/// Bracket for `sup_{‖g‖_{q'} ≤ 1} N(g) = D_q^{1/q}`, `q > 1`.
fn lq_sphere_sup(ball: &dyn DualBall, q: f64, budget: usize, tol: f64) -> Result<(Bracket, Support)> {
    let k = ball.pairs();
    let qp = q / (q - 1.0);
    let axis: Vec<f64> = (0..k).map(|i| ball.axis_bound(i)).collect();
    let trivial = q_norm(&axis, q);
    let mut evals = 0usize;
    let mut best: Option<Support> = None;
    let mut best_val = 0.0f64;
    let consider = |s: Support, best: &mut Option<Support>, best_val: &mut f64| {
        let v = q_norm(&s.values, q);
        if best.is_none() || v > *best_val {
            *best_val = v;
            *best = Some(s);
        }
    };
    let min_norm = |c: &[f64], r: &[f64]| -> f64 {
        let m: Vec<f64> = c.iter().zip(r).map(|(ci, ri)| (ci.abs() - ri).max(0.0)).collect();
        q_norm(&m, qp)
    };

    let mut heap = BinaryHeap::new();
    let initial: Vec<(Vec<f64>, Vec<f64>)> = (0..k)
        .map(|j| {
            let mut c = vec![0.0; k];
            c[j] = 1.0;
            let mut r = vec![1.0; k];
            r[j] = 0.0;
            (c, r)
        })
        .collect();
    let first: Vec<Support> = initial
        .par_iter()
        .map(|(c, _)| ball.support(c))
        .collect::<Result<_>>()?;
    for ((c, r), s) in initial.into_iter().zip(first) {
        evals += 1;
        let spread: f64 = r.iter().zip(&axis).map(|(ri, ai)| ri * ai).sum();
        let ub = (s.bracket.upper + spread) / min_norm(&c, &r);
        consider(s, &mut best, &mut best_val);
        heap.push(Cell {
            ub,
            center: c,
            radius: r,
        });
    }
    // conditional-gradient steps from the incumbent
    let ascend = |best: &mut Option<Support>, best_val: &mut f64, evals: &mut usize| -> Result<()> {
        for _ in 0..20 {
            let Some(g) = best.as_ref().and_then(|s| holder_dual(&s.values, q)) else {
                return Ok(());
            };
            let s = ball.support(&g)?;
            *evals += 1;
            let v = q_norm(&s.values, q);
            if v <= *best_val * (1.0 + 1e-12) {
                return Ok(());
            }
            *best_val = v;
            *best = Some(s);
        }
        Ok(())
    };
    ascend(&mut best, &mut best_val, &mut evals)?;

    let mut upper = heap.peek().map_or(best_val, |c| c.ub);
    while let Some(top) = heap.pop() {
        upper = top.ub;
        if top.ub <= best_val * (1.0 + tol) || evals >= budget {
            heap.push(top);
            break;
        }
        let (i, _) = top
            .radius
            .iter()
            .zip(&axis)
            .enumerate()
            .map(|(i, (r, a))| (i, r * a))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty box");
        let children: Vec<(Vec<f64>, Vec<f64>)> = [-1.0, 1.0]
            .iter()
            .map(|s| {
                let mut c = top.center.clone();
                let mut r = top.radius.clone();
                r[i] *= 0.5;
                c[i] += s * r[i];
                (c, r)
            })
            .collect();
        let supports: Vec<Support> = children
            .par_iter()
            .map(|(c, _)| ball.support(c))
            .collect::<Result<_>>()?;
        for ((c, r), s) in children.into_iter().zip(supports) {
            evals += 1;
            let spread: f64 = r.iter().zip(&axis).map(|(ri, ai)| ri * ai).sum();
            let ub = ((s.bracket.upper + spread) / min_norm(&c, &r)).min(top.ub);
            consider(s, &mut best, &mut best_val);
            heap.push(Cell {
                ub,
                center: c,
                radius: r,
            });
        }
        upper = heap.peek().map_or(best_val, |c| c.ub);
    }
    ascend(&mut best, &mut best_val, &mut evals)?;
    let upper = upper.max(best_val).min(trivial.max(best_val));
    let support = best.expect("at least one evaluation");
    Ok((
        Bracket::new(best_val, upper, Method::FrankWolfe, Method::BranchAndBound),
        support,
    ))
}

pub(crate) fn generic(ball: &dyn DualBall, q: f64, settings: &Settings) -> Result<Denominator> {
    if ball.pairs() == 0 {
        return Err(Error::InvalidInput("empty family".into()));
    }
    if q == 1.0 {
        return sign_enumeration(ball, settings.family_cap);
    }
    let (s, support) = lq_sphere_sup(ball, q, settings.denominator_evals, settings.bracket_gap)?;
    Ok(Denominator {
        bracket: Bracket::new(s.lower.powf(q), s.upper.powf(q), s.method_lower, s.method_upper),
        functional: support.functional,
        values: support.values,
    })
}

fn poly_ball_closed_form(
    diffs: &[SymTensor],
    base: BaseNorm,
    q: f64,
    settings: &Settings,
) -> Result<Option<Denominator>> {
    if q != 2.0 {
        return Ok(None);
    }
    let (d, n) = (diffs[0].order(), diffs[0].dim());
    let values_of =
        |c: &SymTensor| -> Result<Vec<f64>> { diffs.iter().map(|w| c.as_dense().inner(w.as_dense())).collect() };
    if d == 1 {
        // sup over the dual ball of ‖(⟨φ, wᵢ⟩)ᵢ‖₂
        let sup = sup_on_sphere(diffs, base.dual(), BaseNorm::L2, settings)?;
        if !sup.converged {
            return Ok(None);
        }
        let coefficients = SymTensor::from_dense_unchecked(DenseTensor::new(1, n, sup.argmax.clone())?);
        let values = values_of(&coefficients)?;
        let lower = q_norm(&values, 2.0).max(sup.bracket.lower).min(sup.bracket.upper);
        return Ok(Some(Denominator {
            bracket: Bracket::new(
                lower * lower,
                sup.bracket.upper.powi(2),
                Method::BranchAndBound,
                Method::BranchAndBound,
            ),
            functional: Functional::Polynomial { coefficients },
            values,
        }));
    }
    if d == 2 && base == BaseNorm::L2 {
        // extreme points of the spectral-norm ball of symmetric matrices
        // are ±I and ±(I − 2vvᵀ)
        let mut identity = SymTensor::zeros(2, n)?;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            identity.axpy(1.0, &veronese(&e, 2)?)?;
        }
        let traces = values_of(&identity)?;
        let forms: Vec<SymTensor> = diffs
            .iter()
            .zip(&traces)
            .map(|(w, t)| identity.scale(*t).sub(&w.scale(2.0)))
            .collect::<Result<_>>()?;
        let sup = sup_on_sphere(&forms, BaseNorm::L2, BaseNorm::L2, settings)?;
        if !sup.converged {
            return Ok(None);
        }
        let v = &sup.argmax;
        let reflection = identity.sub(&veronese(v, 2)?.scale(2.0 / crate::numerics::linalg::dot(v, v)))?;
        let refl_values = values_of(&reflection)?;
        let (coefficients, values) = if q_norm(&traces, 2.0) >= q_norm(&refl_values, 2.0) {
            (identity, traces)
        } else {
            (reflection, refl_values)
        };
        let s0 = q_norm(&values, 2.0);
        let upper = sup.bracket.upper.max(s0);
        let lower = s0.min(upper);
        return Ok(Some(Denominator {
            bracket: Bracket::new(
                lower * lower,
                upper * upper,
                Method::BranchAndBound,
                Method::BranchAndBound,
            ),
            functional: Functional::Polynomial { coefficients },
            values,
        }));
    }
    Ok(None)
}

/// `sup_{‖p‖ ≤ 1} Σ |p(xᵢ) − p(yᵢ)|^q` over `d`-homogeneous scalar
/// polynomials with the sup norm over the unit ball of `base`.
pub fn poly_denominator_detailed(
    family: &PairFamily,
    d: usize,
    base: BaseNorm,
    q: f64,
    settings: &Settings,
) -> Result<Denominator> {
    check_q(q)?;
    let diffs = family.differences(d)?;
    if diffs.iter().all(|w| w.as_dense().is_zero()) {
        return Ok(Denominator {
            bracket: Bracket::zero(),
            functional: Functional::Polynomial {
                coefficients: SymTensor::zeros(d, family.dim())?,
            },
            values: vec![0.0; family.len()],
        });
    }
    if q == 1.0 && family.len() > settings.family_cap {
        return Err(Error::FamilyTooLarge {
            k: family.len(),
            cap: settings.family_cap,
        });
    }
    if let Some(done) = poly_ball_closed_form(&diffs, base, q, settings)? {
        return Ok(done);
    }
    let ball = PolyBall::new(diffs, base, settings);
    generic(&ball, q, settings)
}

pub fn poly_denominator(family: &PairFamily, d: usize, base: BaseNorm, q: f64, settings: &Settings) -> Result<Bracket> {
    Ok(poly_denominator_detailed(family, d, base, q, settings)?.bracket)
}

/// `sup Σ |h(ν(xᵢ)) − h(ν(yᵢ))|^q` over 1-Lipschitz `h` on the cone with
/// `h(0) = 0`, restricted to the family's points (which loses nothing by
/// McShane extension).
pub fn lip_denominator_detailed(
    family: &PairFamily,
    space: &ConeMetricSpace,
    q: f64,
    settings: &Settings,
) -> Result<Denominator> {
    check_q(q)?;
    if q == 1.0 && family.len() > settings.family_cap {
        return Err(Error::FamilyTooLarge {
            k: family.len(),
            cap: settings.family_cap,
        });
    }
    let ball = LipBall::new(family, space, settings)?;
    if ball.pair_index.iter().all(|(a, b)| a == b) {
        return Ok(Denominator {
            bracket: Bracket::zero(),
            functional: ball.zero_functional(),
            values: vec![0.0; family.len()],
        });
    }
    generic(&ball, q, settings)
}

pub fn lip_denominator(family: &PairFamily, space: &ConeMetricSpace, q: f64, settings: &Settings) -> Result<Bracket> {
    Ok(lip_denominator_detailed(family, space, q, settings)?.bracket)
}
