//! Discrete Pietsch measures: probability weights on a dictionary of unit
//! functionals that dominate the increments of `P` on a family of pairs,
//! found by LP with column generation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::denominators::{DualBall, LipBall, PolyBall};
use super::{Functional, Mode, PairFamily};
use crate::cone::ConeMetricSpace;
use crate::error::{Error, Result};
use crate::norms::accept_best;
use crate::numerics::lp::{LpBuilder, Relation};
use crate::numerics::{BaseNorm, LpStatus, SeedStream, Settings};
use crate::poly::{poly_norm, HomPoly};
use crate::tensor::veronese;

/// Largest relative violation accepted as a valid certificate.
pub const PIETSCH_TOL: f64 = 1e-6;

/// Column generation for the minimal constant stops once no priced
/// functional improves the pricing objective by more than this factor.
const CONSTANT_GAP: f64 = 1e-4;

/// Pairs added per row-generation step.
const ROW_BATCH: usize = 64;

/// Weights `w` on functionals `f_j` such that, for every pair `i`,
/// `‖P(xᵢ) − P(yᵢ)‖^q ≤ C^q Σ_j w_j |f_j(xᵢ) − f_j(yᵢ)|^q` up to the
/// relative violation. Table functionals are indexed by `points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PietschCertificate {
    pub mode: Mode,
    pub q: f64,
    pub constant: f64,
    pub degree: usize,
    /// Distinct cone points of the test pairs, the origin first.
    pub points: Vec<Vec<f64>>,
    pub pairs: Vec<(usize, usize)>,
    pub functionals: Vec<Functional>,
    pub weights: Vec<f64>,
    /// `‖P(xᵢ) − P(yᵢ)‖^q`.
    pub numerators: Vec<f64>,
    /// `(Nᵢ − C^q Σ_j w_j A_ij) / Nᵢ`; positive entries are violations.
    pub residuals: Vec<f64>,
    pub violation: f64,
    pub refinements: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl Functional {
    fn value_at(&self, points: &[Vec<f64>], index: usize) -> f64 {
        match self {
            Functional::Polynomial { coefficients } => coefficients.eval_power(&points[index]),
            Functional::Table { values } => values[index],
        }
    }
}

/// `|f_j(uᵢ) − f_j(vᵢ)|^q` for one functional.
fn column(f: &Functional, points: &[Vec<f64>], pairs: &[(usize, usize)], q: f64) -> Vec<f64> {
    let vals: Vec<f64> = (0..points.len()).map(|i| f.value_at(points, i)).collect();
    pairs.iter().map(|&(a, b)| (vals[a] - vals[b]).abs().powf(q)).collect()
}

struct Problem<'a> {
    q: f64,
    points: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
    numerators: Vec<f64>,
    active: Vec<usize>,
    ball: Box<dyn DualBall + 'a>,
}

impl<'a> Problem<'a> {
    fn new(
        p: &HomPoly,
        family: &PairFamily,
        q: f64,
        mode: Mode,
        space: &ConeMetricSpace,
        settings: &Settings,
    ) -> Result<Self> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "summing exponent q = {q} must be finite and ≥ 1"
            )));
        }
        if p.dim() != family.dim() || p.dim() != space.dim || p.degree() != space.degree {
            return Err(Error::ShapeMismatch(
                "polynomial, family and cone space must share dimension and degree".into(),
            ));
        }
        let idx = family.cone_index(space.degree);
        let mut numerators = Vec::with_capacity(family.len());
        for &(a, b) in &idx.pairs {
            let pa = p.eval(&idx.points[a])?;
            let pb = p.eval(&idx.points[b])?;
            let diff: Vec<f64> = pa.iter().zip(&pb).map(|(u, v)| u - v).collect();
            numerators.push(settings.codomain.norm(&diff).powf(q));
        }
        let active = (0..numerators.len()).filter(|&i| numerators[i] > 0.0).collect();
        let ball: Box<dyn DualBall> = match mode {
            Mode::Poly => {
                let diffs = idx
                    .pairs
                    .iter()
                    .map(|&(a, b)| {
                        veronese(&idx.points[a], space.degree)?.sub(&veronese(&idx.points[b], space.degree)?)
                    })
                    .collect::<Result<_>>()?;
                Box::new(PolyBall::new(diffs, space.base, settings))
            }
            Mode::Lip => Box::new(LipBall::new(family, space, settings)?),
        };
        Ok(Self {
            q,
            points: idx.points,
            pairs: idx.pairs,
            numerators,
            active,
            ball,
        })
    }

    fn validate(&self, f: &Functional, degree: usize) -> Result<()> {
        match f {
            Functional::Polynomial { coefficients } => {
                if coefficients.order() != degree || coefficients.dim() != self.points[0].len() {
                    return Err(Error::ShapeMismatch("dictionary polynomial of the wrong shape".into()));
                }
            }
            Functional::Table { values } => {
                if values.len() != self.points.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "table of {} values for {} points",
                        values.len(),
                        self.points.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn column(&self, f: &Functional) -> Vec<f64> {
        column(f, &self.points, &self.pairs, self.q)
    }

    /// Active pairs that start in the LP: all of them for small families,
    /// otherwise those least covered by the best single column.
    fn initial_rows(&self, columns: &[Vec<f64>]) -> Vec<usize> {
        if self.active.len() <= 2 * ROW_BATCH {
            return self.active.clone();
        }
        let mut scored: Vec<(f64, usize)> = self
            .active
            .iter()
            .map(|&i| {
                let best = columns.iter().map(|c| c[i]).fold(0.0, f64::max);
                (
                    if best > 0.0 {
                        self.numerators[i] / best
                    } else {
                        f64::INFINITY
                    },
                    i,
                )
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut rows: Vec<usize> = scored.iter().take(2 * ROW_BATCH).map(|&(_, i)| i).collect();
        rows.sort_unstable();
        rows
    }

    /// Up to `ROW_BATCH` active pairs outside `rows` whose residual exceeds
    /// `threshold`, worst first.
    fn missing_rows(&self, rows: &[usize], residual: impl Fn(usize) -> f64, threshold: f64) -> Vec<usize> {
        let mut inside = vec![false; self.pairs.len()];
        for &i in rows {
            inside[i] = true;
        }
        let mut out: Vec<(f64, usize)> = self
            .active
            .iter()
            .filter(|&&i| !inside[i])
            .map(|&i| (residual(i), i))
            .filter(|(r, _)| *r > threshold)
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out.into_iter().take(ROW_BATCH).map(|(_, i)| i).collect()
    }

    /// Adds the maximizer of `Σ|aᵢ|` restricted to pair `i` for every
    /// active pair that no column separates.
    fn cover(&self, functionals: &mut Vec<Functional>, columns: &mut Vec<Vec<f64>>) -> Result<()> {
        let k = self.pairs.len();
        for &i in &self.active {
            if columns.iter().any(|c| c[i] > 0.0) {
                continue;
            }
            let mut g = vec![0.0; k];
            g[i] = 1.0;
            let s = self.ball.support(&g)?;
            columns.push(self.column(&s.functional));
            functionals.push(s.functional);
        }
        Ok(())
    }

    /// Conditional-gradient ascent on `Σ cᵢ |aᵢ(f)|^q` over the unit ball,
    /// started from the best existing columns; every iterate is returned.
    fn price(&self, c: &[f64], functionals: &[Functional], columns: &[Vec<f64>]) -> Result<Vec<Functional>> {
        let q = self.q;
        let score = |col: &[f64]| -> f64 { col.iter().zip(c).map(|(a, w)| a * w).sum() };
        let mut order: Vec<usize> = (0..columns.len()).collect();
        order.sort_by(|&a, &b| score(&columns[b]).total_cmp(&score(&columns[a])));
        let starts: Vec<Vec<f64>> = order
            .iter()
            .take(3)
            .map(|&j| {
                let vals: Vec<f64> = (0..self.points.len())
                    .map(|i| functionals[j].value_at(&self.points, i))
                    .collect();
                self.pairs.iter().map(|&(a, b)| vals[a] - vals[b]).collect()
            })
            .collect();
        let runs: Vec<Vec<Functional>> = starts
            .into_par_iter()
            .map(|mut a| {
                let mut found = Vec::new();
                let mut value = -1.0;
                for _ in 0..8 {
                    let g: Vec<f64> = a
                        .iter()
                        .zip(c)
                        .map(|(ai, ci)| {
                            let s = if *ai == 0.0 { 1.0 } else { ai.signum() };
                            ci * q * s * ai.abs().powf(q - 1.0).max(if q == 1.0 { 1.0 } else { 0.0 })
                        })
                        .collect();
                    if g.iter().all(|v| *v == 0.0) {
                        break;
                    }
                    let s = self.ball.support(&g)?;
                    let v: f64 = s.values.iter().zip(c).map(|(ai, ci)| ci * ai.abs().powf(q)).sum();
                    if v <= value * (1.0 + 1e-12) {
                        break;
                    }
                    value = v;
                    a = s.values.clone();
                    found.push(s.functional);
                }
                Ok(found)
            })
            .collect::<Result<_>>()?;
        Ok(runs.into_iter().flatten().collect())
    }
}

/// Scalar polynomials of certified sup norm at most one: `count` random
/// ones divided by an upper bound of their norm, plus `φᵈ` for a norming
/// functional `φ` of each nonzero endpoint.
pub fn poly_dictionary(
    family: &PairFamily,
    degree: usize,
    base: BaseNorm,
    count: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Vec<Functional>> {
    let n = family.dim();
    let seeds = SeedStream::new(seed).child(0xd1c);
    let mut out: Vec<Functional> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.fork(i as u64);
            let p = HomPoly::random(n, degree, 1, &mut rng)?;
            let norm = accept_best(poly_norm(&p, base, settings))?.upper;
            Ok((norm > 0.0).then(|| Functional::Polynomial {
                coefficients: p.coefficients()[0].scale(1.0 / norm),
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    for (x, y) in family.pairs() {
        for v in [x, y] {
            if v.iter().all(|c| *c == 0.0) {
                continue;
            }
            let phi = base.norming_functional(v);
            let scale = base.dual_norm(&phi).powi(degree as i32);
            out.push(Functional::Polynomial {
                coefficients: veronese(&phi, degree)?.scale(1.0 / scale),
            });
        }
    }
    Ok(out)
}

fn lp_failure(status: LpStatus) -> Error {
    Error::NumericalFailure(format!("Pietsch LP ended with status {status:?}"))
}

/// Minimal constant for which the (enlarged) dictionary admits a
/// dominating probability measure on the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PietschConstant {
    pub constant: f64,
    pub functionals: Vec<Functional>,
    pub weights: Vec<f64>,
    pub rounds: usize,
    /// No priced functional improved on the dictionary by more than the
    /// column-generation gap in the last round.
    pub converged: bool,
}

/// `min C` over measures on the dictionary, enlarged by column generation:
/// `C^q = min Σ_j v_j` subject to `Σ_j v_j A_ij ≥ Nᵢ`.
pub fn pietsch_constant(
    p: &HomPoly,
    family: &PairFamily,
    q: f64,
    dictionary: Vec<Functional>,
    mode: Mode,
    space: &ConeMetricSpace,
    settings: &Settings,
) -> Result<PietschConstant> {
    let prob = Problem::new(p, family, q, mode, space, settings)?;
    let mut functionals = dictionary;
    for f in &functionals {
        prob.validate(f, space.degree)?;
    }
    let mut columns: Vec<Vec<f64>> = functionals.iter().map(|f| prob.column(f)).collect();
    if prob.active.is_empty() {
        if functionals.is_empty() {
            functionals.push(prob.ball.zero_functional());
        }
        let m = functionals.len();
        return Ok(PietschConstant {
            constant: 0.0,
            weights: vec![1.0 / m as f64; m],
            functionals,
            rounds: 0,
            converged: true,
        });
    }
    prob.cover(&mut functionals, &mut columns)?;
    let rounds_cap = 4 * settings.pietsch_refinements.max(1);
    let mut rows = prob.initial_rows(&columns);
    let mut rounds = 0;
    loop {
        let (v, y) = constant_lp(&prob, &rows, &columns)?;
        let shortfall =
            |i: usize| -> f64 { 1.0 - columns.iter().zip(&v).map(|(c, w)| w * c[i]).sum::<f64>() / prob.numerators[i] };
        let missing = prob.missing_rows(&rows, shortfall, 1e-9);
        if !missing.is_empty() {
            rows.extend(missing);
            continue;
        }
        let total: f64 = v.iter().sum();
        let weights: Vec<f64> = v.iter().map(|w| w / total).collect();
        let done = |converged: bool, functionals: Vec<Functional>, weights: Vec<f64>| PietschConstant {
            constant: total.powf(1.0 / q),
            functionals,
            weights,
            rounds,
            converged,
        };
        if rounds >= rounds_cap {
            return Ok(done(false, functionals, weights));
        }
        let mut c = vec![0.0; prob.pairs.len()];
        for (k, &i) in rows.iter().enumerate() {
            c[i] = y[k] / prob.numerators[i];
        }
        let priced: Vec<(f64, Functional, Vec<f64>)> = prob
            .price(&c, &functionals, &columns)?
            .into_iter()
            .map(|f| {
                let col = prob.column(&f);
                let gain: f64 = col.iter().zip(&c).map(|(a, w)| a * w).sum();
                (gain, f, col)
            })
            .collect();
        if priced.iter().all(|(gain, _, _)| *gain <= 1.0 + CONSTANT_GAP) {
            return Ok(done(true, functionals, weights));
        }
        for (gain, f, col) in priced {
            if gain > 1.0 + 1e-9 {
                columns.push(col);
                functionals.push(f);
            }
        }
        rounds += 1;
    }
}

/// Solves `min Σ v_j` subject to `Σ_j v_j A_ij / N_i ≥ 1` on `rows`, returning
/// `v` and the row multipliers `y ≥ 0`. The packing dual has one row per
/// column and is tried first; the covering form is the fallback.
fn constant_lp(prob: &Problem, rows: &[usize], columns: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let coeff = |col: &[f64], i: usize| col[i] / prob.numerators[i];
    let mut packing = LpBuilder::new();
    for _ in rows {
        packing.add_var(-1.0, 0.0, f64::INFINITY);
    }
    for col in columns {
        let coeffs = rows
            .iter()
            .enumerate()
            .filter(|(_, &i)| col[i] > 0.0)
            .map(|(k, &i)| (k, coeff(col, i)))
            .collect();
        packing.add_row(coeffs, Relation::Le, 1.0);
    }
    if let Ok(sol) = packing.solve() {
        if sol.status == LpStatus::Optimal {
            let v = sol.duals.iter().map(|d| (-d).max(0.0)).collect();
            let y = sol.x.iter().map(|v| v.max(0.0)).collect();
            return Ok((v, y));
        }
    }
    let mut covering = LpBuilder::new();
    for _ in columns {
        covering.add_var(1.0, 0.0, f64::INFINITY);
    }
    for &i in rows {
        let coeffs = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c[i] > 0.0)
            .map(|(j, c)| (j, coeff(c, i)))
            .collect();
        covering.add_row(coeffs, Relation::Ge, 1.0);
    }
    let sol = covering.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(lp_failure(sol.status));
    }
    let y = sol.duals.iter().map(|d| d.max(0.0)).collect();
    Ok((sol.x, y))
}

/// Finds weights minimizing the largest relative violation `t` of the
/// domination inequality at constant `C`, refining the dictionary with the
/// most violated functionals while `t > PIETSCH_TOL`. The dictionary must
/// consist of functionals of norm at most one.
#[allow(clippy::too_many_arguments)]
pub fn pietsch_measure(
    p: &HomPoly,
    family: &PairFamily,
    q: f64,
    constant: f64,
    dictionary: Vec<Functional>,
    mode: Mode,
    space: &ConeMetricSpace,
    settings: &Settings,
) -> Result<PietschCertificate> {
    if !(constant.is_finite() && constant >= 0.0) {
        return Err(Error::InvalidInput(format!("constant {constant}")));
    }
    let prob = Problem::new(p, family, q, mode, space, settings)?;
    let mut functionals = dictionary;
    for f in &functionals {
        prob.validate(f, space.degree)?;
    }
    if functionals.is_empty() {
        functionals.push(prob.ball.zero_functional());
    }
    let mut columns: Vec<Vec<f64>> = functionals.iter().map(|f| prob.column(f)).collect();
    let cq = constant.powf(q);
    let make = |functionals: Vec<Functional>,
                weights: Vec<f64>,
                columns: &[Vec<f64>],
                refinements: usize,
                primal: f64,
                dual: f64| {
        let residuals: Vec<f64> = (0..prob.pairs.len())
            .map(|i| {
                let n = prob.numerators[i];
                if n == 0.0 {
                    return 0.0;
                }
                let dominated: f64 = columns.iter().zip(&weights).map(|(col, w)| w * col[i]).sum();
                (n - cq * dominated) / n
            })
            .collect();
        let violation = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
        PietschCertificate {
            mode,
            q,
            constant,
            degree: space.degree,
            points: prob.points.clone(),
            pairs: prob.pairs.clone(),
            functionals,
            weights,
            numerators: prob.numerators.clone(),
            residuals,
            violation,
            refinements,
            primal_objective: primal,
            dual_objective: dual,
        }
    };
    if prob.active.is_empty() {
        let m = functionals.len();
        return Ok(make(functionals, vec![1.0 / m as f64; m], &columns, 0, 0.0, 0.0));
    }
    if cq > 0.0 {
        prob.cover(&mut functionals, &mut columns)?;
    }
    let mut rows = prob.initial_rows(&columns);
    let mut refinements = 0;
    loop {
        let mut lp = LpBuilder::new();
        for _ in &columns {
            lp.add_var(0.0, 0.0, f64::INFINITY);
        }
        let t = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row((0..columns.len()).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
        for &i in &rows {
            let mut coeffs: Vec<(usize, f64)> = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c[i] > 0.0)
                .map(|(j, c)| (j, cq * c[i] / prob.numerators[i]))
                .collect();
            coeffs.push((t, 1.0));
            lp.add_row(coeffs, Relation::Ge, 1.0);
        }
        let sol = lp.solve()?;
        if sol.status != LpStatus::Optimal {
            return Err(lp_failure(sol.status));
        }
        let primal = sol.objective;
        let dual: f64 = sol.duals.iter().sum();
        let weights: Vec<f64> = sol.x[..columns.len()].iter().map(|v| v.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|v| v / total).collect();
        let cert = make(functionals.clone(), weights, &columns, refinements, primal, dual);
        let missing = prob.missing_rows(&rows, |i| cert.residuals[i], primal.max(PIETSCH_TOL) + 1e-9);
        if !missing.is_empty() {
            rows.extend(missing);
            continue;
        }
        if cert.violation <= PIETSCH_TOL {
            return Ok(cert);
        }
        if refinements >= settings.pietsch_refinements || cq == 0.0 {
            return Err(Error::Infeasible {
                violation: cert.violation,
                refinements,
                certificate: Box::new(cert),
            });
        }
        let mut c = vec![0.0; prob.pairs.len()];
        for (row, &i) in rows.iter().enumerate() {
            c[i] = sol.duals[row + 1].max(0.0) * cq / prob.numerators[i];
        }
        let mu = sol.duals[0];
        let mut added = false;
        for f in prob.price(&c, &functionals, &columns)? {
            let col = prob.column(&f);
            let gain: f64 = col.iter().zip(&c).map(|(a, w)| a * w).sum();
            if gain + mu > 1e-12 {
                columns.push(col);
                functionals.push(f);
                added = true;
            }
        }
        refinements += 1;
        if !added {
            return Err(Error::Infeasible {
                violation: cert.violation,
                refinements,
                certificate: Box::new(cert),
            });
        }
    }
}
