//! Dense bounded-variable linear programming.
//!
//! `lp_solve` minimizes `cᵀx` subject to `Ax = b`, `l ≤ x ≤ u`. Variables are
//! shifted and split into non-negative columns, finite upper bounds become
//! explicit rows, and a two-phase tableau simplex runs with Dantzig pricing,
//! falling back to Bland's rule while pivots are degenerate. The final basis
//! is re-solved by LU so that reported primal and dual values do not carry
//! accumulated tableau drift.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per equality row: at an optimum `c − Aᵀy` is
    /// non-negative on variables at their lower bound.
    pub duals: Vec<f64>,
}

impl LpProblem {
    /// A problem with non-negative variables and no constraints yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) {
        self.constraints.push(row);
        self.rhs.push(rhs);
    }

    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (linalg::dot(row, x) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn bound_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_SWITCH: usize = 50;

struct Column {
    offset: f64,
    parts: Vec<(usize, f64)>,
}

pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution> {
    let n = problem.objective.len();
    let m = problem.constraints.len();
    if problem.rhs.len() != m || problem.lower.len() != n || problem.upper.len() != n {
        return Err(Error::ShapeMismatch("lp dimensions disagree".into()));
    }
    if problem.constraints.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("lp constraint row length".into()));
    }
    let finite = problem.objective.iter().all(|v| v.is_finite())
        && problem.rhs.iter().all(|v| v.is_finite())
        && problem.constraints.iter().flatten().all(|v| v.is_finite())
        && problem.lower.iter().all(|v| *v < f64::INFINITY)
        && problem.upper.iter().all(|v| *v > f64::NEG_INFINITY);
    if !finite {
        return Err(Error::InvalidInput("lp coefficients must be finite".into()));
    }
    let infeasible = || LpSolution {
        status: LpStatus::Infeasible,
        x: vec![],
        objective: f64::INFINITY,
        duals: vec![0.0; m],
    };
    if problem.lower.iter().zip(&problem.upper).any(|(l, u)| l > u) {
        return Ok(infeasible());
    }

    // shift/split into non-negative columns
    let mut cols: Vec<Column> = Vec::with_capacity(n);
    let mut cost: Vec<f64> = Vec::new();
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u, c) = (problem.lower[j], problem.upper[j], problem.objective[j]);
        let k = cost.len();
        if l.is_finite() {
            cost.push(c);
            if u.is_finite() {
                upper_rows.push((k, u - l));
            }
            cols.push(Column {
                offset: l,
                parts: vec![(k, 1.0)],
            });
        } else if u.is_finite() {
            cost.push(-c);
            cols.push(Column {
                offset: u,
                parts: vec![(k, -1.0)],
            });
        } else {
            cost.push(c);
            cost.push(-c);
            cols.push(Column {
                offset: 0.0,
                parts: vec![(k, 1.0), (k + 1, -1.0)],
            });
        }
    }
    let n_struct = cost.len();
    let n_slack = upper_rows.len();
    let n_cols = n_struct + n_slack;
    cost.extend(std::iter::repeat_n(0.0, n_slack));

    // standardized rows (original rows first, then bound rows)
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m + n_slack);
    let mut rhs: Vec<f64> = Vec::with_capacity(m + n_slack);
    for i in 0..m {
        let mut row = vec![0.0; n_cols];
        let mut b = problem.rhs[i];
        for (j, col) in cols.iter().enumerate() {
            let a = problem.constraints[i][j];
            if a == 0.0 {
                continue;
            }
            b -= a * col.offset;
            for &(k, s) in &col.parts {
                row[k] += a * s;
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    for (s, &(k, ub)) in upper_rows.iter().enumerate() {
        let mut row = vec![0.0; n_cols];
        row[k] = 1.0;
        row[n_struct + s] = 1.0;
        rows.push(row);
        rhs.push(ub);
    }

    // flip to b ≥ 0 and equilibrate; drop empty rows
    let total_rows = rows.len();
    let mut row_factor = vec![0.0; total_rows];
    let mut active: Vec<usize> = Vec::with_capacity(total_rows);
    let b_scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    for i in 0..total_rows {
        let amax = rows[i].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if amax == 0.0 {
            if rhs[i].abs() > 1e-12 * b_scale {
                return Ok(infeasible());
            }
            continue;
        }
        let flip = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        let f = flip / amax;
        for v in rows[i].iter_mut() {
            *v *= f;
        }
        rhs[i] *= f;
        row_factor[i] = f;
        active.push(i);
    }

    let c_scale = cost.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let c_scale = if c_scale > 0.0 { c_scale } else { 1.0 };
    let scaled_cost: Vec<f64> = cost.iter().map(|c| c / c_scale).collect();

    let mm = active.len();
    let mut tab = Tableau::new(&rows, &rhs, &active, n_cols, n_struct, m);

    // phase 1
    let art_start = n_cols;
    let mut phase1_cost = vec![0.0; tab.width - 1];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b >= art_start {
            phase1_cost[b] = 1.0;
        }
        let _ = r;
    }
    tab.set_costs(&phase1_cost);
    tab.run(art_start, usize::MAX)?;
    let infeas = -tab.objective_rhs();
    let rhs_mass: f64 = (0..mm).map(|r| tab.rhs(r)).sum::<f64>().max(1.0);
    if infeas > 1e-9 * rhs_mass.max(tab.initial_mass) {
        return Ok(infeasible());
    }
    tab.drive_out_artificials(art_start);

    // phase 2
    let mut phase2_cost = vec![0.0; tab.width - 1];
    phase2_cost[..n_cols].copy_from_slice(&scaled_cost);
    tab.set_costs(&phase2_cost);
    if !tab.run(art_start, art_start)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![],
            objective: f64::NEG_INFINITY,
            duals: vec![0.0; m],
        });
    }

    // re-solve the final basis
    let basis = tab.basis.clone();
    let column = |k: usize, r: usize| -> f64 {
        if k < n_cols {
            rows[active[r]][k]
        } else if k - art_start == r {
            1.0
        } else {
            0.0
        }
    };
    let bmat = DMatrix::from_fn(mm, mm, |r, c| column(basis[c], r));
    let b_act: Vec<f64> = active.iter().map(|&i| rhs[i]).collect();
    let mut xs = vec![0.0; n_cols];
    let tab_values: Vec<f64> = (0..mm).map(|r| tab.rhs(r)).collect();
    let resolved = linalg::solve(&bmat, &b_act).filter(|v| v.iter().all(|x| *x > -1e-7 * b_scale.max(1.0)));
    let x_b = resolved.unwrap_or(tab_values);
    for (r, &k) in basis.iter().enumerate() {
        if k < n_cols {
            xs[k] = x_b[r].max(0.0);
        }
    }
    let c_b: Vec<f64> = basis
        .iter()
        .map(|&k| if k < n_cols { scaled_cost[k] } else { 0.0 })
        .collect();
    let y_act = linalg::solve(&bmat.transpose(), &c_b).unwrap_or_else(|| vec![0.0; mm]);
    let mut duals = vec![0.0; m];
    for (r, &i) in active.iter().enumerate() {
        if i < m {
            duals[i] = y_act[r] * row_factor[i] * c_scale;
        }
    }

    let x: Vec<f64> = cols
        .iter()
        .map(|col| col.offset + col.parts.iter().map(|&(k, s)| s * xs[k]).sum::<f64>())
        .collect();
    let residual = problem.equality_residual(&x);
    let scale = 1.0 + problem.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if residual > 1e-8 * scale {
        return Err(Error::NumericalFailure(format!(
            "lp basis re-solve left residual {residual:.3e}"
        )));
    }
    let objective = linalg::dot(&problem.objective, &x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
    })
}

struct Tableau {
    data: Vec<f64>,
    width: usize,
    rows: usize,
    basis: Vec<usize>,
    initial_mass: f64,
    max_iter: usize,
}

impl Tableau {
    fn new(rows: &[Vec<f64>], rhs: &[f64], active: &[usize], n_cols: usize, n_struct: usize, m_orig: usize) -> Self {
        let mm = active.len();
        let width = n_cols + mm + 1;
        let mut data = vec![0.0; (mm + 1) * width];
        let mut basis = Vec::with_capacity(mm);
        for (r, &i) in active.iter().enumerate() {
            let row = &mut data[r * width..(r + 1) * width];
            row[..n_cols].copy_from_slice(&rows[i]);
            row[width - 1] = rhs[i];
            // bound rows start with their slack basic, the rest with an artificial
            if i >= m_orig {
                basis.push(n_struct + (i - m_orig));
            } else {
                row[n_cols + r] = 1.0;
                basis.push(n_cols + r);
            }
        }
        let initial_mass = active.iter().map(|&i| rhs[i]).sum::<f64>().max(1.0);
        Self {
            data,
            width,
            rows: mm,
            basis,
            initial_mass,
            max_iter: 50 * (mm + width) + 1000,
        }
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    fn objective_rhs(&self) -> f64 {
        self.data[self.rows * self.width + self.width - 1]
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width;
        let obj = self.rows * w;
        self.data[obj..obj + w - 1].copy_from_slice(&cost[..w - 1]);
        self.data[obj + w - 1] = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.data[obj + j] -= cb * self.data[r * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.data[pr * w + pc];
        let inv = 1.0 / p;
        for j in 0..w {
            self.data[pr * w + j] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on the current cost row. Columns at index
    /// `>= barred` may not enter. Returns false on unboundedness.
    fn run(&mut self, _art_start: usize, barred: usize) -> Result<bool> {
        let w = self.width;
        let obj = self.rows * w;
        let mut degenerate_run = 0usize;
        for _ in 0..self.max_iter {
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let limit = barred.min(w - 1);
            let mut entering = None;
            let mut best = -COST_TOL;
            for j in 0..limit {
                let d = self.data[obj + j];
                if d < -COST_TOL {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if d < best {
                        best = d;
                        entering = Some(j);
                    }
                }
            }
            let Some(e) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.data[r * w + e];
                if a > PIVOT_TOL {
                    let ratio = self.data[r * w + w - 1].max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= 1e-12 * bratio.max(1.0);
                            if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, e);
        }
        Err(Error::NumericalFailure(
            "simplex iteration limit reached (pivoting stalled)".into(),
        ))
    }

    fn drive_out_artificials(&mut self, art_start: usize) {
        let w = self.width;
        for r in 0..self.rows {
            if self.basis[r] < art_start {
                continue;
            }
            let mut best = None;
            let mut best_abs = PIVOT_TOL;
            for j in 0..art_start {
                let a = self.data[r * w + j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                self.pivot(r, j);
            }
        }
    }
}

/// Row relation used by [`LpBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// Convenience front end that turns inequality rows into slack columns.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<BuilderRow>,
}

/// Sparse coefficients, relation and right-hand side.
type BuilderRow = (Vec<(usize, f64)>, Relation, f64);

#[derive(Debug, Clone)]
pub struct BuiltSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multiplier of each added row, in insertion order.
    pub duals: Vec<f64>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) -> usize {
        self.rows.push((coeffs, rel, rhs));
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn to_problem(&self) -> LpProblem {
        let n = self.cost.len();
        let n_slack = self.rows.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
        let total = n + n_slack;
        let mut objective = self.cost.clone();
        objective.resize(total, 0.0);
        let mut lower = self.lower.clone();
        lower.resize(total, 0.0);
        let mut upper = self.upper.clone();
        upper.resize(total, f64::INFINITY);
        let mut p = LpProblem {
            objective,
            constraints: Vec::with_capacity(self.rows.len()),
            rhs: Vec::with_capacity(self.rows.len()),
            lower,
            upper,
        };
        let mut slack = n;
        for (coeffs, rel, rhs) in &self.rows {
            let mut row = vec![0.0; total];
            for &(j, a) in coeffs {
                row[j] += a;
            }
            match rel {
                Relation::Eq => {}
                Relation::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
            }
            p.add_equality(row, *rhs);
        }
        p
    }

    pub fn solve(&self) -> Result<BuiltSolution> {
        let sol = lp_solve(&self.to_problem())?;
        let n = self.cost.len();
        Ok(BuiltSolution {
            status: sol.status,
            x: if sol.x.is_empty() { vec![] } else { sol.x[..n].to_vec() },
            objective: sol.objective,
            duals: sol.duals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    fn solve(p: &LpProblem) -> LpSolution {
        lp_solve(p).expect("solver failure")
    }

    #[test]
    fn single_point_feasible_set() {
        let mut p = LpProblem::new(vec![1.0]);
        p.add_equality(vec![1.0], 1.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_constraints() {
        let mut p = LpProblem::new(vec![0.0]);
        p.add_equality(vec![1.0], -1.0);
        assert_eq!(solve(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn segment_polytope() {
        // vertices (1,0) and (0,1) both have value 1
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.upper = vec![1.0, 1.0];
        p.add_equality(vec![1.0, 1.0], 1.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(p.equality_residual(&s.x) <= 1e-8);
        assert!(p.bound_violation(&s.x) <= 1e-10);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(vec![-1.0, 0.0]);
        p.add_equality(vec![1.0, -1.0], 0.0);
        assert_eq!(solve(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_upper_only_variables() {
        // min x - y, x free, y ≤ 2, x + y = 1  →  y = 2, x = -1, value -3
        let mut p = LpProblem::new(vec![1.0, -1.0]);
        p.lower = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        p.upper = vec![f64::INFINITY, 2.0];
        p.add_equality(vec![1.0, 1.0], 1.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 3.0).abs() < 1e-10);
        assert!((s.x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn duals_satisfy_strong_duality() {
        // min 2a + 3b + c  s.t. a + b + c = 4, a - b = 1, x ≥ 0
        let mut p = LpProblem::new(vec![2.0, 3.0, 1.0]);
        p.add_equality(vec![1.0, 1.0, 1.0], 4.0);
        p.add_equality(vec![1.0, -1.0, 0.0], 1.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        let dual_obj = linalg::dot(&s.duals, &p.rhs);
        assert!((dual_obj - s.objective).abs() < 1e-9);
        // dual feasibility: c - Aᵀy ≥ 0
        for j in 0..3 {
            let aty: f64 = (0..2).map(|i| p.constraints[i][j] * s.duals[i]).sum();
            assert!(p.objective[j] - aty >= -1e-9);
        }
    }

    #[test]
    fn builder_inequalities() {
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6  → (1.6, 1.2), value 2.8
        let mut b = LpBuilder::new();
        let x = b.add_var(-1.0, 0.0, f64::INFINITY);
        let y = b.add_var(-1.0, 0.0, f64::INFINITY);
        b.add_row(vec![(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        b.add_row(vec![(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let s = b.solve().unwrap();
        assert!((s.objective + 2.8).abs() < 1e-10);
        assert!((s.x[0] - 1.6).abs() < 1e-10 && (s.x[1] - 1.2).abs() < 1e-10);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let mut p = LpProblem::new(vec![1.0, 2.0]);
        p.add_equality(vec![1.0, 1.0], 2.0);
        p.add_equality(vec![2.0, 2.0], 4.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut p = LpProblem::new(vec![f64::NAN]);
        p.add_equality(vec![1.0], 1.0);
        assert!(matches!(lp_solve(&p), Err(Error::InvalidInput(_))));
    }

    fn covering(a: &[Vec<f64>], order: &[usize]) -> BuiltSolution {
        let mut b = LpBuilder::new();
        for _ in 0..a[0].len() {
            b.add_var(1.0, 0.0, f64::INFINITY);
        }
        for &i in order {
            b.add_row(a[i].iter().copied().enumerate().collect(), Relation::Ge, 1.0);
        }
        b.solve().unwrap()
    }

    fn packing(a: &[Vec<f64>]) -> BuiltSolution {
        let mut b = LpBuilder::new();
        for _ in a {
            b.add_var(-1.0, 0.0, f64::INFINITY);
        }
        for j in 0..a[0].len() {
            b.add_row(a.iter().map(|row| row[j]).enumerate().collect(), Relation::Le, 1.0);
        }
        b.solve().unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn row_order_and_duality_do_not_change_the_optimum(
            a in proptest::collection::vec(proptest::collection::vec(0.05f64..2.0, 4), 1..9),
            seed in 0u64..1000,
        ) {
            let mut order: Vec<usize> = (0..a.len()).collect();
            order.sort_by_key(|&i| (i as u64 * 2654435761 + seed) % 1009);
            let base = covering(&a, &(0..a.len()).collect::<Vec<_>>());
            let shuffled = covering(&a, &order);
            let dual = packing(&a);
            prop_assert_eq!(base.status, LpStatus::Optimal);
            prop_assert!((base.objective - shuffled.objective).abs() <= 1e-9 * base.objective.max(1.0));
            prop_assert!((base.objective + dual.objective).abs() <= 1e-9 * base.objective.max(1.0));
            // row multipliers of the packing form are a feasible covering
            let v: Vec<f64> = dual.duals.iter().map(|d| (-d).max(0.0)).collect();
            for row in &a {
                prop_assert!(linalg::dot(row, &v) >= 1.0 - 1e-9);
            }
            prop_assert!((v.iter().sum::<f64>() - base.objective).abs() <= 1e-9 * base.objective.max(1.0));
        }
    }
}
