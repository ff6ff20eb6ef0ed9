use serde::{Deserialize, Serialize};

use super::atoms::{direction_grid, AtomDictionary};
use super::injective::alternating_max;
use crate::error::{Error, Result};
use crate::numerics::{linalg, lp_solve, BaseNorm, Bracket, LpProblem, LpStatus, Method, SeedStream, Settings};
use crate::sphere::{sup_on_sphere, SphereSup};
use crate::tensor::{multisets, veronese, SymTensor, SymmetricDecomposition};

/// Full output of the symmetric projective computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymProjective {
    pub bracket: Bracket,
    pub atoms_used: usize,
    /// Coefficients of a polynomial with certified sup norm ≤ 1 whose
    /// pairing with the input gives `bracket.lower` (up to the norming
    /// powers, which may do slightly better).
    pub dual: SymTensor,
    pub decomposition: SymmetricDecomposition,
    pub converged: bool,
}

/// `d^d / d!`, the polarization constant.
pub fn polarization_constant(d: usize) -> f64 {
    let mut c = 1.0;
    for k in 1..=d {
        c *= d as f64 / k as f64;
    }
    c
}

struct LpRound {
    upper: f64,
    duals: Vec<f64>,
    lambdas: Vec<f64>,
}

/// min Σ|λ_k| subject to Σ λ_k v_k^{⊗d} = u on the multiset coordinates.
fn atom_lp(u_reduced: &[f64], rows: &[Vec<usize>], atoms: &[Vec<f64>], d: usize, n: usize) -> Result<LpRound> {
    let r = rows.len();
    let k = atoms.len();
    let mut prob = LpProblem::new(vec![1.0; 2 * k]);
    let mut mat = vec![vec![0.0; 2 * k]; r];
    for (a, v) in atoms.iter().enumerate() {
        for (row, idx) in rows.iter().enumerate() {
            let val: f64 = idx.iter().map(|&i| v[i]).product();
            mat[row][2 * a] = val;
            mat[row][2 * a + 1] = -val;
        }
    }
    for (row, b) in mat.into_iter().zip(u_reduced) {
        prob.add_equality(row, *b);
    }
    let sol = lp_solve(&prob)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "atom LP ended with status {:?}",
            sol.status
        )));
    }
    let lambdas: Vec<f64> = (0..k).map(|a| sol.x[2 * a] - sol.x[2 * a + 1]).collect();
    let _ = (d, n);
    Ok(LpRound {
        upper: lambdas.iter().map(|l| l.abs()).sum(),
        duals: sol.duals,
        lambdas,
    })
}

/// `s,π` of the residual `u − Σ λ_k v_k^{⊗d}` is at most `d^d/d!` times
/// its coefficient ℓ1 norm, since every `e_i` has unit norm.
fn residual_bound(u: &SymTensor, atoms: &[Vec<f64>], lambdas: &[f64]) -> Result<f64> {
    let d = u.order();
    let mut r = u.clone();
    for (v, l) in atoms.iter().zip(lambdas) {
        if *l != 0.0 {
            r.axpy(-l, &veronese(v, d)?)?;
        }
    }
    Ok(polarization_constant(d) * r.as_dense().l1())
}

fn dual_tensor(duals: &[f64], rows_mult: &[usize], d: usize, n: usize) -> Result<SymTensor> {
    let coeffs: Vec<f64> = duals.iter().zip(rows_mult).map(|(y, m)| y / *m as f64).collect();
    SymTensor::from_reduced(d, n, &coeffs)
}

/// Lower bound `|⟨u, φ^{⊗d}⟩|` for unit dual functionals φ.
fn norming_power_bound(u: &SymTensor, base: BaseNorm, candidates: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let d = u.order();
    let mut best = (0.0f64, vec![]);
    for v in candidates {
        let phi = base.norming_functional(v);
        let dn = base.dual_norm(&phi);
        if dn == 0.0 {
            continue;
        }
        let val = u.eval_power(&phi).abs() / dn.powi(d as i32);
        if val > best.0 {
            best = (val, phi);
        }
    }
    best
}

/// Closed forms: zero, d = 1, n = 1 and the ℓ2 quadratic case.
fn closed_form(u: &SymTensor, base: BaseNorm) -> Result<Option<SymProjective>> {
    let (n, d) = (u.dim(), u.order());
    let dense = u.as_dense();
    let done = |value: f64, method: Method, dual: SymTensor, dec: SymmetricDecomposition| {
        Some(SymProjective {
            bracket: Bracket::exact(value, method),
            atoms_used: dec.terms.len(),
            dual,
            decomposition: dec,
            converged: true,
        })
    };
    if dense.is_zero() {
        return Ok(done(0.0, Method::Trivial, SymTensor::zeros(d, n)?, Default::default()));
    }
    if d == 1 {
        let x = dense.entries();
        let phi = base.norming_functional(x);
        let mut dec = SymmetricDecomposition::default();
        dec.push_scaled(1.0, x, 1);
        let dual = SymTensor::from_dense_unchecked(crate::tensor::DenseTensor::new(1, n, phi)?);
        return Ok(done(base.norm(x), Method::BaseNorm, dual, dec));
    }
    if n == 1 {
        let v = dense.entries()[0];
        let mut dec = SymmetricDecomposition::default();
        dec.push_scaled(v, &[1.0], d);
        let dual = SymTensor::from_dense_unchecked(crate::tensor::DenseTensor::new(d, 1, vec![v.signum()])?);
        return Ok(done(v.abs(), Method::Trivial, dual, dec));
    }
    if base == BaseNorm::L2 && d == 2 {
        let (vals, vecs) = linalg::symmetric_eigen(&dense.matricize(1))?;
        let mut dec = SymmetricDecomposition::default();
        let mut dual = SymTensor::zeros(2, n)?;
        for (k, lam) in vals.iter().enumerate() {
            let v: Vec<f64> = vecs.column(k).iter().copied().collect();
            dec.push_scaled(*lam, &v, 2);
            if *lam != 0.0 {
                dual.axpy(lam.signum(), &veronese(&v, 2)?)?;
            }
        }
        let total: f64 = vals.iter().map(|v| v.abs()).sum();
        return Ok(done(total, Method::SymmetricEigen, dual, dec));
    }
    Ok(None)
}

fn gap_met(b: &Bracket, target: f64) -> bool {
    b.upper <= 0.0 || b.gap() <= target * b.upper
}

/// Symmetric projective norm `inf Σ|λ_k|‖v_k‖ᵈ` over signed Veronese atoms,
/// bracketed by an atom LP from above and by polynomials of certified sup
/// norm at most one from below. The dictionary grows by the maximizers of
/// the current dual polynomial until the relative gap meets
/// `settings.bracket_gap` or the atom cap is reached.
pub fn sym_projective_detailed(u: &SymTensor, base: BaseNorm, settings: &Settings) -> Result<SymProjective> {
    let (compressed, keep) = super::compress(u.as_dense(), settings);
    let full_n = u.dim();
    let inner = SymTensor::from_dense_unchecked(compressed);
    let mut result = sym_projective_core(&inner, base, settings)?;
    if keep.len() != full_n {
        result.dual = SymTensor::from_dense_unchecked(result.dual.as_dense().embed(full_n, &keep));
        for t in result.decomposition.terms.iter_mut() {
            let mut v = vec![0.0; full_n];
            for (i, &k) in keep.iter().enumerate() {
                v[k] = t.vector[i];
            }
            t.vector = v;
        }
    }
    result.bracket = result.bracket.outward();
    Ok(result)
}

fn sym_projective_core(u: &SymTensor, base: BaseNorm, settings: &Settings) -> Result<SymProjective> {
    if let Some(done) = closed_form(u, base)? {
        return Ok(done);
    }
    let (n, d) = (u.dim(), u.order());
    let ms = multisets(n, d);
    let rows: Vec<Vec<usize>> = ms.iter().map(|m| m.index.clone()).collect();
    let mult: Vec<usize> = ms.iter().map(|m| m.multiplicity).collect();
    let u_red = u.reduced();
    let seeds = SeedStream::new(settings.seed).child(0x5a70);
    let mut dict = AtomDictionary::initial(n, base, settings.atoms_initial, &seeds);
    let seed_max = alternating_max(
        u.as_dense(),
        base.dual(),
        &Settings {
            restarts: 4,
            ..settings.clone()
        },
    );
    for f in &seed_max.functionals {
        dict.push(f);
    }
    let sup_settings = Settings {
        sup_rel_tol: (settings.bracket_gap * 0.1).max(settings.sup_rel_tol),
        ..settings.clone()
    };

    let mut grid_size = settings.atoms_initial;
    let mut best_upper = f64::INFINITY;
    let mut best_lower = 0.0f64;
    let mut method_lower = Method::NormingPower;
    let mut best_dual = SymTensor::zeros(d, n)?;
    let mut best_dec = SymmetricDecomposition::default();
    let mut stall = 0;
    loop {
        let round = atom_lp(&u_red, &rows, &dict.atoms, d, n)?;
        let upper = round.upper + residual_bound(u, &dict.atoms, &round.lambdas)?;
        let previous_upper = best_upper;
        if upper < best_upper {
            best_upper = upper;
            let mut dec = SymmetricDecomposition::default();
            for (v, l) in dict.atoms.iter().zip(&round.lambdas) {
                dec.push_scaled(*l, v, d);
            }
            best_dec = dec;
        }
        let a = dual_tensor(&round.duals, &mult, d, n)?;
        let sup: SphereSup = sup_on_sphere(std::slice::from_ref(&a), base, BaseNorm::L2, &sup_settings)?;
        if sup.bracket.upper > 0.0 {
            let pairing = a.as_dense().inner(u.as_dense())?.abs();
            let low = pairing / sup.bracket.upper;
            if low > best_lower {
                best_lower = low;
                method_lower = Method::PolynomialDual;
                let sign = if a.as_dense().inner(u.as_dense())? < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                best_dual = a.scale(sign / sup.bracket.upper);
            }
        }
        let mut cands = dict.atoms.clone();
        cands.push(sup.argmax.clone());
        let (np, phi) = norming_power_bound(u, base, &cands);
        if np > best_lower {
            best_lower = np;
            method_lower = Method::NormingPower;
            let scale = 1.0 / base.dual_norm(&phi).powi(d as i32);
            let sign = u.eval_power(&phi).signum();
            best_dual = veronese(&phi, d)?.scale(sign * scale);
        }
        best_lower = best_lower.min(best_upper);
        let bracket = Bracket::new(best_lower, best_upper, method_lower, Method::AtomLp);
        if gap_met(&bracket, settings.bracket_gap) {
            return Ok(SymProjective {
                bracket,
                atoms_used: dict.len(),
                dual: best_dual,
                decomposition: best_dec,
                converged: true,
            });
        }
        if dict.len() >= settings.atoms_cap {
            return Ok(SymProjective {
                bracket,
                atoms_used: dict.len(),
                dual: best_dual,
                decomposition: best_dec,
                converged: false,
            });
        }
        // column generation: the dual polynomial's maximizers are the most
        // violated atoms; a finer grid is added when they stop helping
        let before = dict.len();
        dict.push(&sup.argmax);
        let forms = crate::sphere::Forms::new(std::slice::from_ref(&a), base, BaseNorm::L2)?;
        let mut scored: Vec<(f64, usize)> = dict.atoms[..before]
            .iter()
            .enumerate()
            .map(|(i, v)| (a.eval_power(v).abs(), i))
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        for &(_, i) in scored.iter().take(24) {
            let (_, y) = forms.polish(&dict.atoms[i].clone());
            dict.push(&y);
        }
        if upper >= previous_upper * (1.0 - 0.1 * settings.bracket_gap) {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= 2 {
            grid_size *= 2;
            for v in direction_grid(n, grid_size, &seeds) {
                dict.push(&v);
            }
            stall = 0;
        }
        if dict.len() > settings.atoms_cap {
            dict.atoms.truncate(settings.atoms_cap);
        }
    }
}

/// Bracket-only form of [`sym_projective_detailed`]; a gap above the
/// target after the atom cap is reported as [`Error::BudgetExhausted`].
pub fn sym_projective_norm(u: &SymTensor, base: BaseNorm, settings: &Settings) -> Result<Bracket> {
    let r = sym_projective_detailed(u, base, settings)?;
    if r.converged {
        Ok(r.bracket)
    } else {
        Err(Error::BudgetExhausted { best: r.bracket })
    }
}

/// A certified upper bound from the initial dictionary only.
pub fn sym_projective_upper(u: &SymTensor, base: BaseNorm, settings: &Settings) -> Result<f64> {
    let (compressed, _) = super::compress(u.as_dense(), settings);
    let u = SymTensor::from_dense_unchecked(compressed);
    if let Some(done) = closed_form(&u, base)? {
        return Ok(done.bracket.upper);
    }
    let (n, d) = (u.dim(), u.order());
    let ms = multisets(n, d);
    let rows: Vec<Vec<usize>> = ms.iter().map(|m| m.index.clone()).collect();
    let seeds = SeedStream::new(settings.seed).child(0x5a70);
    let dict = AtomDictionary::initial(n, base, settings.atoms_initial, &seeds);
    let round = atom_lp(&u.reduced(), &rows, &dict.atoms, d, n)?;
    Ok(round.upper + residual_bound(&u, &dict.atoms, &round.lambdas)?)
}
