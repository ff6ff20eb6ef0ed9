//! Certified supremum of `‖F(y)‖_Y / ‖y‖ᵈ` for a vector of homogeneous
//! forms `F_j(y) = ⟨A_j, y^{⊗d}⟩`.
//!
//! Directions are parametrized by the facets `y_i = 1` of the cube (every
//! line through the origin meets one of them, and `‖F(−y)‖ = ‖F(y)‖`).
//! Boxes on a facet are bounded by a second-order Taylor enclosure of each
//! form around the box center, divided by the exact minimum of `‖y‖ᵈ` over
//! the box. Best-first bisection closes the gap between that bound and the
//! values found at box centers and by local ascent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{linalg, BaseNorm, Bracket, Method, SeedStream, Settings};
use crate::tensor::{contract_last_flat, SymTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSup {
    pub bracket: Bracket,
    /// A maximizer scaled to unit base norm.
    pub argmax: Vec<f64>,
    pub boxes: usize,
    pub converged: bool,
}

pub(crate) struct Forms {
    n: usize,
    d: usize,
    coeffs: Vec<Vec<f64>>,
    abs_coeffs: Vec<Vec<f64>>,
    base: BaseNorm,
    codomain: BaseNorm,
}

impl Forms {
    pub(crate) fn new(forms: &[SymTensor], base: BaseNorm, codomain: BaseNorm) -> Result<Self> {
        let first = forms
            .first()
            .ok_or_else(|| Error::InvalidInput("no forms given".into()))?;
        let (n, d) = (first.dim(), first.order());
        if forms.iter().any(|f| f.dim() != n || f.order() != d) {
            return Err(Error::ShapeMismatch("forms of unequal shape".into()));
        }
        let coeffs: Vec<Vec<f64>> = forms.iter().map(|f| f.as_dense().entries().to_vec()).collect();
        let abs_coeffs = coeffs.iter().map(|c| c.iter().map(|v| v.abs()).collect()).collect();
        Ok(Self {
            n,
            d,
            coeffs,
            abs_coeffs,
            base,
            codomain,
        })
    }

    fn power(flat: &[f64], y: &[f64], times: usize) -> Vec<f64> {
        let mut out = flat.to_vec();
        for _ in 0..times {
            out = contract_last_flat(&out, y);
        }
        out
    }

    pub(crate) fn values(&self, y: &[f64]) -> Vec<f64> {
        self.coeffs.iter().map(|c| Self::power(c, y, self.d)[0]).collect()
    }

    pub(crate) fn ratio(&self, y: &[f64]) -> f64 {
        let r = self.base.norm(y);
        if r == 0.0 {
            return 0.0;
        }
        self.codomain.norm(&self.values(y)) / r.powi(self.d as i32)
    }

    /// Upper bound of the ratio over the box `center ± radius`, the ratio
    /// at the center, and the coordinate to split next.
    ///
    /// Two enclosures are combined. Both expand each form to second order
    /// around the center. The first divides by the exact minimum of `‖y‖ᵈ`
    /// on the box. The second uses `‖c + h‖ ≥ ‖c‖ + φ(h)` for the norming
    /// functional φ of `c`, which couples numerator and denominator so that
    /// the linear term is the gradient of the ratio itself.
    fn box_bound(&self, center: &[f64], radius: &[f64]) -> (f64, f64, usize) {
        let n = self.n;
        let d = self.d;
        let widened: Vec<f64> = center.iter().zip(radius).map(|(c, r)| c.abs() + r).collect();
        let c_norm = self.base.norm(center);
        let phi = self.base.norming_functional(center);
        let kappa: Vec<f64> = phi.iter().map(|p| d as f64 * p / c_norm).collect();
        let shrink: f64 = kappa.iter().zip(radius).map(|(k, r)| k.abs() * r).sum();

        let m_forms = self.coeffs.len();
        let mut value = Vec::with_capacity(m_forms);
        let mut grads = Vec::with_capacity(m_forms);
        let mut quad = Vec::with_capacity(m_forms);
        for (a, abs_a) in self.coeffs.iter().zip(&self.abs_coeffs) {
            let grad_part = Self::power(a, center, d - 1);
            value.push(linalg::dot(&grad_part, center));
            grads.push(grad_part.iter().map(|g| d as f64 * g).collect::<Vec<f64>>());
            let mut q = 0.0;
            if d >= 2 {
                let h = Self::power(abs_a, &widened, d - 2);
                let scale = 0.5 * (d * (d - 1)) as f64;
                for i in 0..n {
                    if radius[i] == 0.0 {
                        continue;
                    }
                    let row = &h[i * n..(i + 1) * n];
                    let t: f64 = row.iter().zip(radius).map(|(hv, r)| hv * r).sum();
                    q += scale * t * radius[i];
                }
            }
            quad.push(q);
        }
        let f_norm = self.codomain.norm(&value);
        let center_ratio = if c_norm > 0.0 {
            f_norm / c_norm.powi(d as i32)
        } else {
            0.0
        };
        let q_norm = self.codomain.norm(&quad);

        // decoupled enclosure
        let mut contrib = vec![0.0; n];
        let lin: Vec<f64> = grads
            .iter()
            .map(|g| g.iter().zip(radius).map(|(gi, r)| gi.abs() * r).sum::<f64>())
            .collect();
        let mut min_abs = vec![0.0; n];
        for i in 0..n {
            let (lo, hi) = (center[i] - radius[i], center[i] + radius[i]);
            min_abs[i] = if lo <= 0.0 && hi >= 0.0 {
                0.0
            } else {
                lo.abs().min(hi.abs())
            };
        }
        let m = self.base.norm(&min_abs).powi(d as i32);
        let mut ub = if m > 0.0 {
            (f_norm + self.codomain.norm(&lin) + q_norm) / m
        } else {
            f64::INFINITY
        };

        // coupled enclosure
        if shrink < 1.0 && c_norm > 0.0 {
            let eff: Vec<f64> = grads
                .iter()
                .zip(&value)
                .map(|(g, f)| {
                    (0..n)
                        .map(|i| {
                            let e = (g[i] - f * kappa[i]).abs() * radius[i];
                            contrib[i] += e;
                            e
                        })
                        .sum::<f64>()
                })
                .collect();
            let coupled = (f_norm + (self.codomain.norm(&eff) + q_norm) / (1.0 - shrink)) / c_norm.powi(d as i32);
            ub = ub.min(coupled);
        } else {
            for g in &grads {
                for i in 0..n {
                    contrib[i] += g[i].abs() * radius[i];
                }
            }
        }
        let split = (0..n)
            .filter(|&i| radius[i] > 0.0)
            .max_by(|&a, &b| {
                (radius[a] * (1e-3 + contrib[a]))
                    .partial_cmp(&(radius[b] * (1e-3 + contrib[b])))
                    .unwrap_or(Ordering::Equal)
            })
            .unwrap_or(0);
        (ub.max(center_ratio), center_ratio, split)
    }

    /// Shrinking-step coordinate search on the ratio.
    pub(crate) fn polish(&self, start: &[f64]) -> (f64, Vec<f64>) {
        let mut y = start.to_vec();
        let mut best = self.ratio(&y);
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        y.iter_mut().for_each(|v| *v /= scale);
        let mut step = 0.25;
        let mut evals = 0;
        while step > 1e-10 && evals < 4000 {
            let mut improved = false;
            for i in 0..self.n {
                for dir in [1.0, -1.0] {
                    let old = y[i];
                    y[i] = old + dir * step;
                    let r = self.ratio(&y);
                    evals += 1;
                    if r > best {
                        best = r;
                        improved = true;
                        break;
                    }
                    y[i] = old;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (best, y)
    }
}

struct Cell {
    ub: f64,
    center: Vec<f64>,
    radius: Vec<f64>,
    split: usize,
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

/// Certified bracket for `sup_{‖y‖_base ≤ 1} ‖(⟨A_j, y^{⊗d}⟩)_j‖_codomain`.
pub fn sup_on_sphere(
    forms: &[SymTensor],
    base: BaseNorm,
    codomain: BaseNorm,
    settings: &Settings,
) -> Result<SphereSup> {
    let f = Forms::new(forms, base, codomain)?;
    let (n, d) = (f.n, f.d);
    let unit = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    if f.coeffs.iter().all(|c| c.iter().all(|v| *v == 0.0)) {
        return Ok(SphereSup {
            bracket: Bracket::zero(),
            argmax: unit(0),
            boxes: 0,
            converged: true,
        });
    }
    if n == 1 {
        let v = f.ratio(&[1.0]);
        return Ok(SphereSup {
            bracket: Bracket::exact(v, Method::Trivial),
            argmax: vec![1.0],
            boxes: 0,
            converged: true,
        });
    }
    if d == 1 {
        if let Some(exact) = linear_sup(&f, settings)? {
            return Ok(exact);
        }
    }

    // multi-start ascent seeds the incumbent
    let seeds = SeedStream::new(settings.seed).child(0x5f3e);
    let starts: Vec<Vec<f64>> = {
        let mut rng = seeds.fork(0);
        let mut s: Vec<Vec<f64>> = (0..n).map(unit).collect();
        for _ in 0..settings.restarts {
            s.push((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
        }
        s
    };
    let polished: Vec<(f64, Vec<f64>)> = starts.par_iter().map(|s| f.polish(s)).collect();
    let (mut best, mut arg) =
        polished.into_iter().fold(
            (f64::NEG_INFINITY, unit(0)),
            |acc, (v, y)| {
                if v > acc.0 {
                    (v, y)
                } else {
                    acc
                }
            },
        );

    let tol = settings.sup_rel_tol;
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        let mut radius = vec![1.0; n];
        radius[i] = 0.0;
        let center = unit(i);
        let (ub, c_ratio, split) = f.box_bound(&center, &radius);
        if c_ratio > best {
            best = c_ratio;
            arg = center.clone();
        }
        heap.push(Cell {
            ub,
            center,
            radius,
            split,
        });
    }
    let mut pruned_ub = 0.0f64;
    let mut boxes = n;
    let mut converged = false;
    while let Some(top) = heap.peek() {
        if top.ub <= best * (1.0 + tol) + 1e-300 {
            converged = true;
            break;
        }
        if boxes >= settings.sup_max_boxes {
            break;
        }
        let cell = heap.pop().expect("peeked");
        let k = cell.split;
        for dir in [-1.0, 1.0] {
            let mut center = cell.center.clone();
            let mut radius = cell.radius.clone();
            radius[k] *= 0.5;
            center[k] += dir * radius[k];
            let (ub, c_ratio, split) = f.box_bound(&center, &radius);
            boxes += 1;
            if c_ratio > best {
                best = c_ratio;
                arg = center.clone();
            }
            if ub <= best * (1.0 + tol) {
                pruned_ub = pruned_ub.max(ub);
            } else {
                heap.push(Cell {
                    ub,
                    center,
                    radius,
                    split,
                });
            }
        }
    }
    converged |= heap.is_empty();
    let (polished_best, polished_arg) = f.polish(&arg);
    if polished_best > best {
        best = polished_best;
        arg = polished_arg;
    }
    let open_ub = heap.peek().map(|c| c.ub).unwrap_or(0.0);
    let upper = open_ub.max(pruned_ub).max(best) * (1.0 + 1e-13);
    let argmax = base.normalize(&arg).unwrap_or_else(|| unit(0));
    Ok(SphereSup {
        bracket: Bracket::new(best, upper, Method::GradientAscent, Method::BranchAndBound),
        argmax,
        boxes,
        converged,
    })
}

/// Exact norms of a linear map where the extreme points decide.
fn linear_sup(f: &Forms, settings: &Settings) -> Result<Option<SphereSup>> {
    let n = f.n;
    let candidates: Vec<Vec<f64>> = match f.base {
        BaseNorm::L1 => crate::numerics::ball_vertices(n, BaseNorm::L1)?,
        BaseNorm::Linf if (1u128 << n) <= settings.vertex_budget && n <= 14 => {
            crate::numerics::ball_vertices(n, BaseNorm::Linf)?
        }
        BaseNorm::L2 if f.codomain == BaseNorm::L2 => {
            let m = nalgebra::DMatrix::from_fn(f.coeffs.len(), n, |j, i| f.coeffs[j][i]);
            let s = linalg::svd(&m)?;
            let v: Vec<f64> = s.v_t.row(0).iter().copied().collect();
            return Ok(Some(SphereSup {
                bracket: Bracket::exact(s.singular_values[0], Method::Svd),
                argmax: v,
                boxes: 0,
                converged: true,
            }));
        }
        _ => return Ok(None),
    };
    let (best, arg) = candidates
        .into_iter()
        .map(|v| (f.ratio(&v), v))
        .fold((f64::NEG_INFINITY, vec![]), |acc, c| if c.0 > acc.0 { c } else { acc });
    Ok(Some(SphereSup {
        bracket: Bracket::exact(best, Method::VertexEnumeration),
        argmax: arg,
        boxes: 0,
        converged: true,
    }))
}
