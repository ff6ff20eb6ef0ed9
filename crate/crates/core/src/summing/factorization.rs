//! Discrete factorization `P = β ∘ m` on a finite subset of the cone, where
//! `m(u) = (w_j^{1/q} f_j(u))_j` maps into `ℓ_q` over the support of a
//! Pietsch measure and `β` is a McShane extension per output coordinate.

use serde::{Deserialize, Serialize};

use super::mcshane::{mcshane_extend, McShaneFunction, Metric};
use super::pietsch::{PietschCertificate, PIETSCH_TOL};
use super::Functional;
use crate::error::{Error, Result};
use crate::numerics::Settings;
use crate::poly::HomPoly;
use crate::tensor::same_cone_point;

/// Weights below this are dropped from the support.
const SUPPORT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFactorization {
    pub q: f64,
    pub constant: f64,
    /// Indices into the certificate functionals with positive weight.
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Points of the factorized set: the endpoints of the certificate
    /// pairs, then the extra points not already on the same cone point.
    pub points: Vec<Vec<f64>>,
    /// `f_j(u)` for each point and support functional.
    pub alpha: Vec<Vec<f64>>,
    /// `w_j^{1/q} f_j(u)`.
    pub middle: Vec<Vec<f64>>,
    /// `P(u)`.
    pub values: Vec<Vec<f64>>,
    /// One extension per output coordinate, `lip_beta`-Lipschitz for `ℓ_q`.
    pub beta: Vec<McShaneFunction>,
    /// Largest `‖P(u) − P(v)‖ / ‖m(u) − m(v)‖_q` over the points.
    pub lip_beta: f64,
    /// Largest `‖P(uᵢ) − P(vᵢ)‖ / ‖m(uᵢ) − m(vᵢ)‖_q` over certificate pairs.
    pub certified_max_ratio: f64,
    /// Largest `|β_c(m(u)) − P_c(u)|` over the points.
    pub residual: f64,
}

fn functional_at(f: &Functional, cert: &PietschCertificate, x: &[f64]) -> Result<f64> {
    match f {
        Functional::Polynomial { coefficients } => Ok(coefficients.eval_power(x)),
        Functional::Table { values } => cert
            .points
            .iter()
            .position(|p| same_cone_point(p, x, cert.degree, 1e-12))
            .map(|i| values[i])
            .ok_or_else(|| Error::InvalidInput("table functional queried off its points".into())),
    }
}

fn lq_distance(a: &[f64], b: &[f64], q: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

impl DiscreteFactorization {
    /// `m(x)`; table functionals restrict `x` to the certificate points.
    pub fn middle_map(&self, cert: &PietschCertificate, x: &[f64]) -> Result<Vec<f64>> {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(&j, w)| Ok(w.powf(1.0 / self.q) * functional_at(&cert.functionals[j], cert, x)?))
            .collect()
    }

    /// `β(m(x))`.
    pub fn apply(&self, cert: &PietschCertificate, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.middle_map(cert, x)?;
        Ok(self.beta.iter().map(|b| b.eval(&m)).collect())
    }
}

/// Factors `p` through `ℓ_q` on the certificate points together with
/// `extra` points, checking the certified domination pair by pair.
pub fn build_factorization(
    p: &HomPoly,
    cert: &PietschCertificate,
    extra: &[Vec<f64>],
    settings: &Settings,
) -> Result<DiscreteFactorization> {
    let q = cert.q;
    if p.degree() != cert.degree || cert.points.first().is_some_and(|x| x.len() != p.dim()) {
        return Err(Error::ShapeMismatch(
            "polynomial and certificate differ in shape".into(),
        ));
    }
    let mut used = vec![false; cert.points.len()];
    for &(a, b) in &cert.pairs {
        used[a] = true;
        used[b] = true;
    }
    let slot: Vec<usize> = used
        .iter()
        .scan(0, |next, &u| {
            let s = *next;
            *next += usize::from(u);
            Some(s)
        })
        .collect();
    let mut points: Vec<Vec<f64>> = cert
        .points
        .iter()
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|(x, _)| x.clone())
        .collect();
    for x in extra {
        if x.len() != p.dim() {
            return Err(Error::ShapeMismatch(format!(
                "point of dimension {} for dimension {}",
                x.len(),
                p.dim()
            )));
        }
        if !points.iter().any(|u| same_cone_point(u, x, cert.degree, 1e-12)) {
            points.push(x.clone());
        }
    }
    let support: Vec<usize> = (0..cert.weights.len())
        .filter(|&j| cert.weights[j] > SUPPORT_CUTOFF)
        .collect();
    let weights: Vec<f64> = support.iter().map(|&j| cert.weights[j]).collect();
    let alpha: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            support
                .iter()
                .map(|&j| functional_at(&cert.functionals[j], cert, x))
                .collect()
        })
        .collect::<Result<_>>()?;
    let middle: Vec<Vec<f64>> = alpha
        .iter()
        .map(|row| row.iter().zip(&weights).map(|(f, w)| w.powf(1.0 / q) * f).collect())
        .collect();
    let values: Vec<Vec<f64>> = points.iter().map(|x| p.eval(x)).collect::<Result<_>>()?;
    let gap = |a: usize, b: usize| -> f64 {
        let d: Vec<f64> = values[a].iter().zip(&values[b]).map(|(u, v)| u - v).collect();
        settings.codomain.norm(&d)
    };

    let bound = cert.constant * (1.0 + PIETSCH_TOL);
    let mut certified_max_ratio = 0.0f64;
    for (i, &(a, b)) in cert.pairs.iter().enumerate() {
        let (a, b) = (slot[a], slot[b]);
        let num = gap(a, b);
        if num == 0.0 {
            continue;
        }
        let den = lq_distance(&middle[a], &middle[b], q);
        let ratio = if den > 0.0 { num / den } else { f64::INFINITY };
        if ratio > bound {
            return Err(Error::LipschitzExceeded { pair: i, ratio, bound });
        }
        certified_max_ratio = certified_max_ratio.max(ratio);
    }

    let mut lip_beta = 0.0f64;
    let mut index = 0;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let num = gap(a, b);
            if num > 0.0 {
                let den = lq_distance(&middle[a], &middle[b], q);
                if den == 0.0 {
                    return Err(Error::LipschitzExceeded {
                        pair: index,
                        ratio: f64::INFINITY,
                        bound,
                    });
                }
                lip_beta = lip_beta.max(num / den);
            }
            index += 1;
        }
    }

    let beta: Vec<McShaneFunction> = (0..p.targets())
        .map(|c| {
            mcshane_extend(
                middle.clone(),
                values.iter().map(|v| v[c]).collect(),
                lip_beta,
                Metric::Lp(q),
            )
        })
        .collect::<Result<_>>()?;
    let residual = middle
        .iter()
        .zip(&values)
        .flat_map(|(m, v)| beta.iter().zip(v).map(move |(b, fc)| (b.eval(m) - fc).abs()))
        .fold(0.0f64, f64::max);

    Ok(DiscreteFactorization {
        q,
        constant: cert.constant,
        support,
        weights,
        points,
        alpha,
        middle,
        values,
        beta,
        lip_beta,
        certified_max_ratio,
        residual,
    })
}
