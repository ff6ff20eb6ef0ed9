//! The Veronese cone as a metric space under a chosen cross-norm, with
//! bi-Lipschitz and subspace distortion experiments.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{accept_best, tensor_distance_upper, tensor_norm, NormKind, NormSelector};
use crate::numerics::{BaseNorm, Bracket, SeedStream, Settings};
use crate::tensor::{veronese, ConePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeMetricSpace {
    pub dim: usize,
    pub degree: usize,
    pub base: BaseNorm,
    pub kind: NormKind,
}

impl ConeMetricSpace {
    pub fn new(dim: usize, degree: usize, base: BaseNorm, kind: NormKind) -> Result<Self> {
        if dim == 0 || degree == 0 {
            return Err(Error::InvalidInput("cone space needs dimension and degree ≥ 1".into()));
        }
        Ok(Self {
            dim,
            degree,
            base,
            kind,
        })
    }

    pub fn selector(&self) -> NormSelector {
        NormSelector::new(self.kind, self.base)
    }

    pub fn origin(&self) -> ConePoint {
        ConePoint::origin(self.dim, self.degree)
    }

    pub fn with_kind(&self, kind: NormKind) -> Self {
        Self { kind, ..*self }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "point of dimension {} in a space of dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// `‖x^{⊗d} − y^{⊗d}‖_α` as a bracket.
pub fn cone_distance_bases(x: &[f64], y: &[f64], space: &ConeMetricSpace, settings: &Settings) -> Result<Bracket> {
    space.check(x)?;
    space.check(y)?;
    let diff = veronese(x, space.degree)?.sub(&veronese(y, space.degree)?)?;
    accept_best(tensor_norm(diff.as_dense(), space.selector(), settings))
}

pub fn cone_distance(u: &ConePoint, v: &ConePoint, space: &ConeMetricSpace, settings: &Settings) -> Result<Bracket> {
    if u.degree != space.degree || v.degree != space.degree {
        return Err(Error::ShapeMismatch("cone point degree differs from the space".into()));
    }
    cone_distance_bases(&u.base, &v.base, space, settings)
}

/// A certified upper bound on the distance, computed cheaply.
pub fn cone_distance_upper(x: &[f64], y: &[f64], space: &ConeMetricSpace, settings: &Settings) -> Result<f64> {
    space.check(x)?;
    space.check(y)?;
    let diff = veronese(x, space.degree)?.sub(&veronese(y, space.degree)?)?;
    tensor_distance_upper(&diff, space.selector(), settings)
}

/// One sampled pair with its conservative ratio bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `α.lower / β.upper`.
    pub ratio_low: f64,
    /// `α.upper / β.lower`.
    pub ratio_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub samples: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub bound: f64,
    pub pass: bool,
    pub seed: u64,
    pub violations: usize,
    pub worst_high: Option<RatioSample>,
    pub worst_low: Option<RatioSample>,
}

/// How a pair was drawn: generic, nearly antipodal or nearly collinear.
fn sample_pair(n: usize, index: usize, seeds: &SeedStream) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seeds.fork(index as u64);
    let mut gauss = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect() };
    let x = gauss(n);
    let noise = gauss(n);
    let scale: f64 = 0.2 * (index % 7 + 1) as f64 / 7.0;
    let y = match index % 10 {
        0 | 1 => x.iter().zip(&noise).map(|(a, e)| -a + 0.05 * scale * e).collect(),
        2 | 3 => {
            let t = 1.0 + scale;
            x.iter().zip(&noise).map(|(a, e)| t * a + 0.01 * scale * e).collect()
        }
        _ => noise,
    };
    (x, y)
}

const RATIO_SLACK: f64 = 1e-3;

fn summarize(rows: Vec<RatioSample>, bound: f64, seed: u64, exact_one: bool) -> DistortionReport {
    let (lo_ok, hi_ok) = if exact_one {
        (1.0 - 1e-8, 1.0 + 1e-8)
    } else {
        ((1.0 / bound) * (1.0 - RATIO_SLACK), bound * (1.0 + RATIO_SLACK))
    };
    let violations = rows
        .iter()
        .filter(|r| r.ratio_high > hi_ok || r.ratio_low < lo_ok)
        .count();
    let worst_high = rows
        .iter()
        .max_by(|a, b| a.ratio_high.total_cmp(&b.ratio_high))
        .cloned();
    let worst_low = rows.iter().min_by(|a, b| a.ratio_low.total_cmp(&b.ratio_low)).cloned();
    DistortionReport {
        samples: rows.len(),
        max_ratio: worst_high.as_ref().map_or(1.0, |r| r.ratio_high),
        min_ratio: worst_low.as_ref().map_or(1.0, |r| r.ratio_low),
        bound,
        pass: violations == 0,
        seed,
        violations,
        worst_high,
        worst_low,
    }
}

fn ratio_of(a: &Bracket, b: &Bracket) -> Option<(f64, f64)> {
    if b.upper < 1e-12 {
        return None;
    }
    let low = a.lower / b.upper;
    let high = if b.lower > 0.0 {
        a.upper / b.lower
    } else {
        f64::INFINITY
    };
    Some((low, high))
}

/// Distance ratios `d_α / d_β` over sampled cone pairs, checked against
/// `[2^{−(d−1)}, 2^{d−1}]` at every pair.
#[allow(clippy::too_many_arguments)]
pub fn bilipschitz_experiment(
    n: usize,
    d: usize,
    base: BaseNorm,
    alpha: NormKind,
    beta: NormKind,
    samples: usize,
    seed: u64,
    settings: &Settings,
) -> Result<DistortionReport> {
    let space_a = ConeMetricSpace::new(n, d, base, alpha)?;
    let space_b = space_a.with_kind(beta);
    let seeds = SeedStream::new(seed).child(0xb11);
    let rows: Vec<Option<RatioSample>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (x, y) = sample_pair(n, i, &seeds);
            let a = cone_distance_bases(&x, &y, &space_a, settings)?;
            let b = if alpha == beta {
                a
            } else {
                cone_distance_bases(&x, &y, &space_b, settings)?
            };
            Ok(ratio_of(&a, &b).map(|(ratio_low, ratio_high)| RatioSample {
                x,
                y,
                ratio_low,
                ratio_high,
            }))
        })
        .collect::<Result<_>>()?;
    let bound = 2f64.powi(d as i32 - 1);
    Ok(summarize(rows.into_iter().flatten().collect(), bound, seed, false))
}

/// All three norms on the same sampled pairs, reported for every ordered
/// pair of distinct selectors.
pub fn bilipschitz_all(
    n: usize,
    d: usize,
    base: BaseNorm,
    samples: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Vec<(NormKind, NormKind, DistortionReport)>> {
    let space = ConeMetricSpace::new(n, d, base, NormKind::Injective)?;
    let seeds = SeedStream::new(seed).child(0xb11);
    let brackets: Vec<(Vec<f64>, Vec<f64>, [Bracket; 3])> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (x, y) = sample_pair(n, i, &seeds);
            let mut out = [Bracket::zero(); 3];
            for (k, kind) in NormKind::ALL.iter().enumerate() {
                out[k] = cone_distance_bases(&x, &y, &space.with_kind(*kind), settings)?;
            }
            Ok((x, y, out))
        })
        .collect::<Result<_>>()?;
    let bound = 2f64.powi(d as i32 - 1);
    let mut reports = Vec::new();
    for (ia, a) in NormKind::ALL.iter().enumerate() {
        for (ib, b) in NormKind::ALL.iter().enumerate() {
            if ia == ib {
                continue;
            }
            let rows = brackets
                .iter()
                .filter_map(|(x, y, br)| {
                    ratio_of(&br[ia], &br[ib]).map(|(ratio_low, ratio_high)| RatioSample {
                        x: x.clone(),
                        y: y.clone(),
                        ratio_low,
                        ratio_high,
                    })
                })
                .collect();
            reports.push((*a, *b, summarize(rows, bound, seed, false)));
        }
    }
    Ok(reports)
}

/// Coordinates of a basis made of nonzero multiples of distinct unit
/// vectors.
fn coordinate_support(n: usize, basis: &[Vec<f64>]) -> Result<Vec<usize>> {
    let mut coords = Vec::with_capacity(basis.len());
    for (index, b) in basis.iter().enumerate() {
        let nz: Vec<usize> = (0..b.len()).filter(|&i| b[i] != 0.0).collect();
        if b.len() != n || nz.len() != 1 || coords.contains(&nz[0]) {
            return Err(Error::NonCoordinateSubspace { index });
        }
        coords.push(nz[0]);
    }
    if coords.is_empty() {
        return Err(Error::NonCoordinateSubspace { index: 0 });
    }
    Ok(coords)
}

/// Compares distances computed inside the cone over `Z = span(basis)`
/// with those computed in the ambient cone. Points are drawn in ℝⁿ and
/// projected onto `Z` by zeroing the other coordinates. The ambient side
/// is computed without support compression so it does not reduce to the
/// subspace computation.
#[allow(clippy::too_many_arguments)]
pub fn subspace_distortion(
    n: usize,
    d: usize,
    base: BaseNorm,
    basis: &[Vec<f64>],
    kind: NormKind,
    samples: usize,
    seed: u64,
    settings: &Settings,
) -> Result<DistortionReport> {
    let coords = coordinate_support(n, basis)?;
    let k = coords.len();
    let inner_space = ConeMetricSpace::new(k, d, base, kind)?;
    let outer_space = ConeMetricSpace::new(n, d, base, kind)?;
    let outer_settings = Settings {
        compress_support: false,
        ..settings.clone()
    };
    let seeds = SeedStream::new(seed).child(0x5b5);
    let rows: Vec<Option<RatioSample>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (x, y) = sample_pair(n, i, &seeds);
            let restrict = |v: &[f64]| coords.iter().map(|&c| v[c]).collect::<Vec<f64>>();
            let project = |v: &[f64]| {
                let mut out = vec![0.0; n];
                for &c in &coords {
                    out[c] = v[c];
                }
                out
            };
            let (xz, yz) = (restrict(&x), restrict(&y));
            let (xp, yp) = (project(&x), project(&y));
            let inner = cone_distance_bases(&xz, &yz, &inner_space, settings)?;
            let outer = cone_distance_bases(&xp, &yp, &outer_space, &outer_settings)?;
            Ok(ratio_of(&outer, &inner).map(|(ratio_low, ratio_high)| RatioSample {
                x: xp,
                y: yp,
                ratio_low,
                ratio_high,
            }))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<RatioSample> = rows.into_iter().flatten().collect();
    if kind == NormKind::Injective {
        Ok(summarize(rows, 1.0, seed, true))
    } else {
        Ok(summarize(rows, 2f64.powi(d as i32 - 1), seed, false))
    }
}
