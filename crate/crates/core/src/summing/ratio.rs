use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{lip_denominator, poly_denominator, Mode, PairFamily};
use crate::cone::ConeMetricSpace;
use crate::error::{Error, Result};
use crate::numerics::{Bracket, Method, SeedStream, Settings};
use crate::poly::HomPoly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummingRatio {
    pub bracket: Bracket,
    /// `Σ ‖P(xᵢ) − P(yᵢ)‖^q`.
    pub numerator: f64,
    pub denominator: Bracket,
}

pub(crate) const DEGENERATE: f64 = 1e-12;

fn check_shapes(p: &HomPoly, family: &PairFamily, space: &ConeMetricSpace) -> Result<()> {
    if p.dim() != family.dim() || p.dim() != space.dim || p.degree() != space.degree {
        return Err(Error::ShapeMismatch(
            "polynomial, family and cone space must share dimension and degree".into(),
        ));
    }
    Ok(())
}

pub(crate) fn numerator(p: &HomPoly, family: &PairFamily, q: f64, settings: &Settings) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in family.pairs() {
        let px = p.eval(x)?;
        let py = p.eval(y)?;
        let diff: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
        total += settings.codomain.norm(&diff).powf(q);
    }
    Ok(total)
}

/// `(Σ‖P(xᵢ) − P(yᵢ)‖^q / D_q)^{1/q}` with the denominator of `mode`.
pub fn summing_ratio_detailed(
    p: &HomPoly,
    family: &PairFamily,
    q: f64,
    mode: Mode,
    space: &ConeMetricSpace,
    settings: &Settings,
) -> Result<SummingRatio> {
    check_shapes(p, family, space)?;
    let den = match mode {
        Mode::Poly => poly_denominator(family, space.degree, space.base, q, settings)?,
        Mode::Lip => lip_denominator(family, space, q, settings)?,
    };
    if den.upper < DEGENERATE {
        return Err(Error::DegenerateFamily { upper: den.upper });
    }
    let num = numerator(p, family, q, settings)?;
    let lower = (num / den.upper).powf(1.0 / q);
    let upper = if den.lower > 0.0 {
        (num / den.lower).powf(1.0 / q)
    } else {
        f64::MAX
    };
    Ok(SummingRatio {
        bracket: Bracket::new(lower, upper.max(lower), Method::Ratio, Method::Ratio),
        numerator: num,
        denominator: den,
    })
}

pub fn summing_ratio(
    p: &HomPoly,
    family: &PairFamily,
    q: f64,
    mode: Mode,
    space: &ConeMetricSpace,
    settings: &Settings,
) -> Result<Bracket> {
    Ok(summing_ratio_detailed(p, family, q, mode, space, settings)?.bracket)
}

/// Best ratio found by the family search. `estimate` is a certified lower
/// bound for the summing constant, never an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiEstimate {
    pub mode: Mode,
    pub q: f64,
    pub estimate: f64,
    pub ratio: Bracket,
    pub witness: Option<PairFamily>,
    pub evaluations: usize,
    pub budget: usize,
    pub lower_bound_only: bool,
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Endpoints are independent, or one is the origin, or (odd degrees only)
/// the pair is antipodal.
fn random_pair(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> (Vec<f64>, Vec<f64>) {
    let x = gaussian(rng, n);
    let y = match rng.random_range(0..4) {
        0 => vec![0.0; n],
        1 if degree % 2 == 1 => x.iter().map(|v| -v).collect(),
        _ => gaussian(rng, n),
    };
    (x, y)
}

fn normalize(family: &mut PairFamily) {
    let scale = family
        .pairs()
        .iter()
        .flat_map(|(x, y)| x.iter().chain(y))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 && scale.is_finite() {
        for (x, y) in family.pairs_mut() {
            x.iter_mut().chain(y.iter_mut()).for_each(|v| *v /= scale);
        }
    }
}

fn perturb(family: &PairFamily, rng: &mut ChaCha8Rng, step: f64, degree: usize) -> PairFamily {
    let mut out = family.clone();
    let n = out.dim();
    let i = rng.random_range(0..out.len());
    let pair = &mut out.pairs_mut()[i];
    let first = rng.random_bool(0.5);
    let (target, other) = if first {
        (&mut pair.0, &pair.1)
    } else {
        (&mut pair.1, &pair.0)
    };
    let u: f64 = rng.random();
    if u < 0.08 {
        target.iter_mut().for_each(|v| *v = 0.0);
    } else if u < 0.16 && degree % 2 == 1 {
        target.iter_mut().zip(other).for_each(|(t, o)| *t = -o);
    } else {
        for v in target.iter_mut().take(n) {
            *v += step * rng.sample::<f64, _>(StandardNormal);
        }
    }
    normalize(&mut out);
    out
}

/// Maximizes the certified ratio lower bound over families of size up to
/// `settings.search_max_family`: random families, growth of the incumbent
/// by one pair, then perturbation of one endpoint at a time with a
/// shrinking step. `budget` counts ratio evaluations.
pub fn estimate_pi_q(
    p: &HomPoly,
    q: f64,
    mode: Mode,
    budget: usize,
    seed: u64,
    space: &ConeMetricSpace,
    settings: &Settings,
) -> Result<PiEstimate> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "summing exponent q = {q} must be finite and ≥ 1"
        )));
    }
    if p.dim() != space.dim || p.degree() != space.degree {
        return Err(Error::ShapeMismatch("polynomial and cone space differ in shape".into()));
    }
    let empty = PiEstimate {
        mode,
        q,
        estimate: 0.0,
        ratio: Bracket::zero(),
        witness: None,
        evaluations: 0,
        budget,
        lower_bound_only: true,
    };
    if p.is_zero() || budget == 0 {
        return Ok(empty);
    }
    let search_settings = Settings {
        denominator_evals: settings.denominator_evals.min(200),
        ..settings.clone()
    };
    let n = p.dim();
    let mut rng = SeedStream::new(seed).fork(0xe57);
    let mut evaluations = 0usize;
    let score = |f: &PairFamily, evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        match summing_ratio(p, f, q, mode, space, &search_settings) {
            Ok(b) => Ok(b.lower),
            Err(Error::DegenerateFamily { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    };

    let k_max = settings.search_max_family.min(settings.family_cap).max(1);
    let per_k = (budget / k_max).max(2);
    let mut best: Option<(f64, PairFamily)> = None;
    for k in 1..=k_max {
        let mut local: Option<(f64, PairFamily)> = None;
        let consider = |v: f64, f: PairFamily, local: &mut Option<(f64, PairFamily)>| {
            if local.as_ref().is_none_or(|(b, _)| v > *b) {
                *local = Some((v, f));
            }
        };
        if let Some((_, g)) = &best {
            let mut grown = g.clone();
            let (x, y) = random_pair(&mut rng, n, p.degree());
            grown.push(x, y)?;
            normalize(&mut grown);
            let v = score(&grown, &mut evaluations)?;
            consider(v, grown, &mut local);
        }
        let n_random = (per_k * 2 / 5).max(1);
        for _ in 0..n_random {
            let pairs = (0..k).map(|_| random_pair(&mut rng, n, p.degree())).collect();
            let mut f = PairFamily::new(pairs)?;
            normalize(&mut f);
            let v = score(&f, &mut evaluations)?;
            consider(v, f, &mut local);
        }
        let (mut cur_v, mut cur) = local.expect("at least one candidate");
        let mut step = 0.3;
        let mut failures = 0;
        for _ in n_random..per_k {
            let cand = perturb(&cur, &mut rng, step, p.degree());
            let v = score(&cand, &mut evaluations)?;
            if v > cur_v {
                cur_v = v;
                cur = cand;
                failures = 0;
            } else {
                failures += 1;
                if failures >= 6 {
                    step = (step * 0.5).max(1e-4);
                    failures = 0;
                }
            }
        }
        if best.as_ref().is_none_or(|(b, _)| cur_v > *b) {
            best = Some((cur_v, cur));
        }
    }
    let (_, witness) = best.expect("searched at least one size");
    let ratio = match summing_ratio(p, &witness, q, mode, space, settings) {
        Ok(b) => b,
        Err(Error::DegenerateFamily { .. }) => return Ok(PiEstimate { evaluations, ..empty }),
        Err(e) => return Err(e),
    };
    Ok(PiEstimate {
        mode,
        q,
        estimate: ratio.lower,
        ratio,
        witness: Some(witness),
        evaluations,
        budget,
        lower_bound_only: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormKind;
    use crate::numerics::BaseNorm;
    use crate::tensor::{veronese, DenseTensor};

    fn space(n: usize, d: usize) -> ConeMetricSpace {
        ConeMetricSpace::new(n, d, BaseNorm::L2, NormKind::SymProjective).unwrap()
    }

    fn identity(n: usize) -> HomPoly {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        HomPoly::linear(&rows).unwrap()
    }

    #[test]
    fn zero_polynomial_has_zero_ratio() {
        let p = HomPoly::zero(2, 2, 1).unwrap();
        let f = PairFamily::new(vec![(vec![1.0, 0.0], vec![0.0, 1.0])]).unwrap();
        for mode in [Mode::Poly, Mode::Lip] {
            let r = summing_ratio(&p, &f, 1.0, mode, &space(2, 2), &Settings::default()).unwrap();
            assert_eq!(r.upper, 0.0);
        }
        let e = estimate_pi_q(&p, 1.0, Mode::Poly, 10, 1, &space(2, 2), &Settings::default()).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn identity_single_pair_ratio_is_one() {
        let f = PairFamily::new(vec![(vec![0.3, -1.2, 0.5], vec![0.0; 3])]).unwrap();
        for mode in [Mode::Poly, Mode::Lip] {
            for q in [1.0, 2.0] {
                let r = summing_ratio(&identity(3), &f, q, mode, &space(3, 1), &Settings::default()).unwrap();
                assert!(r.contains(1.0, 1e-9), "{mode} q={q}: {r:?}");
            }
        }
    }

    #[test]
    fn coordinate_square_ratio_is_one() {
        let p = HomPoly::new(vec![veronese(&[1.0, 0.0], 2).unwrap()]).unwrap();
        let f = PairFamily::new(vec![(vec![1.0, 0.0], vec![0.0, 0.0])]).unwrap();
        for mode in [Mode::Poly, Mode::Lip] {
            let r = summing_ratio(&p, &f, 1.0, mode, &space(2, 2), &Settings::default()).unwrap();
            assert!(r.contains(1.0, 1e-9), "{mode}: {r:?}");
        }
    }

    #[test]
    fn degenerate_family_rejected() {
        let p = HomPoly::from_tensor(&DenseTensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let f = PairFamily::new(vec![(vec![1.0, 0.0], vec![1.0, 0.0])]).unwrap();
        let e = summing_ratio(&p, &f, 1.0, Mode::Poly, &space(2, 2), &Settings::default()).unwrap_err();
        assert!(matches!(e, Error::DegenerateFamily { .. }));
    }

    #[test]
    fn identity_two_summing_search() {
        let e = estimate_pi_q(
            &identity(2),
            2.0,
            Mode::Poly,
            120,
            3,
            &space(2, 1),
            &Settings::default(),
        )
        .unwrap();
        assert!(e.estimate >= 1.34 && e.estimate <= 2f64.sqrt() * (1.0 + 1e-9), "{e:?}");
    }
}
