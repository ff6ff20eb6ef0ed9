use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use veronese_core::cone::{bilipschitz_all, cone_distance_bases, ConeMetricSpace};
use veronese_core::norms::{norm_result, sandwich_check, NormKind, NormSelector};
use veronese_core::numerics::SeedStream;
use veronese_core::poly::{
    cone_lipschitz_constant, factorization_check, lipschitz_sandwich_constant, poly_norm, HomPoly,
};
use veronese_core::summing::{
    build_factorization, estimate_pi_q, lip_denominator, pietsch_constant, pietsch_measure, poly_denominator,
    poly_dictionary, summing_ratio_detailed, Mode, PairFamily, PIETSCH_TOL,
};
use veronese_core::tensor::{symmetrize, symmetry_defect, DenseTensor};
use veronese_core::Error;

use crate::config::{ExperimentConfig, Suite};
use crate::io::{read_json, write_json, InputError};
use crate::report::{num, Table};

pub enum CliError {
    Input(InputError),
    Core(Error),
    Output(String),
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    CheckFailed,
    PietschBudget,
}

pub struct Outcome {
    pub results: Value,
    pub table: Option<Table>,
    pub status: Status,
}

type CmdResult = Result<Outcome, CliError>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize to JSON")
}

fn gaussian(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn load_poly(cfg: &ExperimentConfig, seeds: &SeedStream) -> Result<(HomPoly, String), CliError> {
    match &cfg.poly {
        Some(path) => Ok((read_json(path, "polynomial")?, path.display().to_string())),
        None => {
            let mut rng = seeds.fork(1);
            Ok((HomPoly::random(cfg.n, cfg.d, cfg.m, &mut rng)?, "random".into()))
        }
    }
}

fn load_family(
    cfg: &ExperimentConfig,
    dim: usize,
    pairs: usize,
    seeds: &SeedStream,
) -> Result<(PairFamily, String), CliError> {
    match &cfg.family {
        Some(path) => Ok((read_json(path, "pair family")?, path.display().to_string())),
        None => {
            let mut rng = seeds.fork(2);
            let pairs = (0..pairs)
                .map(|_| (gaussian(dim, &mut rng), gaussian(dim, &mut rng)))
                .collect();
            Ok((PairFamily::new(pairs)?, "random".into()))
        }
    }
}

fn space(p: &HomPoly, cfg: &ExperimentConfig, kind: NormKind) -> Result<ConeMetricSpace, CliError> {
    Ok(ConeMetricSpace::new(p.dim(), p.degree(), cfg.base, kind)?)
}

pub fn norm(cfg: &ExperimentConfig) -> CmdResult {
    let settings = &cfg.settings;
    let (t, source) = match &cfg.tensor {
        Some(path) => (read_json::<DenseTensor>(path, "tensor")?, path.display().to_string()),
        None => {
            let mut rng = SeedStream::new(cfg.seed).fork(0);
            let len = cfg.n.pow(cfg.d as u32);
            let raw = DenseTensor::new(cfg.d, cfg.n, (0..len).map(|_| rng.sample(StandardNormal)).collect())?;
            (symmetrize(&raw).into_dense(), "random symmetric".into())
        }
    };
    let symmetric = symmetry_defect(&t) <= settings.symmetry_tol * t.max_abs().max(1.0);
    let mut table = Table::new(&["norm", "lower", "upper", "method_lower", "method_upper"]);
    let mut norms = Vec::new();
    for &kind in &cfg.norms {
        if kind == NormKind::SymProjective && !symmetric {
            norms.push(json!({ "kind": kind, "skipped": "tensor is not symmetric" }));
            continue;
        }
        let r = norm_result(&t, NormSelector::new(kind, cfg.base), settings)?;
        table.push(vec![
            kind.to_string(),
            num(r.bracket.lower),
            num(r.bracket.upper),
            to_value(&r.bracket.method_lower)
                .as_str()
                .unwrap_or_default()
                .to_string(),
            to_value(&r.bracket.method_upper)
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ]);
        norms.push(to_value(&r));
    }
    let sandwich = sandwich_check(&t, cfg.base, settings)?;
    let status = if sandwich.pass { Status::Ok } else { Status::CheckFailed };
    Ok(Outcome {
        results: json!({
            "source": source,
            "order": t.order(),
            "dim": t.dim(),
            "symmetric": symmetric,
            "norms": norms,
            "sandwich": sandwich,
        }),
        table: Some(table),
        status,
    })
}

pub fn distance(cfg: &ExperimentConfig) -> CmdResult {
    let settings = &cfg.settings;
    let bound = 2f64.powi(cfg.d as i32 - 1);
    match (&cfg.x, &cfg.y) {
        (Some(x), Some(y)) => {
            if x.len() != y.len() {
                return Err(InputError::config("`x` and `y` differ in length".into()).into());
            }
            let mut table = Table::new(&["norm", "lower", "upper"]);
            let mut rows = Vec::new();
            for &kind in &cfg.norms {
                let sp = ConeMetricSpace::new(x.len(), cfg.d, cfg.base, kind)?;
                let b = cone_distance_bases(x, y, &sp, settings)?;
                table.push(vec![kind.to_string(), num(b.lower), num(b.upper)]);
                rows.push(json!({ "kind": kind, "distance": b }));
            }
            Ok(Outcome {
                results: json!({ "x": x, "y": y, "degree": cfg.d, "distances": rows, "bound": bound }),
                table: Some(table),
                status: Status::Ok,
            })
        }
        (None, None) => metrics(cfg),
        _ => Err(InputError::config("give both `x` and `y`, or neither for a sampled sweep".into()).into()),
    }
}

fn metrics(cfg: &ExperimentConfig) -> CmdResult {
    let reports = bilipschitz_all(cfg.n, cfg.d, cfg.base, cfg.samples, cfg.seed, &cfg.settings)?;
    let mut table = Table::new(&["alpha", "beta", "min_ratio", "max_ratio", "bound", "violations", "pass"]);
    let mut rows = Vec::new();
    let mut pass = true;
    for (a, b, r) in reports {
        if !(cfg.norms.contains(&a) && cfg.norms.contains(&b)) {
            continue;
        }
        pass &= r.pass;
        table.push(vec![
            a.to_string(),
            b.to_string(),
            num(r.min_ratio),
            num(r.max_ratio),
            num(r.bound),
            r.violations.to_string(),
            r.pass.to_string(),
        ]);
        rows.push(json!({ "alpha": a, "beta": b, "report": r }));
    }
    Ok(Outcome {
        results: json!({ "n": cfg.n, "d": cfg.d, "base": cfg.base, "pairs": rows, "pass": pass }),
        table: Some(table),
        status: if pass { Status::Ok } else { Status::CheckFailed },
    })
}

/// Lipschitz bracket of `T_P` on the cone for one selector, with the
/// comparison to `‖P‖` it must satisfy.
fn lipschitz_entry(p: &HomPoly, cfg: &ExperimentConfig, kind: NormKind) -> Result<(Value, bool), CliError> {
    let lip = cone_lipschitz_constant(p, &space(p, cfg, kind)?, &cfg.settings)?;
    let sandwich = lipschitz_sandwich_constant(p.degree());
    let pass = if kind == NormKind::SymProjective || p.degree() == 1 {
        lip.bracket.overlaps(&lip.poly_norm, 0.02) && lip.bracket.rel_gap() <= 0.02
    } else {
        lip.bracket.lower <= sandwich * lip.poly_norm.upper * (1.0 + 1e-9)
    };
    Ok((
        json!({ "kind": kind, "lipschitz": lip, "sandwich_constant": sandwich, "pass": pass }),
        pass,
    ))
}

pub fn poly(cfg: &ExperimentConfig) -> CmdResult {
    let seeds = SeedStream::new(cfg.seed);
    let (p, source) = load_poly(cfg, &seeds)?;
    let norm = poly_norm(&p, cfg.base, &cfg.settings)?;
    let mut pass = true;
    let mut table = Table::new(&["norm", "lipschitz_lower", "lipschitz_upper", "poly_norm_upper", "pass"]);
    let mut entries = Vec::new();
    for &kind in &cfg.norms {
        let (entry, ok) = lipschitz_entry(&p, cfg, kind)?;
        pass &= ok;
        table.push(vec![
            kind.to_string(),
            num(entry["lipschitz"]["bracket"]["lower"].as_f64().unwrap_or(f64::NAN)),
            num(entry["lipschitz"]["bracket"]["upper"].as_f64().unwrap_or(f64::NAN)),
            num(norm.upper),
            ok.to_string(),
        ]);
        entries.push(entry);
    }
    let fact = factorization_check(&p, cfg.samples, cfg.seed)?;
    pass &= fact.pass;
    Ok(Outcome {
        results: json!({
            "source": source,
            "degree": p.degree(),
            "dim": p.dim(),
            "targets": p.targets(),
            "poly_norm": norm,
            "lipschitz": entries,
            "factorization": fact,
            "pass": pass,
        }),
        table: Some(table),
        status: if pass { Status::Ok } else { Status::CheckFailed },
    })
}

pub fn summing(cfg: &ExperimentConfig) -> CmdResult {
    let seeds = SeedStream::new(cfg.seed);
    let (p, poly_source) = load_poly(cfg, &seeds)?;
    let sp = space(&p, cfg, NormKind::SymProjective)?;
    let settings = &cfg.settings;
    let mut table = Table::new(&["mode", "ratio_lower", "ratio_upper", "estimate"]);
    let mut rows = Vec::new();
    let family = match &cfg.family {
        Some(_) => Some(load_family(cfg, p.dim(), 0, &seeds)?),
        None => None,
    };
    let mut estimates = Vec::new();
    for mode in [Mode::Poly, Mode::Lip] {
        let mut row = json!({ "mode": mode });
        let mut ratio_cells = [String::new(), String::new()];
        if let Some((fam, _)) = &family {
            let r = summing_ratio_detailed(&p, fam, cfg.q, mode, &sp, settings)?;
            ratio_cells = [num(r.bracket.lower), num(r.bracket.upper)];
            row["ratio"] = to_value(&r);
        }
        let e = estimate_pi_q(&p, cfg.q, mode, cfg.budget, cfg.seed, &sp, settings)?;
        estimates.push(e.estimate);
        table.push(vec![
            mode.to_string(),
            ratio_cells[0].clone(),
            ratio_cells[1].clone(),
            num(e.estimate),
        ]);
        row["estimate"] = to_value(&e);
        rows.push(row);
    }
    let (a, b) = (estimates[0], estimates[1]);
    let agreement = if a.max(b) > 0.0 { (a - b).abs() / a.max(b) } else { 0.0 };
    let mut results = json!({
        "poly_source": poly_source,
        "q": cfg.q,
        "modes": rows,
        "relative_disagreement": agreement,
    });
    if let Some((fam, source)) = family {
        results["family_source"] = json!(source);
        results["family_size"] = json!(fam.len());
    }
    Ok(Outcome {
        results,
        table: Some(table),
        status: Status::Ok,
    })
}

/// A certificate at `C = 1.05·max(search estimate, dictionary minimum)`,
/// or at the configured constant.
fn certify(
    p: &HomPoly,
    family: &PairFamily,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Result<veronese_core::summing::PietschCertificate, Error>, Value), CliError> {
    let settings = &cfg.settings;
    let sp = space(p, cfg, NormKind::SymProjective)?;
    let dict = poly_dictionary(family, p.degree(), cfg.base, cfg.dictionary_size, seed, settings)?;
    let (constant, basis) = match cfg.constant {
        Some(c) => (c, json!({ "source": "config" })),
        None => {
            let minimal = pietsch_constant(p, family, cfg.q, dict.clone(), Mode::Poly, &sp, settings)?;
            let est = estimate_pi_q(p, cfg.q, Mode::Poly, cfg.budget, seed, &sp, settings)?;
            let c = 1.05 * est.estimate.max(minimal.constant);
            (
                c,
                json!({ "source": "estimate", "estimate": est.estimate, "dictionary_minimum": minimal.constant }),
            )
        }
    };
    let cert = pietsch_measure(p, family, cfg.q, constant, dict, Mode::Poly, &sp, settings);
    Ok((cert, json!({ "constant": constant, "basis": basis })))
}

pub fn pietsch(cfg: &ExperimentConfig, out: Option<&std::path::Path>) -> CmdResult {
    let seeds = SeedStream::new(cfg.seed);
    let (p, poly_source) = load_poly(cfg, &seeds)?;
    let (family, family_source) = match &cfg.family {
        Some(_) => load_family(cfg, p.dim(), 0, &seeds)?,
        None => {
            let mut rng = seeds.fork(3);
            let pts: Vec<Vec<f64>> = (0..5).map(|_| gaussian(p.dim(), &mut rng)).collect();
            (PairFamily::all_pairs(&pts)?, "random".into())
        }
    };
    let (cert, constant) = certify(&p, &family, cfg, cfg.seed)?;
    let cert = match cert {
        Ok(c) => c,
        Err(Error::Infeasible { certificate, .. }) => *certificate,
        Err(e) => return Err(e.into()),
    };
    let valid = cert.violation <= cfg.tol;
    let factorization = if valid {
        let f = build_factorization(&p, &cert, &[], &cfg.settings)?;
        json!({
            "points": f.points.len(),
            "support": f.support.len(),
            "lip_beta": f.lip_beta,
            "certified_max_ratio": f.certified_max_ratio,
            "residual": f.residual,
        })
    } else {
        Value::Null
    };
    let cert_path = cfg
        .certificate
        .clone()
        .or_else(|| out.map(|o| o.with_extension("certificate.json")));
    if let Some(path) = &cert_path {
        write_json(path, &cert).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    }
    let mut table = Table::new(&["pair", "numerator", "residual"]);
    for (i, (n, r)) in cert.numerators.iter().zip(&cert.residuals).enumerate() {
        table.push(vec![i.to_string(), num(*n), num(*r)]);
    }
    let support = cert.weights.iter().filter(|w| **w > 1e-12).count();
    Ok(Outcome {
        results: json!({
            "poly_source": poly_source,
            "family_source": family_source,
            "q": cfg.q,
            "constant": constant,
            "violation": cert.violation,
            "valid": valid,
            "refinements": cert.refinements,
            "functionals": cert.functionals.len(),
            "support": support,
            "primal_objective": cert.primal_objective,
            "dual_objective": cert.dual_objective,
            "certificate": cert_path.map(|p| p.display().to_string()),
            "factorization": factorization,
        }),
        table: Some(table),
        status: if valid { Status::Ok } else { Status::PietschBudget },
    })
}

fn suite_factorization(cfg: &ExperimentConfig) -> Result<(Value, bool), CliError> {
    let seeds = SeedStream::new(cfg.seed).child(0xfac);
    let mut pass = true;
    let mut rows = Vec::new();
    for i in 0..cfg.instances {
        let mut rng = seeds.fork(i as u64);
        let p = HomPoly::random(cfg.n, cfg.d, cfg.m, &mut rng)?;
        let fact = factorization_check(&p, cfg.samples, cfg.seed.wrapping_add(i as u64))?;
        let (sym, sym_ok) = lipschitz_entry(&p, cfg, NormKind::SymProjective)?;
        let mut ok = fact.pass && sym_ok;
        let mut row = json!({ "instance": i, "factorization": fact, "sym_projective": sym });
        if i == 0 {
            let pts: Vec<Vec<f64>> = (0..5).map(|_| gaussian(cfg.n, &mut rng)).collect();
            let family = PairFamily::all_pairs(&pts)?;
            let inner = ExperimentConfig {
                constant: None,
                ..cfg.clone()
            };
            let (cert, c) = certify(&p, &family, &inner, cfg.seed)?;
            let entry = match cert {
                Ok(cert) => {
                    let f = build_factorization(&p, &cert, &[], &cfg.settings)?;
                    let good = cert.violation <= PIETSCH_TOL
                        && f.residual <= 1e-8
                        && f.lip_beta <= cert.constant * (1.0 + 1e-6);
                    ok &= good;
                    json!({ "constant": c, "violation": cert.violation, "lip_beta": f.lip_beta, "residual": f.residual, "pass": good })
                }
                Err(Error::Infeasible { violation, .. }) => {
                    ok = false;
                    json!({ "constant": c, "violation": violation, "pass": false })
                }
                Err(e) => return Err(e.into()),
            };
            row["pietsch"] = entry;
        }
        row["pass"] = json!(ok);
        pass &= ok;
        rows.push(row);
    }
    Ok((json!({ "instances": rows, "pass": pass }), pass))
}

fn suite_summing(cfg: &ExperimentConfig) -> Result<(Value, bool), CliError> {
    let seeds = SeedStream::new(cfg.seed).child(0x5a);
    let settings = &cfg.settings;
    let mut pass = true;
    let mut rows = Vec::new();
    for i in 0..cfg.instances {
        let mut rng = seeds.fork(i as u64);
        let p = HomPoly::random(cfg.n, cfg.d, cfg.m, &mut rng)?;
        let sp = space(&p, cfg, NormKind::SymProjective)?;
        let pairs = (0..4)
            .map(|_| (gaussian(cfg.n, &mut rng), gaussian(cfg.n, &mut rng)))
            .collect();
        let family = PairFamily::new(pairs)?;
        let lip = lip_denominator(&family, &sp, 1.0, settings)?;
        let pol = poly_denominator(&family, cfg.d, cfg.base, 1.0, settings)?;
        let dominates = lip.upper >= pol.lower * (1.0 - 1e-9);
        let est_poly = estimate_pi_q(&p, cfg.q, Mode::Poly, cfg.budget, cfg.seed, &sp, settings)?;
        let est_lip = estimate_pi_q(&p, cfg.q, Mode::Lip, cfg.budget, cfg.seed, &sp, settings)?;
        let (a, b) = (est_poly.estimate, est_lip.estimate);
        let gap = if a.max(b) > 0.0 { (a - b).abs() / a.max(b) } else { 0.0 };
        let ok = dominates && gap <= 0.05;
        pass &= ok;
        rows.push(json!({
            "instance": i,
            "lip_denominator": lip,
            "poly_denominator": pol,
            "dominates": dominates,
            "estimate_poly": a,
            "estimate_lip": b,
            "relative_disagreement": gap,
            "pass": ok,
        }));
    }
    Ok((json!({ "q": cfg.q, "instances": rows, "pass": pass }), pass))
}

pub fn check(cfg: &ExperimentConfig) -> CmdResult {
    let run = |s: Suite| s == cfg.suite || cfg.suite == Suite::All;
    let mut results = serde_json::Map::new();
    let mut table = Table::new(&["suite", "pass"]);
    let mut pass = true;
    if run(Suite::Metrics) {
        let m = metrics(cfg)?;
        let ok = m.status == Status::Ok;
        table.push(vec!["metrics".into(), ok.to_string()]);
        pass &= ok;
        results.insert("metrics".into(), m.results);
    }
    if run(Suite::Factorization) {
        let (v, ok) = suite_factorization(cfg)?;
        table.push(vec!["factorization".into(), ok.to_string()]);
        pass &= ok;
        results.insert("factorization".into(), v);
    }
    if run(Suite::Summing) {
        let (v, ok) = suite_summing(cfg)?;
        table.push(vec!["summing".into(), ok.to_string()]);
        pass &= ok;
        results.insert("summing".into(), v);
    }
    results.insert("pass".into(), json!(pass));
    Ok(Outcome {
        results: Value::Object(results),
        table: Some(table),
        status: if pass { Status::Ok } else { Status::CheckFailed },
    })
}
