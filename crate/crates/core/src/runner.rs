//! The experiment pipeline: synthesize the perturbed function, run one or
//! both extraction methods, evaluate the requested certificates, and
//! assemble report entries.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use std::sync::Arc;

use crate::carrier::{Carrier, Grid, PadicCarrier, RealCarrier};
use crate::certify::{
    check_classical_rassias, check_fuzzy, check_nonarch_direct, check_nonarch_fp, check_rn,
    fit_rassias_eps, log_t_grid, sample_pairs, Certificate, CertStatus, PadicInstance,
    RealInstance, TheoremId,
};
use crate::config::{parse_big_rational, ExperimentConfig, Method};
use crate::direct::{extract, Direction, ExtractionResult};
use crate::error::{Error, Result};
use crate::exact::PowSum;
use crate::fixedpoint::{
    apply_j, fixed_point_run_padic, fixed_point_run_real, induced_constant_padic,
    induced_constant_real, lipschitz_probe_padic, lipschitz_probe_real, ContractionOperator,
    FixedPointRun,
};
use crate::funceq::{
    fit_theta_padic, fit_theta_real, perturbed_padic, perturbed_real, sample_triples,
    ControlFamily, PadicPerturbation, RealPerturbation, SampledFunction,
};
use crate::padic::PAdicNumber;
use crate::report::{
    AgreementReport, ExperimentReport, FitReport, FixedPointReport, MethodReport, PointRow,
    Report,
};
use crate::spaces::{FuzzyNorm, SettingKind};

const DIFF_TRACE_LIMIT: usize = 12;
/// Classical method-agreement tolerance.
const AGREEMENT_TOL: f64 = 1e-9;

/// Run every configuration (in parallel) and assemble the report in the
/// given deterministic order. `seed_override` replaces each config's seed.
pub fn run_many(
    configs: &[ExperimentConfig],
    seed_override: Option<u64>,
) -> Result<Report> {
    let outcomes: Vec<Result<ExperimentReport>> = configs
        .par_iter()
        .map(|cfg| run_experiment(cfg, seed_override))
        .collect();
    let mut experiments = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        experiments.push(o?);
    }
    let seed = seed_override.unwrap_or_else(|| {
        configs.first().map(|c| c.experiment.seed).unwrap_or(42)
    });
    Ok(Report::new(seed, experiments))
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed_override: Option<u64>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seed = seed_override.unwrap_or(cfg.experiment.seed);
    match cfg.setting.kind {
        SettingKind::NonArchimedean => run_padic(cfg, seed),
        _ => run_real(cfg, seed),
    }
}

/// A certificate counts toward the exit status through its own pass flag;
/// a corollary rider only blocks when it *fails in hypothesis* (a rider
/// whose range hypothesis does not apply is informational).
fn certificate_gate(cert: &Certificate) -> bool {
    let rider_ok = cert
        .corollary
        .as_ref()
        .is_none_or(|r| r.status != CertStatus::Fail);
    cert.pass && rider_ok
}

fn point_rows<C: Carrier>(carrier: &C, ext: &ExtractionResult<C>) -> Vec<PointRow> {
    ext.points
        .iter()
        .map(|p| PointRow {
            point_id: p.id.clone(),
            point: carrier.describe(&p.point),
            a_value: carrier.describe(&p.limit),
            error: carrier.norm_f64(&p.error),
            converged: p.converged,
            iterations: p.iterations,
            diff_trace: p
                .diff_trace
                .iter()
                .take(DIFF_TRACE_LIMIT)
                .map(|n| carrier.norm_f64(n))
                .collect(),
        })
        .collect()
}

fn method_report<C: Carrier>(carrier: &C, ext: &ExtractionResult<C>) -> MethodReport {
    MethodReport {
        direction: ext.direction.as_str(),
        all_converged: ext.all_converged,
        points: point_rows(carrier, ext),
    }
}

fn fixed_point_report<C: Carrier>(
    carrier: &C,
    run: &FixedPointRun<C>,
    declared: f64,
) -> FixedPointReport {
    FixedPointReport {
        direction: run.extraction.direction.as_str(),
        declared_lipschitz: declared,
        d_f_jf: run.d_f_jf.to_f64(),
        d_f_jf_witness: run.d_f_jf.witness().map(str::to_string),
        apriori_radius: run.apriori_radius,
        metric_trace: run.metric_trace.clone(),
        contraction_declared_ok: run.contraction_declared_ok,
        decay_ok: run.decay_ok,
        pointwise_ok: run.pointwise_ok,
        identity_ok: run.identity_ok,
        all_converged: run.extraction.all_converged,
        points: point_rows(carrier, &run.extraction),
    }
}

fn method_str(m: Method) -> String {
    match m {
        Method::Direct => "direct".into(),
        Method::FixedPoint => "fixed-point".into(),
        Method::Both => "both".into(),
    }
}

// ---------------------------------------------------------------------------
// Real carrier (classical / random / fuzzy)
// ---------------------------------------------------------------------------

fn parse_real_seed(carrier: &RealCarrier, s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    if let Some(axis) = s.strip_prefix('e').and_then(|t| t.parse::<usize>().ok()) {
        if axis == 0 || axis > carrier.dim {
            return Err(Error::Config(format!("grids.seeds: axis e{axis} out of range")));
        }
        let mut v = vec![0.0; carrier.dim];
        v[axis - 1] = 1.0;
        return Ok((s.to_string(), v));
    }
    if let Some(axis) = s
        .strip_prefix("-e")
        .and_then(|t| t.parse::<usize>().ok())
    {
        if axis == 0 || axis > carrier.dim {
            return Err(Error::Config(format!("grids.seeds: axis -e{axis} out of range")));
        }
        let mut v = vec![0.0; carrier.dim];
        v[axis - 1] = -1.0;
        return Ok((s.to_string(), v));
    }
    let q = parse_big_rational(s)?;
    let x = q
        .to_f64()
        .ok_or_else(|| Error::Config(format!("grids.seeds: `{s}` out of f64 range")))?;
    Ok((s.to_string(), carrier.scalar(x)))
}

fn real_perturbation(cfg: &ExperimentConfig) -> Result<RealPerturbation> {
    Ok(match cfg.function.perturbation.as_str() {
        "none" => RealPerturbation::None,
        "power" => {
            if cfg.function.rho <= 0.0 {
                return Err(Error::Config("function.rho: power perturbation needs rho > 0".into()));
            }
            RealPerturbation::Power { eps: cfg.function.epsilon, r: cfg.function.rho }
        }
        "offset" => RealPerturbation::Offset { eps: cfg.function.epsilon },
        other => return Err(Error::Config(format!("function.perturbation: `{other}`"))),
    })
}

/// Contraction parameter of the certificate for a real-carrier theorem:
/// "auto" derives the canonical value from the family's degree.
fn real_alpha(cfg: &ExperimentConfig, theorem: TheoremId, family: &ControlFamily) -> Result<f64> {
    let spec = cfg.control.contraction.trim();
    if spec != "auto" {
        return parse_big_rational(spec)?
            .to_f64()
            .ok_or_else(|| Error::Config("control.contraction: out of f64 range".into()));
    }
    let deg = family.degree().to_f64().unwrap();
    Ok(match theorem {
        TheoremId::RnDDown | TheoremId::RnFpDown | TheoremId::FzDDown => 2f64.powf(-deg),
        TheoremId::RnDUp | TheoremId::RnFpUp | TheoremId::FzDUp => 2f64.powf(deg),
        TheoremId::FzFpDown => 2f64.powf(1.0 - deg),
        TheoremId::FzFpUp => 2f64.powf(deg - 1.0),
        TheoremId::ClRassias => 0.5,
        _ => unreachable!("real_alpha only serves real-carrier theorems"),
    })
}

fn run_real(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let carrier = RealCarrier::new(cfg.setting.dimension);
    let seeds = cfg
        .grids
        .seeds
        .iter()
        .map(|s| parse_real_seed(&carrier, s))
        .collect::<Result<Vec<_>>>()?;
    let grid = Grid::from_seeds(carrier.clone(), seeds, cfg.grids.levels, cfg.grids.depth);
    let a_lin = parse_big_rational(&cfg.function.linear)?
        .to_f64()
        .ok_or_else(|| Error::Config("function.linear: out of f64 range".into()))?;
    let f = perturbed_real(carrier.clone(), grid.clone(), a_lin, real_perturbation(cfg)?);
    let direction = cfg.resolve_direction()?;
    let theorems = cfg.theorems()?;

    let shape = cfg.control_family()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = sample_triples(
        &grid,
        (cfg.grids.n_max as i64).min(12),
        !shape.is_product(),
        cfg.grids.triples,
        &mut rng,
    );
    let (family, fit) = if cfg.fit_coefficient() {
        let rep = fit_theta_real(&f, &shape, &triples)?;
        let fam = shape.with_coefficient(rep.theta.clone());
        let fit = FitReport {
            family: cfg.control.family.clone(),
            coefficient: rep.theta.to_f64().unwrap_or(f64::NAN),
            coefficient_exact: rep.theta.to_string(),
            raw_max_ratio: rep.raw_max_ratio,
            max_defect: rep.max_defect,
            witness: rep.witness.clone(),
            samples: rep.samples,
            rounded_to_prime_power: rep.rounded_to_prime_power,
        };
        (fam, Some(fit))
    } else {
        (shape, None)
    };

    let direct_run = if cfg.experiment.method.runs_direct() {
        Some(extract(&f, direction, cfg.grids.n_max, cfg.grids.tolerance)?)
    } else {
        None
    };
    let declared = induced_constant_real(&family, direction);
    let fp_run = if cfg.experiment.method.runs_fixed_point() {
        let op = ContractionOperator { direction, declared, declared_exact: None };
        Some(fixed_point_run_real(&f, &op, &family, cfg.grids.n_max, cfg.grids.tolerance)?)
    } else {
        None
    };

    let a_vals: Vec<Vec<f64>> = match (&direct_run, &fp_run) {
        (Some(d), _) => d.limit_values(),
        (None, Some(fp)) => fp.extraction.limit_values(),
        (None, None) => return Err(Error::Config("experiment.method: nothing to run".into())),
    };

    let agreement = match (&direct_run, &fp_run) {
        (Some(d), Some(fp)) => {
            let max_distance = d
                .points
                .iter()
                .zip(&fp.extraction.points)
                .map(|(a, b)| carrier.dist(&a.limit, &b.limit))
                .fold(0.0f64, f64::max);
            Some(AgreementReport { max_distance, pass: max_distance <= AGREEMENT_TOL })
        }
        _ => None,
    };

    let lipschitz = match &fp_run {
        Some(_) => {
            let op = ContractionOperator { direction, declared, declared_exact: None };
            let probes = real_probes(&carrier, &grid, &f, a_lin, &family, direction, seed)?;
            Some(lipschitz_probe_real(&op, &family, &probes)?)
        }
        None => None,
    };

    let t_grid = log_t_grid(cfg.grids.t_min, cfg.grids.t_max, cfg.grids.t_points);
    let fuzzy = FuzzyNorm::new(cfg.setting.fuzzy_alpha, cfg.setting.fuzzy_beta)?;
    let mut certificates = Vec::new();
    for theorem in &theorems {
        let alpha = real_alpha(cfg, *theorem, &family)?;
        let inst = RealInstance {
            carrier: &carrier,
            grid: &grid,
            f: &f,
            a_vals: &a_vals,
            control: &family,
            triples: &triples,
            t_grid: &t_grid,
            anchor_norm: cfg.setting.anchor_norm,
            fuzzy,
            alpha,
        };
        let cert = match theorem.setting() {
            SettingKind::Random => check_rn(&inst, *theorem),
            SettingKind::Fuzzy => check_fuzzy(&inst, *theorem),
            SettingKind::Classical => {
                let mut pair_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
                let pairs = sample_pairs(&grid, cfg.grids.triples, &mut pair_rng);
                let p = family.degree().to_f64().unwrap();
                let (eps, _witness) = fit_rassias_eps(&f, p, &pairs)?;
                check_classical_rassias(&inst, eps, p, &pairs)
            }
            SettingKind::NonArchimedean => unreachable!("real runner"),
        };
        certificates.push(cert);
    }

    let methods_ok = fp_run
        .as_ref()
        .map(|fp| fp.decay_ok && fp.pointwise_ok && fp.identity_ok && fp.contraction_declared_ok)
        .unwrap_or(true)
        && agreement.as_ref().map(|a| a.pass).unwrap_or(true)
        && lipschitz.as_ref().map(|l| l.pass).unwrap_or(true);
    let pass = certificates.iter().all(certificate_gate) && methods_ok;

    Ok(ExperimentReport {
        name: cfg.experiment.name.clone(),
        setting: cfg.setting.kind.as_str(),
        direction: direction.as_str(),
        method: method_str(cfg.experiment.method),
        seed,
        fit,
        direct: direct_run.as_ref().map(|d| method_report(&carrier, d)),
        fixed_point: fp_run.as_ref().map(|fp| fixed_point_report(&carrier, fp, declared)),
        agreement,
        lipschitz,
        certificates,
        pass,
    })
}

/// A named probe pair for the Lipschitz check.
type ProbePair<C> = (String, SampledFunction<C>, SampledFunction<C>);

/// Probe pairs for the Lipschitz check: f against Jf, plus seeded
/// φ-shaped perturbations of the additive core.
fn real_probes(
    carrier: &RealCarrier,
    grid: &Arc<Grid<RealCarrier>>,
    f: &SampledFunction<RealCarrier>,
    a_lin: f64,
    family: &ControlFamily,
    direction: Direction,
    seed: u64,
) -> Result<Vec<ProbePair<RealCarrier>>> {
    let mut probes = Vec::new();
    let core = perturbed_real(carrier.clone(), grid.clone(), a_lin, RealPerturbation::None);
    probes.push(("f-vs-Jf".to_string(), f.clone(), apply_j(f, direction)?));
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    for i in 0..8 {
        let scale: f64 = rng.gen_range(0.5..2.0);
        let c2 = carrier.clone();
        let core2 = core.clone();
        let fam2 = family.clone();
        let rule: crate::funceq::EvalRule<RealCarrier> = Arc::new(move |x| {
            let mut v = core2.eval(x);
            v[0] += scale * fam2.phi_x2x_real(&c2, x);
            v
        });
        let g = SampledFunction::new(carrier.clone(), grid.clone(), rule);
        probes.push((format!("phi-probe-{i}"), g, core.clone()));
    }
    Ok(probes)
}

// ---------------------------------------------------------------------------
// Non-Archimedean carrier
// ---------------------------------------------------------------------------

fn padic_perturbation(cfg: &ExperimentConfig) -> Result<PadicPerturbation> {
    Ok(match cfg.function.perturbation.as_str() {
        "none" => PadicPerturbation::None,
        "valuation-shift" => PadicPerturbation::ValuationShift {
            c: parse_big_rational(&cfg.function.shift_scale)?,
            m: cfg.function.shift_base,
            r: crate::config::parse_exponent(&cfg.function.shift_rate)?,
        },
        other => return Err(Error::Config(format!("function.perturbation: `{other}`"))),
    })
}

fn padic_alpha(
    cfg: &ExperimentConfig,
    carrier: &PadicCarrier,
    theorem: TheoremId,
    family: &ControlFamily,
) -> Result<(f64, PowSum)> {
    let spec = cfg.control.contraction.trim();
    if spec != "auto" {
        let q = parse_big_rational(spec)?;
        let exact = PowSum::rational(carrier.prime, q.clone());
        return Ok((q.to_f64().unwrap_or(f64::NAN), exact));
    }
    let dir = theorem.direction();
    Ok(induced_constant_padic(carrier, family, dir))
}

fn run_padic(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let carrier = PadicCarrier::new(cfg.setting.prime, cfg.setting.precision);
    let seeds = cfg
        .grids
        .seeds
        .iter()
        .map(|s| {
            PAdicNumber::parse(s, carrier.prime, carrier.precision)
                .map(|p| (s.trim().to_string(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = Grid::from_seeds(carrier.clone(), seeds, cfg.grids.levels, cfg.grids.depth);
    let a_lin = parse_big_rational(&cfg.function.linear)?;
    let f = perturbed_padic(carrier.clone(), grid.clone(), a_lin.clone(), padic_perturbation(cfg)?)?;
    let direction = cfg.resolve_direction()?;
    let theorems = cfg.theorems()?;

    let shape = cfg.control_family()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = sample_triples(
        &grid,
        cfg.grids.n_max as i64,
        !shape.is_product(),
        cfg.grids.triples,
        &mut rng,
    );
    let (family, fit) = if cfg.fit_coefficient() {
        let rep = fit_theta_padic(&f, &shape, &triples)?;
        let fam = shape.with_coefficient(rep.theta.clone());
        let fit = FitReport {
            family: cfg.control.family.clone(),
            coefficient: rep.theta.to_f64().unwrap_or(f64::NAN),
            coefficient_exact: rep.theta.to_string(),
            raw_max_ratio: rep.raw_max_ratio,
            max_defect: rep.max_defect,
            witness: rep.witness.clone(),
            samples: rep.samples,
            rounded_to_prime_power: rep.rounded_to_prime_power,
        };
        (fam, Some(fit))
    } else {
        (shape, None)
    };

    let floor = cfg.grids.valuation_floor;
    let direct_run = if cfg.experiment.method.runs_direct() {
        Some(extract(&f, direction, cfg.grids.n_max, floor)?)
    } else {
        None
    };
    let (declared, declared_exact) = induced_constant_padic(&carrier, &family, direction);
    let fp_run = if cfg.experiment.method.runs_fixed_point() {
        let op = ContractionOperator {
            direction,
            declared,
            declared_exact: Some(declared_exact.clone()),
        };
        Some(fixed_point_run_padic(&f, &op, &family, cfg.grids.n_max, floor)?)
    } else {
        None
    };

    let a_vals: Vec<PAdicNumber> = match (&direct_run, &fp_run) {
        (Some(d), _) => d.limit_values(),
        (None, Some(fp)) => fp.extraction.limit_values(),
        (None, None) => return Err(Error::Config("experiment.method: nothing to run".into())),
    };

    let agreement = match (&direct_run, &fp_run) {
        (Some(d), Some(fp)) => {
            let mut max_distance = 0.0f64;
            let mut pass = true;
            for (a, b) in d.points.iter().zip(&fp.extraction.points) {
                let diff = carrier.dist(&a.limit, &b.limit);
                max_distance = max_distance.max(diff.to_f64());
                if !diff.at_most_scale(floor) {
                    pass = false;
                }
            }
            Some(AgreementReport { max_distance, pass })
        }
        _ => None,
    };

    let lipschitz = match &fp_run {
        Some(_) => {
            let op = ContractionOperator {
                direction,
                declared,
                declared_exact: Some(declared_exact.clone()),
            };
            let probes = padic_probes(&carrier, &grid, &f, &a_lin, &family, direction, seed)?;
            Some(lipschitz_probe_padic(&op, &family, &probes)?)
        }
        None => None,
    };

    let mut certificates = Vec::new();
    for theorem in &theorems {
        let (_af, alpha) = padic_alpha(cfg, &carrier, *theorem, &family)?;
        let inst = PadicInstance {
            carrier: &carrier,
            grid: &grid,
            f: &f,
            a_vals: &a_vals,
            control: &family,
            triples: &triples,
            alpha,
            n_terms: cfg.grids.n_max,
        };
        let cert = match theorem {
            TheoremId::NaFpDown => check_nonarch_fp(&inst, Direction::Down),
            TheoremId::NaFpUp => check_nonarch_fp(&inst, Direction::Up),
            TheoremId::NaDDown => check_nonarch_direct(&inst, Direction::Down),
            TheoremId::NaDUp => check_nonarch_direct(&inst, Direction::Up),
            other => {
                return Err(Error::Config(format!(
                    "theorem {} cannot run on the non-archimedean carrier",
                    other.as_str()
                )))
            }
        };
        certificates.push(cert);
    }

    let methods_ok = fp_run
        .as_ref()
        .map(|fp| fp.decay_ok && fp.pointwise_ok && fp.identity_ok && fp.contraction_declared_ok)
        .unwrap_or(true)
        && agreement.as_ref().map(|a| a.pass).unwrap_or(true)
        && lipschitz.as_ref().map(|l| l.pass).unwrap_or(true);
    let pass = certificates.iter().all(certificate_gate) && methods_ok;

    Ok(ExperimentReport {
        name: cfg.experiment.name.clone(),
        setting: cfg.setting.kind.as_str(),
        direction: direction.as_str(),
        method: method_str(cfg.experiment.method),
        seed,
        fit,
        direct: direct_run.as_ref().map(|d| method_report(&carrier, d)),
        fixed_point: fp_run.as_ref().map(|fp| fixed_point_report(&carrier, fp, declared)),
        agreement,
        lipschitz,
        certificates,
        pass,
    })
}

fn padic_probes(
    carrier: &PadicCarrier,
    grid: &Arc<Grid<PadicCarrier>>,
    f: &SampledFunction<PadicCarrier>,
    a_lin: &BigRational,
    family: &ControlFamily,
    direction: Direction,
    seed: u64,
) -> Result<Vec<ProbePair<PadicCarrier>>> {
    let mut probes = Vec::new();
    let core = perturbed_padic(carrier.clone(), grid.clone(), a_lin.clone(), PadicPerturbation::None)?;
    probes.push(("f-vs-Jf".to_string(), f.clone(), apply_j(f, direction)?));
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let rate = family.degree();
    for i in 0..8 {
        let base: i64 = rng.gen_range(3..=10);
        let g = perturbed_padic(
            carrier.clone(),
            grid.clone(),
            a_lin.clone(),
            PadicPerturbation::ValuationShift {
                c: BigRational::from_integer(1.into()),
                m: base,
                r: if rate > num_rational::Ratio::from_integer(0) {
                    rate
                } else {
                    num_rational::Ratio::new(1, 2)
                },
            },
        )?;
        probes.push((format!("val-probe-{i}"), g, core.clone()));
    }
    Ok(probes)
}
