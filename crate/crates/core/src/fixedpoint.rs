//! The fixed-point method: generalized metric on sampled function space,
//! the rescaling contraction J, and the Diaz-Margolis iteration with its
//! a-priori bound d(f, A) ≤ d(f, Jf)/(1 − L).
//!
//! The generalized metric is
//! `d(g,h) = inf{ μ : ‖g(x) − h(x)‖ ≤ μ·φ(x,2x,x) for all x }`,
//! realized here as a maximum over the report grid, with +∞ as a
//! first-class value. On the p-adic carrier the metric values are exact
//! ratios of power sums; on the real carrier they are floats.

use num_rational::Ratio;
use serde::Serialize;

use crate::carrier::{Carrier, Grid, GridPoint, PadicCarrier, RealCarrier};
use crate::direct::{extract, iterate_at, Direction, ExtractionResult};
use crate::error::{Error, Result};
use crate::exact::{PowRatio, PowSum};
use crate::funceq::{ControlFamily, SampledFunction};
use crate::spaces::CERT_SLACK;

/// The rescaling operator J with its declared Lipschitz constant.
/// Downscale: (Jg)(x) = 2g(x/2); upscale: (Jg)(x) = g(2x)/2.
#[derive(Clone, Debug)]
pub struct ContractionOperator {
    pub direction: Direction,
    /// Declared Lipschitz constant (α, L or 2α depending on the theorem).
    pub declared: f64,
    /// Exact form of the constant for ultrametric comparisons.
    pub declared_exact: Option<PowSum>,
}

/// One application of J. Consumes one level of the grid's orbit depth.
pub fn apply_j<C: Carrier>(
    g: &SampledFunction<C>,
    dir: Direction,
) -> Result<SampledFunction<C>> {
    if g.depth_used + 1 > g.grid.depth {
        return Err(Error::Depth(format!(
            "J application {} exceeds grid depth {}",
            g.depth_used + 1,
            g.grid.depth
        )));
    }
    let carrier = g.carrier.clone();
    let inner = g.clone();
    let c2 = carrier.clone();
    let rule: crate::funceq::EvalRule<C> = match dir {
        Direction::Down => std::sync::Arc::new(move |x| {
            c2.scale_pow2(&inner.eval(&c2.scale_pow2(x, -1)), 1)
        }),
        Direction::Up => std::sync::Arc::new(move |x| {
            c2.scale_pow2(&inner.eval(&c2.scale_pow2(x, 1)), -1)
        }),
    };
    let mut out = SampledFunction::new(carrier, g.grid.clone(), rule);
    out.depth_used = g.depth_used + 1;
    Ok(out)
}

/// A generalized-metric value: finite (with an f64 view, an exact view on
/// the ultrametric carrier, and the witness point attaining the maximum) or
/// +∞.
#[derive(Clone, Debug)]
pub enum GenMetric {
    Finite {
        value: f64,
        exact: Option<PowRatio>,
        witness: Option<String>,
    },
    Infinite {
        witness: String,
    },
}

impl GenMetric {
    pub fn zero() -> Self {
        GenMetric::Finite { value: 0.0, exact: None, witness: None }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            GenMetric::Finite { value, .. } => *value,
            GenMetric::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, GenMetric::Finite { .. })
    }

    pub fn witness(&self) -> Option<&str> {
        match self {
            GenMetric::Finite { witness, .. } => witness.as_deref(),
            GenMetric::Infinite { witness } => Some(witness),
        }
    }
}

/// d(g, h) over the report grid, real carrier.
pub fn gen_metric_real(
    g: &SampledFunction<RealCarrier>,
    h: &SampledFunction<RealCarrier>,
    phi: &ControlFamily,
    grid: &Grid<RealCarrier>,
) -> GenMetric {
    gen_metric_real_at(g, h, phi, &grid.carrier, &grid.points)
}

fn gen_metric_real_at(
    g: &SampledFunction<RealCarrier>,
    h: &SampledFunction<RealCarrier>,
    phi: &ControlFamily,
    c: &RealCarrier,
    points: &[GridPoint<RealCarrier>],
) -> GenMetric {
    let mut best = 0.0f64;
    let mut witness = None;
    for gp in points {
        let diff = c.dist(&g.eval(&gp.point), &h.eval(&gp.point));
        if diff == 0.0 {
            continue;
        }
        let phix = phi.phi_x2x_real(c, &gp.point);
        if phix == 0.0 {
            return GenMetric::Infinite { witness: gp.id.clone() };
        }
        let ratio = diff / phix;
        if ratio > best {
            best = ratio;
            witness = Some(gp.id.clone());
        }
    }
    GenMetric::Finite { value: best, exact: None, witness }
}

/// d(g, h) over the report grid, p-adic carrier, exact.
pub fn gen_metric_padic(
    g: &SampledFunction<PadicCarrier>,
    h: &SampledFunction<PadicCarrier>,
    phi: &ControlFamily,
    grid: &Grid<PadicCarrier>,
) -> GenMetric {
    gen_metric_padic_at(g, h, phi, &grid.carrier, &grid.points)
}

fn gen_metric_padic_at(
    g: &SampledFunction<PadicCarrier>,
    h: &SampledFunction<PadicCarrier>,
    phi: &ControlFamily,
    c: &PadicCarrier,
    points: &[GridPoint<PadicCarrier>],
) -> GenMetric {
    let mut best: Option<(PowRatio, String)> = None;
    for gp in points {
        let diff = c.sub(&g.eval(&gp.point), &h.eval(&gp.point));
        let dn = diff.norm_powsum();
        if dn.is_zero() {
            continue;
        }
        let phix = phi.phi_x2x_padic(c, &gp.point);
        if phix.is_zero() {
            return GenMetric::Infinite { witness: gp.id.clone() };
        }
        let ratio = PowRatio::new(dn, phix);
        let better = match &best {
            None => true,
            Some((cur, _)) => cur.cmp_value(&ratio) == std::cmp::Ordering::Less,
        };
        if better {
            best = Some((ratio, gp.id.clone()));
        }
    }
    match best {
        None => GenMetric::zero(),
        Some((ratio, w)) => GenMetric::Finite {
            value: ratio.to_f64(),
            exact: Some(ratio),
            witness: Some(w),
        },
    }
}

/// The report grid extended one level toward the points J references
/// (halves for downscale, doubles for upscale). Probe denominators are
/// measured on this set so the contraction comparison covers every point
/// the J-image samples.
fn extended_points<C: Carrier>(grid: &Grid<C>, dir: Direction) -> Vec<GridPoint<C>> {
    let c = &grid.carrier;
    let mut pts = grid.points.clone();
    let shift = match dir {
        Direction::Down => -1,
        Direction::Up => 1,
    };
    for gp in &grid.points {
        let point = c.scale_pow2(&gp.point, shift);
        if pts.iter().all(|q| q.point != point) {
            pts.push(GridPoint { id: format!("{}*2^{shift}", gp.id), point });
        }
    }
    pts
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricSample {
    pub n: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct FixedPointRun<C: Carrier> {
    pub extraction: ExtractionResult<C>,
    /// d(f, Jf).
    pub d_f_jf: GenMetric,
    /// d(f, Jf)/(1 − L), the a-priori radius; +∞ if L ≥ 1.
    pub apriori_radius: f64,
    pub apriori_exact: Option<PowRatio>,
    /// d(Jⁿf, A) per iteration (f64 view).
    pub metric_trace: Vec<MetricSample>,
    /// Declared constant is strictly below 1.
    pub contraction_declared_ok: bool,
    /// Trace ratios stay ≤ declared + slack after the burn-in iteration.
    pub decay_ok: bool,
    /// ‖f(x) − A(x)‖ ≤ radius·φ(x,2x,x) at every grid point.
    pub pointwise_ok: bool,
    /// A(x/2) = A(x)/2 (down) resp. A(2x) = 2A(x) (up) within tolerance.
    pub identity_ok: bool,
}

const DECAY_BURN_IN: usize = 2;

/// Diaz-Margolis iteration on the real carrier.
pub fn fixed_point_run_real(
    f: &SampledFunction<RealCarrier>,
    op: &ContractionOperator,
    phi: &ControlFamily,
    n_max: usize,
    tol: f64,
) -> Result<FixedPointRun<RealCarrier>> {
    let grid = f.grid.clone();
    let c = &f.carrier;
    let extraction = extract(f, op.direction, n_max, tol)?;
    let a_vals = extraction.limit_values();
    let phi_x2x: Vec<f64> = grid
        .points
        .iter()
        .map(|gp| phi.phi_x2x_real(c, &gp.point))
        .collect();

    let metric_of = |g_vals: &[Vec<f64>]| -> GenMetric {
        let mut best = 0.0f64;
        let mut witness = None;
        for (i, gp) in grid.points.iter().enumerate() {
            let diff = c.dist(&g_vals[i], &a_vals[i]);
            if diff == 0.0 {
                continue;
            }
            if phi_x2x[i] == 0.0 {
                return GenMetric::Infinite { witness: gp.id.clone() };
            }
            let r = diff / phi_x2x[i];
            if r > best {
                best = r;
                witness = Some(gp.id.clone());
            }
        }
        GenMetric::Finite { value: best, exact: None, witness }
    };

    // J^n f sampled at each grid point; a point that converged at step n*
    // holds its final iterate afterwards (its limit), so the sup keeps
    // measuring distance to the recorded fixed point rather than the
    // truncation noise beyond it.
    let steps = extraction.points.iter().map(|p| p.diff_trace.len()).max().unwrap_or(0);
    let mut metric_trace = Vec::new();
    for n in 0..=steps {
        let g_vals: Vec<Vec<f64>> = extraction
            .points
            .iter()
            .map(|p| iterate_at(f, op.direction, &p.point, (n.min(p.diff_trace.len())) as i64))
            .collect();
        metric_trace.push(MetricSample { n, value: metric_of(&g_vals).to_f64() });
    }

    let jf = apply_j(f, op.direction)?;
    let d_f_jf = gen_metric_real(f, &jf, phi, &grid);
    let contraction_declared_ok = op.declared < 1.0;
    let apriori_radius = if contraction_declared_ok {
        d_f_jf.to_f64() / (1.0 - op.declared)
    } else {
        f64::INFINITY
    };

    let decay_ok = decay_within(&metric_trace, op.declared, CERT_SLACK);
    let pointwise_ok = extraction.points.iter().enumerate().all(|(i, p)| {
        let e = c.norm_f64(&p.error);
        e <= apriori_radius * phi_x2x[i] + CERT_SLACK
    });
    let identity_ok = identity_check_real(f, op.direction, &extraction, n_max, tol)?;

    Ok(FixedPointRun {
        extraction,
        d_f_jf,
        apriori_radius,
        apriori_exact: None,
        metric_trace,
        contraction_declared_ok,
        decay_ok,
        pointwise_ok,
        identity_ok,
    })
}

/// Diaz-Margolis iteration on the p-adic carrier; the a-priori bound and
/// pointwise comparisons are exact.
pub fn fixed_point_run_padic(
    f: &SampledFunction<PadicCarrier>,
    op: &ContractionOperator,
    phi: &ControlFamily,
    n_max: usize,
    floor: i64,
) -> Result<FixedPointRun<PadicCarrier>> {
    let grid = f.grid.clone();
    let c = &f.carrier;
    let extraction = extract(f, op.direction, n_max, floor)?;
    let a_vals = extraction.limit_values();
    let phi_x2x: Vec<PowSum> = grid
        .points
        .iter()
        .map(|gp| phi.phi_x2x_padic(c, &gp.point))
        .collect();

    let metric_of = |g_vals: &[crate::padic::PAdicNumber]| -> GenMetric {
        let mut best: Option<(PowRatio, String)> = None;
        for (i, gp) in grid.points.iter().enumerate() {
            let dn = c.sub(&g_vals[i], &a_vals[i]).norm_powsum();
            if dn.is_zero() {
                continue;
            }
            if phi_x2x[i].is_zero() {
                return GenMetric::Infinite { witness: gp.id.clone() };
            }
            let ratio = PowRatio::new(dn, phi_x2x[i].clone());
            let better = match &best {
                None => true,
                Some((cur, _)) => cur.cmp_value(&ratio) == std::cmp::Ordering::Less,
            };
            if better {
                best = Some((ratio, gp.id.clone()));
            }
        }
        match best {
            None => GenMetric::zero(),
            Some((r, w)) => GenMetric::Finite {
                value: r.to_f64(),
                exact: Some(r),
                witness: Some(w),
            },
        }
    };

    let steps = extraction.points.iter().map(|p| p.diff_trace.len()).max().unwrap_or(0);
    let mut metric_trace = Vec::new();
    for n in 0..=steps {
        let g_vals: Vec<crate::padic::PAdicNumber> = extraction
            .points
            .iter()
            .map(|p| iterate_at(f, op.direction, &p.point, (n.min(p.diff_trace.len())) as i64))
            .collect();
        metric_trace.push(MetricSample { n, value: metric_of(&g_vals).to_f64() });
    }

    let jf = apply_j(f, op.direction)?;
    let d_f_jf = gen_metric_padic(f, &jf, phi, &grid);
    let contraction_declared_ok = op.declared < 1.0;

    // Exact radius d(f,Jf)/(1−L) when both the metric and the constant have
    // exact forms.
    let apriori_exact = match (&d_f_jf, &op.declared_exact) {
        (GenMetric::Finite { exact: Some(r), .. }, Some(l)) if contraction_declared_ok => {
            let one_minus_l = PowSum::one(c.prime).sub(l);
            if one_minus_l.sign() == std::cmp::Ordering::Greater {
                Some(PowRatio::new(r.num().clone(), r.den().mul(&one_minus_l)))
            } else {
                None
            }
        }
        _ => None,
    };
    let apriori_radius = if contraction_declared_ok {
        d_f_jf.to_f64() / (1.0 - op.declared)
    } else {
        f64::INFINITY
    };

    let decay_ok = decay_within(&metric_trace, op.declared, CERT_SLACK);
    let pointwise_ok = match &apriori_exact {
        Some(radius) => extraction.points.iter().enumerate().all(|(i, p)| {
            let e = p.limit.sub(&f.eval(&p.point)).map(|d| d.norm_powsum());
            match e {
                Ok(e) => {
                    // e ≤ radius·φx  ⟺  e·den ≤ num·φx
                    e.mul(radius.den()).le(&radius.num().mul(&phi_x2x[i]))
                }
                Err(_) => false,
            }
        }),
        None => extraction.points.iter().enumerate().all(|(i, p)| {
            c.norm_f64(&p.error) <= apriori_radius * phi_x2x[i].to_f64() + CERT_SLACK
        }),
    };
    let identity_ok = identity_check_padic(f, op.direction, &extraction, n_max, floor)?;

    Ok(FixedPointRun {
        extraction,
        d_f_jf,
        apriori_radius,
        apriori_exact,
        metric_trace,
        contraction_declared_ok,
        decay_ok,
        pointwise_ok,
        identity_ok,
    })
}

/// Trace ratios d(Jⁿ⁺¹f, A)/d(Jⁿf, A) ≤ declared + slack after burn-in.
fn decay_within(trace: &[MetricSample], declared: f64, slack: f64) -> bool {
    for w in trace.windows(2) {
        if w[0].n < DECAY_BURN_IN {
            continue;
        }
        let (prev, next) = (w[0].value, w[1].value);
        if !prev.is_finite() || !next.is_finite() {
            return false;
        }
        if prev <= f64::MIN_POSITIVE {
            continue; // converged exactly; nothing left to contract
        }
        if next / prev > declared + slack {
            return false;
        }
    }
    true
}

fn identity_check_real(
    f: &SampledFunction<RealCarrier>,
    dir: Direction,
    extraction: &ExtractionResult<RealCarrier>,
    n_max: usize,
    tol: f64,
) -> Result<bool> {
    let c = &f.carrier;
    for p in &extraction.points {
        // Verify the fixed-point equation at the companion point.
        let (companion, expected) = match dir {
            Direction::Down => (c.halve(&p.point), c.halve(&p.limit)),
            Direction::Up => (c.double(&p.point), c.double(&p.limit)),
        };
        let mut limit = f.eval(&companion);
        for n in 1..=n_max {
            let cur = iterate_at(f, dir, &companion, n as i64);
            let d = c.dist(&cur, &limit);
            limit = cur;
            if d == 0.0 {
                break;
            }
        }
        if c.dist(&limit, &expected) > tol.max(1e-9) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn identity_check_padic(
    f: &SampledFunction<PadicCarrier>,
    dir: Direction,
    extraction: &ExtractionResult<PadicCarrier>,
    n_max: usize,
    floor: i64,
) -> Result<bool> {
    let c = &f.carrier;
    for p in &extraction.points {
        let (companion, expected) = match dir {
            Direction::Down => (c.halve(&p.point), c.halve(&p.limit)),
            Direction::Up => (c.double(&p.point), c.double(&p.limit)),
        };
        let mut limit = f.eval(&companion);
        let mut diffs = Vec::new();
        for n in 1..=n_max {
            let cur = iterate_at(f, dir, &companion, n as i64);
            diffs.push(c.dist(&cur, &limit));
            limit = cur;
            if c.diffs_converged(&diffs, floor) {
                break;
            }
        }
        if !c.dist(&limit, &expected).at_most_scale(floor) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeOutcome {
    pub pair: String,
    pub d_gh: f64,
    pub d_jgjh: f64,
    /// None when d(g,h) is zero or infinite (undefined ratio — skipped).
    pub ratio: Option<f64>,
    /// Exact verdict d(Jg,Jh) ≤ declared·d(g,h) on the ultrametric carrier.
    pub exact_within: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub declared: f64,
    pub max_ratio: Option<f64>,
    pub pass: bool,
    pub probes: Vec<ProbeOutcome>,
}

/// Measure d(Jg, Jh)/d(g, h) on probe pairs against the declared constant.
pub fn lipschitz_probe_real(
    op: &ContractionOperator,
    phi: &ControlFamily,
    probes: &[(String, SampledFunction<RealCarrier>, SampledFunction<RealCarrier>)],
) -> Result<LipschitzReport> {
    let mut outcomes = Vec::new();
    let mut max_ratio: Option<f64> = None;
    for (name, g, h) in probes {
        let grid = g.grid.clone();
        let wide = extended_points(&grid, op.direction);
        let d0 = gen_metric_real_at(g, h, phi, &grid.carrier, &wide);
        let jg = apply_j(g, op.direction)?;
        let jh = apply_j(h, op.direction)?;
        let d1 = gen_metric_real(&jg, &jh, phi, &grid);
        let ratio = match (&d0, &d1) {
            (GenMetric::Finite { value: a, .. }, GenMetric::Finite { value: b, .. })
                if *a > 0.0 =>
            {
                Some(b / a)
            }
            _ => None,
        };
        if let Some(r) = ratio {
            max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
        }
        outcomes.push(ProbeOutcome {
            pair: name.clone(),
            d_gh: d0.to_f64(),
            d_jgjh: d1.to_f64(),
            ratio,
            exact_within: None,
        });
    }
    let pass = max_ratio.is_none_or(|m| m <= op.declared + CERT_SLACK);
    Ok(LipschitzReport { declared: op.declared, max_ratio, pass, probes: outcomes })
}

pub fn lipschitz_probe_padic(
    op: &ContractionOperator,
    phi: &ControlFamily,
    probes: &[(String, SampledFunction<PadicCarrier>, SampledFunction<PadicCarrier>)],
) -> Result<LipschitzReport> {
    let mut outcomes = Vec::new();
    let mut max_ratio: Option<f64> = None;
    let mut all_exact = true;
    for (name, g, h) in probes {
        let grid = g.grid.clone();
        let wide = extended_points(&grid, op.direction);
        let d0 = gen_metric_padic_at(g, h, phi, &grid.carrier, &wide);
        let jg = apply_j(g, op.direction)?;
        let jh = apply_j(h, op.direction)?;
        let d1 = gen_metric_padic(&jg, &jh, phi, &grid);
        let (ratio, exact_within) = match (&d0, &d1) {
            (
                GenMetric::Finite { value: a, exact: ea, .. },
                GenMetric::Finite { value: b, exact: eb, .. },
            ) if *a > 0.0 => {
                let exact = match (ea, eb, &op.declared_exact) {
                    (Some(ra), Some(rb), Some(alpha)) => {
                        // d1 ≤ α·d0 ⟺ num1·den0 ≤ α·num0·den1
                        Some(
                            rb.num()
                                .mul(ra.den())
                                .le(&alpha.mul(&ra.num().mul(rb.den()))),
                        )
                    }
                    _ => None,
                };
                (Some(b / a), exact)
            }
            _ => (None, None),
        };
        if let Some(r) = ratio {
            max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
        }
        if exact_within == Some(false) {
            all_exact = false;
        }
        outcomes.push(ProbeOutcome {
            pair: name.clone(),
            d_gh: d0.to_f64(),
            d_jgjh: d1.to_f64(),
            ratio,
            exact_within,
        });
    }
    let float_pass = max_ratio.is_none_or(|m| m <= op.declared + CERT_SLACK);
    Ok(LipschitzReport {
        declared: op.declared,
        max_ratio,
        pass: float_pass && all_exact,
        probes: outcomes,
    })
}

/// Declared contraction constant induced by a control family of total
/// degree `deg`: on the real carrier J contracts at 2^(1−deg) downscale and
/// 2^(deg−1) upscale; on Q_2 the exponents flip because |2| = 1/2.
pub fn induced_constant_real(family: &ControlFamily, dir: Direction) -> f64 {
    let deg = num_traits::ToPrimitive::to_f64(&family.degree()).unwrap();
    match dir {
        Direction::Down => 2f64.powf(1.0 - deg),
        Direction::Up => 2f64.powf(deg - 1.0),
    }
}

pub fn induced_constant_padic(
    carrier: &PadicCarrier,
    family: &ControlFamily,
    dir: Direction,
) -> (f64, PowSum) {
    let deg = family.degree();
    let v2: i64 = if carrier.prime == 2 { 1 } else { 0 };
    // α = |2|^(1−deg) downscale, |2|^(deg−1) upscale; |2| = p^(−v2).
    let exp = match dir {
        Direction::Down => (deg - 1) * v2,
        Direction::Up => (Ratio::from_integer(1i64) - deg) * v2,
    };
    let exact = PowSum::power(carrier.prime, exp);
    (exact.to_f64(), exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::Grid;
    use crate::funceq::{perturbed_padic, perturbed_real, RealPerturbation, PadicPerturbation};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use std::sync::Arc;

    fn one() -> BigRational {
        BigRational::from_integer(BigInt::from(1))
    }

    fn real_grid() -> (RealCarrier, Arc<Grid<RealCarrier>>) {
        let c = RealCarrier::new(1);
        let seeds = vec![
            ("1".into(), c.scalar(1.0)),
            ("2".into(), c.scalar(2.0)),
            ("3".into(), c.scalar(3.0)),
            ("-1".into(), c.scalar(-1.0)),
        ];
        let grid = Grid::from_seeds(c.clone(), seeds, 1, 100);
        (c, grid)
    }

    #[test]
    fn gen_metric_identity_and_unit() {
        let (c, grid) = real_grid();
        let phi = ControlFamily::PowerSum { theta: one(), r: Ratio::new(1, 2) };
        let f = perturbed_real(c.clone(), grid.clone(), 1.0, RealPerturbation::None);
        let d = gen_metric_real(&f, &f.clone(), &phi, &grid);
        assert_eq!(d.to_f64(), 0.0);

        // h = f + φ(·,2·,·)·u: the ratio is identically 1.
        let c2 = c.clone();
        let f2 = f.clone();
        let phi2 = phi.clone();
        let rule: crate::funceq::EvalRule<RealCarrier> = Arc::new(move |x| {
            let base = f2.eval(x);
            let amp = phi2.phi_x2x_real(&c2, x);
            vec![base[0] + amp]
        });
        let h = SampledFunction::new(c.clone(), grid.clone(), rule);
        let d = gen_metric_real(&f, &h, &phi, &grid);
        assert!((d.to_f64() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gen_metric_constant_ratio_shape() {
        // g − h = ε‖x‖^r·u with φ = PowerSum(θ, r): value ε/(θ(2+2^r)).
        let (c, grid) = real_grid();
        let theta = BigRational::new(BigInt::from(1), BigInt::from(2));
        let (eps, r) = (0.125f64, 0.5f64);
        let phi = ControlFamily::PowerSum { theta, r: Ratio::new(1, 2) };
        let f = perturbed_real(c.clone(), grid.clone(), 1.0, RealPerturbation::None);
        let g = perturbed_real(c.clone(), grid.clone(), 1.0, RealPerturbation::Power { eps, r });
        let d = gen_metric_real(&f, &g, &phi, &grid);
        let expect = eps / (0.5 * (2.0 + 2f64.powf(r)));
        assert!((d.to_f64() - expect).abs() <= 1e-12);
    }

    #[test]
    fn gen_metric_infinite_when_control_vanishes() {
        let (c, grid) = real_grid();
        let phi = ControlFamily::Constant { delta: BigRational::zero() };
        use num_traits::Zero;
        let f = perturbed_real(c.clone(), grid.clone(), 1.0, RealPerturbation::None);
        let g = perturbed_real(c, grid.clone(), 1.0, RealPerturbation::Offset { eps: 0.5 });
        let d = gen_metric_real(&f, &g, &phi, &grid);
        assert!(!d.is_finite());
        assert!(d.witness().is_some());
    }

    #[test]
    fn apply_j_examples() {
        let (c, grid) = real_grid();
        // Additive maps are fixed points of J.
        let f = perturbed_real(c.clone(), grid.clone(), 2.5, RealPerturbation::None);
        let jf = apply_j(&f, Direction::Down).unwrap();
        for gp in &grid.points {
            assert_eq!(f.eval(&gp.point), jf.eval(&gp.point));
        }
        // g(x) = x² downscale: (Jg)(x) = 2(x/2)² = x²/2.
        let rule: crate::funceq::EvalRule<RealCarrier> =
            Arc::new(|x: &Vec<f64>| vec![x[0] * x[0]]);
        let g = SampledFunction::new(c.clone(), grid.clone(), rule);
        let jg = apply_j(&g, Direction::Down).unwrap();
        assert_eq!(jg.eval(&c.scalar(3.0))[0], 4.5);
        // Constant c downscale: Jg ≡ 2c.
        let rule: crate::funceq::EvalRule<RealCarrier> =
            Arc::new(|_: &Vec<f64>| vec![0.75]);
        let h = SampledFunction::new(c.clone(), grid.clone(), rule);
        let jh = apply_j(&h, Direction::Down).unwrap();
        assert_eq!(jh.eval(&c.scalar(1.0))[0], 1.5);
    }

    #[test]
    fn additive_fixed_point_run_is_trivial() {
        let (_c, grid) = real_grid();
        let phi = ControlFamily::PowerSum { theta: one(), r: Ratio::new(1, 2) };
        let f = perturbed_real(grid.carrier.clone(), grid.clone(), 1.0, RealPerturbation::None);
        let op = ContractionOperator {
            direction: Direction::Up,
            declared: 2f64.powf(-0.5),
            declared_exact: None,
        };
        let run = fixed_point_run_real(&f, &op, &phi, 40, 1e-10).unwrap();
        assert_eq!(run.d_f_jf.to_f64(), 0.0);
        assert_eq!(run.apriori_radius, 0.0);
        assert!(run.decay_ok);
        assert!(run.pointwise_ok);
        assert!(run.identity_ok);
    }

    #[test]
    fn upscale_run_matches_closed_form_metric() {
        // f = x + ε‖x‖^r·u, 0 < r < 1, upscale, φ = PowerSum(θ, r):
        // d(f, Jf) = ε(1 − 2^(r−1))/(θ(2 + 2^r)).
        let (_c, grid) = real_grid();
        let (eps, r) = (0.0625f64, 0.5f64);
        let theta = BigRational::new(BigInt::from(1), BigInt::from(4));
        let phi = ControlFamily::PowerSum { theta, r: Ratio::new(1, 2) };
        let f = perturbed_real(
            grid.carrier.clone(),
            grid.clone(),
            1.0,
            RealPerturbation::Power { eps, r },
        );
        let declared = 2f64.powf(r - 1.0);
        let op = ContractionOperator { direction: Direction::Up, declared, declared_exact: None };
        let run = fixed_point_run_real(&f, &op, &phi, 90, 1e-13).unwrap();
        let expect = eps * (1.0 - 2f64.powf(r - 1.0)) / (0.25 * (2.0 + 2f64.powf(r)));
        assert!((run.d_f_jf.to_f64() - expect).abs() <= 1e-12);
        assert!(run.contraction_declared_ok);
        assert!(run.decay_ok);
        assert!(run.pointwise_ok);
        assert!(run.identity_ok);
        // The extracted fixed point is the additive part.
        for p in &run.extraction.points {
            assert!((p.limit[0] - p.point[0]).abs() <= 1e-9);
        }
    }

    #[test]
    fn lipschitz_probe_hits_declared_constant() {
        let (c, grid) = real_grid();
        let r = 0.5f64;
        let phi = ControlFamily::PowerSum { theta: one(), r: Ratio::new(1, 2) };
        let f = perturbed_real(c.clone(), grid.clone(), 1.0, RealPerturbation::None);
        let c2 = c.clone();
        let f2 = f.clone();
        let phi2 = phi.clone();
        let rule: crate::funceq::EvalRule<RealCarrier> = Arc::new(move |x| {
            let base = f2.eval(x);
            vec![base[0] + phi2.phi_x2x_real(&c2, x)]
        });
        let g = SampledFunction::new(c.clone(), grid.clone(), rule);
        let op = ContractionOperator {
            direction: Direction::Up,
            declared: 2f64.powf(r - 1.0),
            declared_exact: None,
        };
        let report =
            lipschitz_probe_real(&op, &phi, &[("phi-shift".into(), g, f.clone())]).unwrap();
        assert!(report.pass, "{report:?}");
        let measured = report.max_ratio.unwrap();
        assert!((measured - op.declared).abs() <= 1e-12);
        // Identical pair is skipped.
        let report2 =
            lipschitz_probe_real(&op, &phi, &[("same".into(), f.clone(), f)]).unwrap();
        assert!(report2.max_ratio.is_none());
        assert!(report2.pass);
    }

    #[test]
    fn padic_fixed_point_run_exact_bounds() {
        let pc = PadicCarrier::new(2, 48);
        let seeds: Vec<(String, crate::padic::PAdicNumber)> =
            [(1i64, 1i64), (3, 1), (-1, 1), (1, 3)]
                .iter()
                .map(|&(n, d)| (format!("{n}/{d}"), pc.from_rational(n, d).unwrap()))
                .collect();
        let grid = Grid::from_seeds(pc.clone(), seeds, 1, 40);
        let f = perturbed_padic(
            pc.clone(),
            grid.clone(),
            one(),
            PadicPerturbation::ValuationShift {
                c: one(),
                m: 6,
                r: Ratio::new(1, 2),
            },
        )
        .unwrap();
        let phi = ControlFamily::PowerSum {
            theta: BigRational::new(BigInt::from(1), BigInt::from(32)),
            r: Ratio::new(1, 2),
        };
        let (df, dx) = induced_constant_padic(&pc, &phi, Direction::Down);
        assert!((df - 2f64.powf(-0.5)).abs() < 1e-15);
        let op = ContractionOperator {
            direction: Direction::Down,
            declared: df,
            declared_exact: Some(dx),
        };
        let run = fixed_point_run_padic(&f, &op, &phi, 34, 20).unwrap();
        assert!(run.contraction_declared_ok);
        assert!(run.extraction.all_converged);
        assert!(run.apriori_exact.is_some());
        assert!(run.pointwise_ok, "exact a-priori bound should dominate errors");
        assert!(run.decay_ok);
        assert!(run.identity_ok);
        // Theorem hypothesis route: d(f,Jf) ≤ α/|2| — exact comparison.
        if let GenMetric::Finite { exact: Some(rr), .. } = &run.d_f_jf {
            let alpha_over_abs2 = PowSum::power(2, Ratio::new(-1, 2)).shift(Ratio::new(1, 1));
            assert!(rr.le_sum(&alpha_over_abs2));
        } else {
            panic!("expected an exact finite metric value");
        }
    }

    #[test]
    fn padic_lipschitz_probe_exact() {
        let pc = PadicCarrier::new(2, 48);
        let seeds: Vec<(String, crate::padic::PAdicNumber)> = [(1i64, 1i64), (3, 1), (5, 1)]
            .iter()
            .map(|&(n, d)| (format!("{n}/{d}"), pc.from_rational(n, d).unwrap()))
            .collect();
        let grid = Grid::from_seeds(pc.clone(), seeds, 1, 40);
        let phi = ControlFamily::PowerSum { theta: one(), r: Ratio::new(1, 2) };
        let f = perturbed_padic(pc.clone(), grid.clone(), one(), PadicPerturbation::None).unwrap();
        let g = perturbed_padic(
            pc.clone(),
            grid.clone(),
            one(),
            PadicPerturbation::ValuationShift { c: one(), m: 4, r: Ratio::new(1, 2) },
        )
        .unwrap();
        let (df, dx) = induced_constant_padic(&pc, &phi, Direction::Down);
        let op = ContractionOperator {
            direction: Direction::Down,
            declared: df,
            declared_exact: Some(dx),
        };
        let report =
            lipschitz_probe_padic(&op, &phi, &[("val-shift".into(), g, f)]).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.probes[0].exact_within == Some(true));
    }
}
