//! Theorem-indexed certificate checkers.
//!
//! Given the function under test, the extracted additive map A, a control
//! function and an ambient setting, each checker re-verifies the theorem's
//! hypotheses on sampled triples and then tests the stated error bound at
//! every report-grid point (and, in the graded settings, at every t of a
//! log-spaced grid). A certificate whose hypotheses fail is marked
//! `HypothesisViolated` — its inequality is still evaluated for
//! information, but it can never count as a pass.
//!
//! Ultrametric certificates compare exact power sums; the floating settings
//! use a one-sided slack of 1e−9.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::carrier::{Carrier, Grid, PadicCarrier, RealCarrier};
use crate::direct::{bound_pounds_down, bound_pounds_up, pounds_stabilized, pounds_terms, Direction};
use crate::error::{Error, Result};
use crate::exact::{exp_int, PowRatio, PowSum};
use crate::funceq::{ControlFamily, SampledFunction, Triple};
use crate::padic::PAdicNumber;
use crate::spaces::{induced_value, rn_axioms_check, FuzzyNorm, SettingKind, TNorm, CERT_SLACK, UNIT_TOL};

/// Witnesses below this t are limit artifacts (both sides tend to 0) and
/// are excluded from min-margin accounting.
pub const T_MIN_WITNESS: f64 = 1e-6;

/// Stable theorem identifiers: setting, method and extraction direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TheoremId {
    NaFpDown,
    NaFpUp,
    NaDDown,
    NaDUp,
    RnDDown,
    RnDUp,
    RnFpDown,
    RnFpUp,
    FzDDown,
    FzDUp,
    FzFpDown,
    FzFpUp,
    ClRassias,
}

pub const ALL_THEOREMS: [TheoremId; 13] = [
    TheoremId::NaFpDown,
    TheoremId::NaFpUp,
    TheoremId::NaDDown,
    TheoremId::NaDUp,
    TheoremId::RnDDown,
    TheoremId::RnDUp,
    TheoremId::RnFpDown,
    TheoremId::RnFpUp,
    TheoremId::FzDDown,
    TheoremId::FzDUp,
    TheoremId::FzFpDown,
    TheoremId::FzFpUp,
    TheoremId::ClRassias,
];

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::NaFpDown => "NA-FP-down",
            TheoremId::NaFpUp => "NA-FP-up",
            TheoremId::NaDDown => "NA-D-down",
            TheoremId::NaDUp => "NA-D-up",
            TheoremId::RnDDown => "RN-D-down",
            TheoremId::RnDUp => "RN-D-up",
            TheoremId::RnFpDown => "RN-FP-down",
            TheoremId::RnFpUp => "RN-FP-up",
            TheoremId::FzDDown => "FZ-D-down",
            TheoremId::FzDUp => "FZ-D-up",
            TheoremId::FzFpDown => "FZ-FP-down",
            TheoremId::FzFpUp => "FZ-FP-up",
            TheoremId::ClRassias => "CL-RASSIAS",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_THEOREMS
            .iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown theorem id `{s}`")))
    }

    pub fn setting(&self) -> SettingKind {
        match self {
            TheoremId::NaFpDown | TheoremId::NaFpUp | TheoremId::NaDDown | TheoremId::NaDUp => {
                SettingKind::NonArchimedean
            }
            TheoremId::RnDDown | TheoremId::RnDUp | TheoremId::RnFpDown | TheoremId::RnFpUp => {
                SettingKind::Random
            }
            TheoremId::FzDDown | TheoremId::FzDUp | TheoremId::FzFpDown | TheoremId::FzFpUp => {
                SettingKind::Fuzzy
            }
            TheoremId::ClRassias => SettingKind::Classical,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            TheoremId::NaFpDown
            | TheoremId::NaDDown
            | TheoremId::RnDDown
            | TheoremId::RnFpDown
            | TheoremId::FzDDown
            | TheoremId::FzFpDown => Direction::Down,
            // The non-Archimedean geometry flips: in Q_2 the FP/D "up"
            // theorems pair with upscale extraction just like the others.
            _ => Direction::Up,
        }
    }

    pub fn is_fixed_point(&self) -> bool {
        matches!(
            self,
            TheoremId::NaFpDown
                | TheoremId::NaFpUp
                | TheoremId::RnFpDown
                | TheoremId::RnFpUp
                | TheoremId::FzFpDown
                | TheoremId::FzFpUp
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertStatus {
    Pass,
    Fail,
    HypothesisViolated,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl HypothesisCheck {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        HypothesisCheck { name: name.to_string(), pass, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointMargin {
    pub id: String,
    pub error: f64,
    pub bound: f64,
    pub margin: f64,
    /// Exact verdict on the ultrametric carrier; `None` in float settings.
    pub exact_pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub theorem: String,
    pub setting: &'static str,
    pub status: CertStatus,
    pub pass: bool,
    pub min_margin: f64,
    pub witness: Option<String>,
    pub hypothesis_checks: Vec<HypothesisCheck>,
    pub points: Vec<PointMargin>,
    pub corollary: Option<Box<Certificate>>,
    pub notes: Vec<String>,
}

impl Certificate {
    fn assemble(
        theorem: String,
        setting: SettingKind,
        hyps: Vec<HypothesisCheck>,
        points: Vec<PointMargin>,
        exact_mode: bool,
        notes: Vec<String>,
    ) -> Self {
        let hyp_ok = hyps.iter().all(|h| h.pass);
        let (min_margin, witness) = points
            .iter()
            .map(|p| (p.margin, p.id.clone()))
            .fold((f64::INFINITY, None), |(m, w), (margin, id)| {
                if margin < m {
                    (margin, Some(id))
                } else {
                    (m, w)
                }
            });
        let min_margin = if points.is_empty() { 0.0 } else { min_margin };
        let ineq_ok = if exact_mode {
            points.iter().all(|p| p.exact_pass == Some(true))
        } else {
            min_margin >= -CERT_SLACK
        };
        let status = if !hyp_ok {
            CertStatus::HypothesisViolated
        } else if ineq_ok {
            CertStatus::Pass
        } else {
            CertStatus::Fail
        };
        Certificate {
            theorem,
            setting: setting.as_str(),
            status,
            pass: status == CertStatus::Pass,
            min_margin,
            witness,
            hypothesis_checks: hyps,
            points,
            corollary: None,
            notes,
        }
    }
}

// ---------------------------------------------------------------------------
// Non-Archimedean instances
// ---------------------------------------------------------------------------

pub struct PadicInstance<'a> {
    pub carrier: &'a PadicCarrier,
    pub grid: &'a Grid<PadicCarrier>,
    pub f: &'a SampledFunction<PadicCarrier>,
    pub a_vals: &'a [PAdicNumber],
    pub control: &'a ControlFamily,
    pub triples: &'a [Triple<PadicCarrier>],
    /// Contraction constant α (exact) for the fixed-point theorems.
    pub alpha: PowSum,
    /// Truncation depth for the running-max bound £.
    pub n_terms: usize,
}

fn padic_errors(inst: &PadicInstance) -> Vec<PowSum> {
    inst.grid
        .points
        .iter()
        .zip(inst.a_vals)
        .map(|(gp, a)| inst.f.carrier.sub(&inst.f.eval(&gp.point), a).norm_powsum())
        .collect()
}

fn padic_defect_check(inst: &PadicInstance) -> HypothesisCheck {
    let c = inst.carrier;
    for t in inst.triples {
        let d = inst.f.defect(&t.x, &t.y, &t.z).norm_powsum();
        let v = inst.control.eval_padic(c, &t.x, &t.y, &t.z);
        if !d.le(&v) {
            return HypothesisCheck::new(
                "defect-bound",
                false,
                format!("‖Df‖ > φ at {} ({} vs {})", t.id, d.to_f64(), v.to_f64()),
            );
        }
    }
    HypothesisCheck::new(
        "defect-bound",
        true,
        format!("‖Df‖ ≤ φ on {} sampled triples (exact)", inst.triples.len()),
    )
}

fn padic_scaling_check(inst: &PadicInstance, dir: Direction) -> HypothesisCheck {
    let c = inst.carrier;
    let abs2 = c.abs_two();
    for t in inst.triples {
        let full = inst.control.eval_padic(c, &t.x, &t.y, &t.z);
        let half = inst.control.eval_padic(
            c,
            &t.x.halve(),
            &t.y.halve(),
            &t.z.halve(),
        );
        let ok = match dir {
            // φ(x/2,y/2,z/2) ≤ α·φ(x,y,z)/|2|  ⟺  |2|·φ_half ≤ α·φ
            Direction::Down => half.mul(&abs2).le(&inst.alpha.mul(&full)),
            // φ(x,y,z) ≤ |2|·α·φ(x/2,y/2,z/2)
            Direction::Up => full.le(&inst.alpha.mul(&abs2).mul(&half)),
        };
        if !ok {
            return HypothesisCheck::new(
                "control-scaling",
                false,
                format!("α-scaling fails at {}", t.id),
            );
        }
    }
    HypothesisCheck::new(
        "control-scaling",
        true,
        format!(
            "α-scaling holds on {} sampled triples (exact, α = {:.6})",
            inst.triples.len(),
            inst.alpha.to_f64()
        ),
    )
}

fn padic_vanishing_check(inst: &PadicInstance, dir: Direction) -> HypothesisCheck {
    // |2|^n ζ(x/2^n, y/2^n, z/2^n) → 0 (down) resp. ζ(2^n·)/|2|^n → 0 (up),
    // verified as a strictly decreasing tail over the sampled depth.
    let c = inst.carrier;
    let depth = 12i64;
    let sample = inst.triples.iter().take(8);
    for t in sample {
        let mut values = Vec::new();
        for n in 0..depth {
            let k = match dir {
                Direction::Down => -n,
                Direction::Up => n,
            };
            let v2: i64 = if c.prime == 2 { 1 } else { 0 };
            let shift = match dir {
                Direction::Down => Ratio::from_integer(-n * v2),
                Direction::Up => Ratio::from_integer(n * v2),
            };
            let val = inst
                .control
                .eval_padic(c, &t.x.scale_pow2(k), &t.y.scale_pow2(k), &t.z.scale_pow2(k))
                .shift(shift);
            values.push(val);
        }
        if values[0].is_zero() {
            continue;
        }
        let tail_decreasing = values
            .windows(2)
            .skip(depth as usize - 5)
            .all(|w| w[1].cmp_value(&w[0]) == std::cmp::Ordering::Less);
        let shrunk = values[depth as usize - 1].cmp_value(&values[0]) == std::cmp::Ordering::Less;
        if !(tail_decreasing && shrunk) {
            return HypothesisCheck::new(
                "vanishing",
                false,
                format!("rescaled control does not vanish along the orbit of {}", t.id),
            );
        }
    }
    HypothesisCheck::new(
        "vanishing",
        true,
        "rescaled control decreases to 0 along sampled orbits".into(),
    )
}

fn padic_margin(id: &str, error: &PowSum, bound: &PowRatio) -> PointMargin {
    let e = error.to_f64();
    let b = bound.to_f64();
    // e ≤ num/den  ⟺  e·den ≤ num
    let ok = error.mul(bound.den()).le(bound.num());
    PointMargin {
        id: id.to_string(),
        error: e,
        bound: b,
        margin: b - e,
        exact_pass: Some(ok),
    }
}

/// Fixed-point certificates in the non-Archimedean setting:
/// down: ‖f(x)−A(x)‖ ≤ α·φ(x,2x,x)/(|2|−|2|α);
/// up:   ‖f(x)−A(x)‖ ≤ φ(x,2x,x)/(|2|−|2|α).
pub fn check_nonarch_fp(inst: &PadicInstance, dir: Direction) -> Certificate {
    let c = inst.carrier;
    let one = PowSum::one(c.prime);
    let alpha_lt_one = one.sub(&inst.alpha).sign() == std::cmp::Ordering::Greater;
    let mut hyps = vec![HypothesisCheck::new(
        "alpha-range",
        alpha_lt_one,
        format!("α = {:.6} must be < 1", inst.alpha.to_f64()),
    )];
    hyps.push(padic_scaling_check(inst, dir));
    hyps.push(padic_defect_check(inst));

    let errors = padic_errors(inst);
    let mut points = Vec::new();
    if alpha_lt_one {
        // |2|(1 − α) > 0.
        let den = c.abs_two().mul(&one.sub(&inst.alpha));
        for ((gp, _), err) in inst.grid.points.iter().zip(inst.a_vals).zip(&errors) {
            let phix = inst.control.phi_x2x_padic(c, &gp.point);
            let num = match dir {
                Direction::Down => inst.alpha.mul(&phix),
                Direction::Up => phix,
            };
            let bound = PowRatio::new(num, den.clone());
            points.push(padic_margin(&gp.id, err, &bound));
        }
    }

    let mut cert = Certificate::assemble(
        TheoremId::table_id(dir, true).to_string(),
        SettingKind::NonArchimedean,
        hyps,
        points,
        true,
        Vec::new(),
    );
    cert.corollary = nonarch_fp_corollary(inst, dir, &errors).map(Box::new);
    cert
}

impl TheoremId {
    fn table_id(dir: Direction, fixed_point: bool) -> &'static str {
        match (fixed_point, dir) {
            (true, Direction::Down) => "NA-FP-down",
            (true, Direction::Up) => "NA-FP-up",
            (false, Direction::Down) => "NA-D-down",
            (false, Direction::Up) => "NA-D-up",
        }
    }
}

/// Power-sum corollaries of the fixed-point theorems:
/// down (0<r<1, α=|2|^(1−r)): ‖f−A‖ ≤ |2|θ(2+|2|^r)‖x‖^r/(|2|^(r+1)−|2|²);
/// up   (r>1,  α=|2|^(r−1)):  ‖f−A‖ ≤ θ(2+|2|^r)‖x‖^r/(|2|−|2|^r).
fn nonarch_fp_corollary(
    inst: &PadicInstance,
    dir: Direction,
    errors: &[PowSum],
) -> Option<Certificate> {
    let ControlFamily::PowerSum { theta, r } = inst.control else {
        return None;
    };
    let c = inst.carrier;
    let p = c.prime;
    let v2: i64 = if p == 2 { 1 } else { 0 };
    let rf = r.to_f64().unwrap();
    let range_ok = match dir {
        Direction::Down => *r > exp_int(0) && *r < exp_int(1),
        Direction::Up => *r > exp_int(1),
    };
    let range_name = match dir {
        Direction::Down => "0 < r < 1",
        Direction::Up => "r > 1",
    };
    let mut hyps = vec![HypothesisCheck::new(
        "exponent-range",
        range_ok,
        format!("corollary needs {range_name}, got r = {rf}"),
    )];
    hyps.push(padic_defect_check(inst));

    // |2|^e as a power sum.
    let abs2_pow = |e: Ratio<i64>| PowSum::power(p, -e * v2);
    let mut points = Vec::new();
    let den = match dir {
        Direction::Down => abs2_pow(r + 1).sub(&abs2_pow(exp_int(2))),
        Direction::Up => abs2_pow(exp_int(1)).sub(&abs2_pow(*r)),
    };
    if range_ok && den.sign() == std::cmp::Ordering::Greater {
        let two = PowSum::from_int(p, 2);
        for ((gp, err), _) in inst.grid.points.iter().zip(errors).zip(inst.a_vals) {
            let xr = match gp.point.valuation() {
                None => PowSum::zero(p),
                Some(v) => PowSum::power(p, -(*r * v)),
            };
            let shape = two.add(&abs2_pow(*r)).mul(&xr).scale(theta);
            let num = match dir {
                Direction::Down => shape.mul(&abs2_pow(exp_int(1))),
                Direction::Up => shape,
            };
            let bound = PowRatio::new(num, den.clone());
            points.push(padic_margin(&gp.id, err, &bound));
        }
    }
    Some(Certificate::assemble(
        format!("{}/power-sum-corollary", TheoremId::table_id(dir, true)),
        SettingKind::NonArchimedean,
        hyps,
        points,
        true,
        vec![format!("α = |2|^({})", if dir == Direction::Down { "1-r" } else { "r-1" })],
    ))
}

/// Direct-method certificates in the non-Archimedean setting:
/// down: ‖f(x)−A(x)‖ ≤ £(x); up: ‖f(x)−A(x)‖ ≤ £(x)/|2|.
pub fn check_nonarch_direct(inst: &PadicInstance, dir: Direction) -> Certificate {
    let c = inst.carrier;
    let mut hyps = Vec::new();
    hyps.push(padic_vanishing_check(inst, dir));
    hyps.push(padic_defect_check(inst));
    if dir == Direction::Up {
        let f0 = inst.f.eval(&c.zero());
        hyps.push(HypothesisCheck::new(
            "f0-zero",
            f0.is_zero(),
            "the upscale theorem requires f(0) = 0".into(),
        ));
    }

    // £ exists: the running max stabilizes at every grid point.
    let mut stabilized = true;
    for gp in &inst.grid.points {
        let terms = pounds_terms(inst.control, c, &gp.point, inst.n_terms, dir);
        if !pounds_stabilized(&terms).0 {
            stabilized = false;
            break;
        }
    }
    hyps.push(HypothesisCheck::new(
        "pounds-exists",
        stabilized,
        format!("running max stabilizes within {} terms at every grid point", inst.n_terms),
    ));

    // Uniqueness surrogate: the shifted running max max_{j≤k<j+n}(…) at
    // j = n_terms/2 must fall strictly below the j = 0 value. Truncated at
    // finite depth, so the certificate claims uniqueness at depth only.
    let mut unique_ok = true;
    for gp in inst.grid.points.iter().take(4) {
        let terms = pounds_terms(inst.control, c, &gp.point, inst.n_terms, dir);
        let j = inst.n_terms / 2;
        let head = terms[..j.max(1)]
            .iter()
            .cloned()
            .fold(PowSum::zero(c.prime), PowSum::max_value);
        let tail = terms[j..]
            .iter()
            .cloned()
            .fold(PowSum::zero(c.prime), PowSum::max_value);
        if !head.is_zero() && tail.cmp_value(&head) != std::cmp::Ordering::Less {
            unique_ok = false;
            break;
        }
    }
    hyps.push(HypothesisCheck::new(
        "uniqueness-depth",
        unique_ok,
        format!("shifted running max decreases; uniqueness certified at depth {}", inst.n_terms),
    ));

    let errors = padic_errors(inst);
    let mut points = Vec::new();
    for (gp, err) in inst.grid.points.iter().zip(&errors) {
        let pounds = match dir {
            Direction::Down => bound_pounds_down(inst.control, c, &gp.point, inst.n_terms),
            Direction::Up => bound_pounds_up(inst.control, c, &gp.point, inst.n_terms),
        };
        let bound = match dir {
            Direction::Down => PowRatio::from_sum(pounds),
            // £/|2| = £·|2|⁻¹; division by the positive |2| via the ratio.
            Direction::Up => PowRatio::new(pounds, c.abs_two()),
        };
        points.push(padic_margin(&gp.id, err, &bound));
    }

    let mut cert = Certificate::assemble(
        TheoremId::table_id(dir, false).to_string(),
        SettingKind::NonArchimedean,
        hyps,
        points,
        true,
        Vec::new(),
    );
    cert.corollary = nonarch_direct_corollary(inst, dir, &errors).map(Box::new);
    cert
}

/// ξ-corollaries of the direct theorems. ξ(t) = t^s throughout.
/// down (ξ(1/|2|) < 1/|2|): ‖f−A‖ ≤ κ(2+|2|)ξ(|x|)/|2| — the κ factor is
/// reinstated (the statement displays the κ = 1 case).
/// up (ξ(|2|) < |2|): ‖f−A‖ ≤ κ·ξ(|x|)³, tested literally as stated.
fn nonarch_direct_corollary(
    inst: &PadicInstance,
    dir: Direction,
    errors: &[PowSum],
) -> Option<Certificate> {
    let c = inst.carrier;
    let p = c.prime;
    let v2: i64 = if p == 2 { 1 } else { 0 };
    let (kappa, s) = match (dir, inst.control) {
        (Direction::Down, ControlFamily::XiSum { kappa, s }) => (kappa, s),
        (Direction::Up, ControlFamily::XiProduct { kappa, s }) => (kappa, s),
        _ => return None,
    };
    // ξ multiplicativity on powers of p is exact: ξ(t/|2|) = ξ(1/|2|)ξ(t)
    // and ξ(|2|t) = ξ(|2|)ξ(t) hold with equality for ξ(t) = t^s. The
    // binding hypothesis is the strict inequality on ξ at |2|.
    let (name, ok, detail) = match dir {
        Direction::Down => {
            // ξ(1/|2|) < 1/|2| ⟺ p^(v2·s) < p^(v2) ⟺ s < 1 (when v2 > 0).
            let lhs = PowSum::power(p, *s * v2);
            let rhs = PowSum::power(p, Ratio::from_integer(v2));
            (
                "xi-contraction",
                lhs.cmp_value(&rhs) == std::cmp::Ordering::Less,
                format!("ξ(1/|2|) = {:.4} must be < 1/|2| = {:.4}", lhs.to_f64(), rhs.to_f64()),
            )
        }
        Direction::Up => {
            let lhs = PowSum::power(p, -(*s * v2));
            let rhs = PowSum::power(p, Ratio::from_integer(-v2));
            (
                "xi-contraction",
                lhs.cmp_value(&rhs) == std::cmp::Ordering::Less,
                format!("ξ(|2|) = {:.4} must be < |2| = {:.4}", lhs.to_f64(), rhs.to_f64()),
            )
        }
    };
    let hyps = vec![
        HypothesisCheck::new(name, ok, detail),
        padic_defect_check(inst),
    ];

    let mut points = Vec::new();
    for (gp, err) in inst.grid.points.iter().zip(errors) {
        let xi_x = match gp.point.valuation() {
            None => PowSum::zero(p),
            Some(v) => PowSum::power(p, -(*s * v)),
        };
        let bound = match dir {
            Direction::Down => {
                // κ(2 + |2|)ξ(|x|)/|2|
                let num = PowSum::from_int(p, 2)
                    .add(&PowSum::power(p, Ratio::from_integer(-v2)))
                    .mul(&xi_x)
                    .scale(kappa);
                PowRatio::new(num, PowSum::power(p, Ratio::from_integer(-v2)))
            }
            Direction::Up => {
                let num = xi_x.mul(&xi_x).mul(&xi_x).scale(kappa);
                PowRatio::from_sum(num)
            }
        };
        points.push(padic_margin(&gp.id, err, &bound));
    }
    let notes = match dir {
        Direction::Down => vec!["κ reinstated in the displayed bound".to_string()],
        Direction::Up => vec!["bound κ·ξ(|x|)³ tested literally as stated".to_string()],
    };
    Some(Certificate::assemble(
        format!("{}/xi-corollary", TheoremId::table_id(dir, false)),
        SettingKind::NonArchimedean,
        hyps,
        points,
        true,
        notes,
    ))
}

// ---------------------------------------------------------------------------
// Real-carrier instances (classical / random / fuzzy)
// ---------------------------------------------------------------------------

pub struct RealInstance<'a> {
    pub carrier: &'a RealCarrier,
    pub grid: &'a Grid<RealCarrier>,
    pub f: &'a SampledFunction<RealCarrier>,
    pub a_vals: &'a [Vec<f64>],
    pub control: &'a ControlFamily,
    pub triples: &'a [Triple<RealCarrier>],
    pub t_grid: &'a [f64],
    /// ‖z0‖ for the random-normed control side.
    pub anchor_norm: f64,
    /// Example-norm parameters, used for both N and N'.
    pub fuzzy: FuzzyNorm,
    /// Contraction parameter of the variant (α, L, or |r|).
    pub alpha: f64,
}

impl<'a> RealInstance<'a> {
    fn errors(&self) -> Vec<f64> {
        self.grid
            .points
            .iter()
            .zip(self.a_vals)
            .map(|(gp, a)| self.carrier.dist(&self.f.eval(&gp.point), a))
            .collect()
    }

    fn control_at(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        self.control.eval_real(self.carrier, x, y, z)
    }

    fn phi_x2x(&self, x: &[f64]) -> f64 {
        self.control.phi_x2x_real(self.carrier, x)
    }

    fn thinned_t(&self) -> Vec<f64> {
        self.t_grid.iter().copied().step_by(10).collect()
    }
}

fn near_le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + UNIT_TOL) + f64::MIN_POSITIVE
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RealVariant {
    RnDirect,
    RnFixedPoint,
    FuzzyDirect,
    FuzzyFixedPoint,
}

/// The variant's control-scaling hypothesis, reduced to the deterministic
/// inequality the induced/example forms are equivalent to.
fn real_scaling_check(
    inst: &RealInstance,
    variant: RealVariant,
    dir: Direction,
) -> HypothesisCheck {
    let c = inst.carrier;
    let a = inst.alpha;
    let describe = |form: &str| format!("{form} on {} sampled triples", inst.triples.len());
    for t in inst.triples {
        let full = inst.control_at(&t.x, &t.y, &t.z);
        let half = inst.control_at(&c.halve(&t.x), &c.halve(&t.y), &c.halve(&t.z));
        let dbl = inst.control_at(&c.double(&t.x), &c.double(&t.y), &c.double(&t.z));
        let ok = match (variant, dir) {
            (RealVariant::RnDirect, Direction::Down) => near_le(half, a * full),
            (RealVariant::RnDirect, Direction::Up) => near_le(dbl, a * full),
            (RealVariant::RnFixedPoint, Direction::Down) => near_le(full, a * dbl),
            (RealVariant::RnFixedPoint, Direction::Up) => near_le(full, a * half),
            (RealVariant::FuzzyDirect, Direction::Down) => near_le(half, a * full),
            (RealVariant::FuzzyDirect, Direction::Up) => near_le(full, a * half),
            (RealVariant::FuzzyFixedPoint, Direction::Down) => near_le(half, a / 2.0 * full),
            (RealVariant::FuzzyFixedPoint, Direction::Up) => near_le(full, 2.0 * a * half),
        };
        if !ok {
            return HypothesisCheck::new(
                "control-scaling",
                false,
                format!("scaling inequality fails at {}", t.id),
            );
        }
    }
    let form = match (variant, dir) {
        (RealVariant::RnDirect, Direction::Down) => "φ(x/2,y/2,z/2) ≤ α·φ",
        (RealVariant::RnDirect, Direction::Up) => "φ(2x,2y,2z) ≤ α·φ",
        (RealVariant::RnFixedPoint, Direction::Down) => "φ ≤ α·φ(2x,2y,2z)",
        (RealVariant::RnFixedPoint, Direction::Up) => "φ ≤ α·φ(x/2,y/2,z/2)",
        (RealVariant::FuzzyDirect, Direction::Down) => "φ(x/2,y/2,z/2) ≤ |r|·φ",
        (RealVariant::FuzzyDirect, Direction::Up) => "φ ≤ |r|·φ(x/2,y/2,z/2)",
        (RealVariant::FuzzyFixedPoint, Direction::Down) => "φ(x/2,y/2,z/2) ≤ L·φ/2",
        (RealVariant::FuzzyFixedPoint, Direction::Up) => "φ ≤ 2L·φ(x/2,y/2,z/2)",
    };
    HypothesisCheck::new("control-scaling", true, describe(form))
}

/// Graded defect hypothesis: μ_{Df}(t) ≥ μ'_{φ}(t) (random) or
/// N(Df, t) ≥ N'(φ, t) (fuzzy), scanned over triples × a thinned t-grid.
fn real_defect_check(inst: &RealInstance, fuzzy: bool) -> HypothesisCheck {
    let c = inst.carrier;
    let ts = inst.thinned_t();
    for t in inst.triples {
        let d = c.norm(&inst.f.defect(&t.x, &t.y, &t.z));
        let v = inst.control_at(&t.x, &t.y, &t.z) * inst.anchor_norm;
        for &tt in &ts {
            let (lhs, rhs) = if fuzzy {
                (inst.fuzzy.eval(d, tt), inst.fuzzy.eval(v, tt))
            } else {
                (induced_value(tt, d), induced_value(tt, v))
            };
            if lhs + UNIT_TOL < rhs {
                return HypothesisCheck::new(
                    "defect-bound",
                    false,
                    format!("graded defect bound fails at {} (t = {tt})", t.id),
                );
            }
        }
    }
    HypothesisCheck::new(
        "defect-bound",
        true,
        format!(
            "graded defect bound holds on {} triples × {} t-points",
            inst.triples.len(),
            ts.len()
        ),
    )
}

/// Deterministic defect hypothesis ‖Df‖ ≤ φ (classical and fuzzy-FP forms).
fn real_defect_check_deterministic(inst: &RealInstance) -> HypothesisCheck {
    let c = inst.carrier;
    for t in inst.triples {
        let d = c.norm(&inst.f.defect(&t.x, &t.y, &t.z));
        let v = inst.control_at(&t.x, &t.y, &t.z);
        if !near_le(d, v) {
            return HypothesisCheck::new(
                "defect-bound",
                false,
                format!("‖Df‖ > φ at {} ({d} vs {v})", t.id),
            );
        }
    }
    HypothesisCheck::new(
        "defect-bound",
        true,
        format!("‖Df‖ ≤ φ on {} sampled triples", inst.triples.len()),
    )
}

fn real_vanishing_check(inst: &RealInstance, dir: Direction) -> HypothesisCheck {
    let c = inst.carrier;
    let depth = 16i64;
    for t in inst.triples.iter().take(8) {
        let mut prev = f64::INFINITY;
        let mut first = None;
        let mut last = 0.0;
        let mut monotone_tail = true;
        for n in 0..depth {
            let k = if dir == Direction::Down { -n } else { n };
            let scale = if dir == Direction::Down {
                2f64.powi(n as i32)
            } else {
                2f64.powi(-(n as i32))
            };
            let v = scale
                * inst.control_at(
                    &c.scale_pow2(&t.x, k),
                    &c.scale_pow2(&t.y, k),
                    &c.scale_pow2(&t.z, k),
                );
            if first.is_none() {
                first = Some(v);
            }
            if n >= depth - 5 && v >= prev && v > 0.0 {
                monotone_tail = false;
            }
            prev = v;
            last = v;
        }
        let first = first.unwrap_or(0.0);
        if first > 0.0 && !(monotone_tail && last < first) {
            return HypothesisCheck::new(
                "vanishing",
                false,
                format!("rescaled control does not vanish along the orbit of {}", t.id),
            );
        }
    }
    HypothesisCheck::new(
        "vanishing",
        true,
        "rescaled control decreases to 0 along sampled orbits".into(),
    )
}

fn range_check(name: &str, value: f64, lo: f64, hi: f64) -> HypothesisCheck {
    let pass = value > lo && value < hi;
    HypothesisCheck::new(
        name,
        pass,
        format!("requires {lo} < value < {hi}, got {value}"),
    )
}

/// Scan LHS ≥ RHS over the grid × t-grid; margins are LHS − RHS.
/// `rhs` maps (point index, t) to the theorem's right-hand side; `bound`
/// is the equivalent deterministic radius recorded per point.
fn graded_points(
    inst: &RealInstance,
    errors: &[f64],
    fuzzy_lhs: bool,
    bound: impl Fn(usize) -> f64,
    rhs: impl Fn(usize, f64) -> f64,
) -> Vec<PointMargin> {
    let mut points = Vec::new();
    for (i, gp) in inst.grid.points.iter().enumerate() {
        let e = errors[i];
        let mut min_margin = f64::INFINITY;
        for &t in inst.t_grid.iter().filter(|&&t| t >= T_MIN_WITNESS) {
            let lhs = if fuzzy_lhs {
                inst.fuzzy.eval(e, t)
            } else {
                induced_value(t, e)
            };
            let margin = lhs - rhs(i, t);
            if margin < min_margin {
                min_margin = margin;
            }
        }
        points.push(PointMargin {
            id: gp.id.clone(),
            error: e,
            bound: bound(i),
            margin: min_margin,
            exact_pass: None,
        });
    }
    points
}

/// Random-normed certificates (direct and fixed-point, both directions).
pub fn check_rn(inst: &RealInstance, id: TheoremId) -> Certificate {
    let (variant, dir) = match id {
        TheoremId::RnDDown => (RealVariant::RnDirect, Direction::Down),
        TheoremId::RnDUp => (RealVariant::RnDirect, Direction::Up),
        TheoremId::RnFpDown => (RealVariant::RnFixedPoint, Direction::Down),
        TheoremId::RnFpUp => (RealVariant::RnFixedPoint, Direction::Up),
        _ => unreachable!("check_rn only handles RN theorem ids"),
    };
    let a = inst.alpha;
    let mut hyps = Vec::new();
    hyps.push(match dir {
        Direction::Down => range_check("alpha-range", a, 0.0, 0.5),
        Direction::Up => range_check("alpha-range", a, 0.0, 2.0),
    });
    hyps.push(real_scaling_check(inst, variant, dir));
    hyps.push(real_defect_check(inst, false));
    if variant == RealVariant::RnDirect {
        hyps.push(real_vanishing_check(inst, dir));
    }
    // Ambient-space sanity: the induced space satisfies the RN axioms on a
    // small sample.
    let sample: Vec<Vec<f64>> = inst.grid.points.iter().take(4).map(|g| g.point.clone()).collect();
    let axioms = rn_axioms_check(TNorm::Minimum, &sample, &[2.0, -1.0], &[0.1, 1.0, 10.0]);
    hyps.push(HypothesisCheck::new(
        "rn-axioms",
        axioms.clean(),
        format!("{} induced-space axiom checks", axioms.checks),
    ));

    let errors = inst.errors();
    let phi: Vec<f64> = inst.grid.points.iter().map(|g| inst.phi_x2x(&g.point)).collect();
    let anchor = inst.anchor_norm;
    let points = match dir {
        // μ_{f−A}(t) ≥ μ'_{φ(x,2x,x)}((1−2α)t/α)
        Direction::Down => graded_points(
            inst,
            &errors,
            false,
            |i| a * phi[i] * anchor / (1.0 - 2.0 * a),
            |i, t| induced_value((1.0 - 2.0 * a) * t / a, phi[i] * anchor),
        ),
        // μ_{f−A}(t) ≥ μ'_{φ(x,2x,x)}((2−α)t)
        Direction::Up => graded_points(
            inst,
            &errors,
            false,
            |i| phi[i] * anchor / (2.0 - a),
            |i, t| induced_value((2.0 - a) * t, phi[i] * anchor),
        ),
    };

    let mut cert = Certificate::assemble(
        id.as_str().to_string(),
        SettingKind::Random,
        hyps,
        points,
        false,
        Vec::new(),
    );
    cert.corollary = rn_corollary(inst, dir, &errors).map(Box::new);
    cert
}

/// Power-sum corollaries of the RN theorems (identical closed forms for the
/// direct and fixed-point routes):
/// down (r>1, α=2^(−r)): μ ≥ (2^r−2)t/((2^r−2)t + (2^r+2)θ‖x‖^r);
/// up (0<r<1, α=2^r):    μ ≥ (2−2^r)t/((2−2^r)t + (2^r+2)θ‖x‖^r).
fn rn_corollary(inst: &RealInstance, dir: Direction, errors: &[f64]) -> Option<Certificate> {
    let ControlFamily::PowerSum { theta, r } = inst.control else {
        return None;
    };
    let rf = r.to_f64().unwrap();
    let th = theta.to_f64().unwrap();
    let range_ok = match dir {
        Direction::Down => rf > 1.0,
        Direction::Up => rf > 0.0 && rf < 1.0,
    };
    let hyps = vec![
        HypothesisCheck::new(
            "exponent-range",
            range_ok,
            match dir {
                Direction::Down => format!("corollary needs r > 1, got {rf}"),
                Direction::Up => format!("corollary needs 0 < r < 1, got {rf}"),
            },
        ),
        real_defect_check(inst, false),
    ];
    let scale = match dir {
        Direction::Down => 2f64.powf(rf) - 2.0,
        Direction::Up => 2.0 - 2f64.powf(rf),
    };
    let anchor = inst.anchor_norm;
    let points = if range_ok {
        graded_points(
            inst,
            errors,
            false,
            |i| {
                let xn = inst.carrier.norm(&inst.grid.points[i].point);
                (2f64.powf(rf) + 2.0) * th * xn.powf(rf) * anchor / scale
            },
            |i, t| {
                let xn = inst.carrier.norm(&inst.grid.points[i].point);
                induced_value(scale * t, (2f64.powf(rf) + 2.0) * th * xn.powf(rf) * anchor)
            },
        )
    } else {
        Vec::new()
    };
    Some(Certificate::assemble(
        format!("{}/power-sum-corollary", if dir == Direction::Down { "RN-down" } else { "RN-up" }),
        SettingKind::Random,
        hyps,
        points,
        false,
        vec![format!("α = 2^({})", if dir == Direction::Down { "-r" } else { "r" })],
    ))
}

/// Fuzzy certificates (direct and fixed-point, both directions).
pub fn check_fuzzy(inst: &RealInstance, id: TheoremId) -> Certificate {
    let (variant, dir) = match id {
        TheoremId::FzDDown => (RealVariant::FuzzyDirect, Direction::Down),
        TheoremId::FzDUp => (RealVariant::FuzzyDirect, Direction::Up),
        TheoremId::FzFpDown => (RealVariant::FuzzyFixedPoint, Direction::Down),
        TheoremId::FzFpUp => (RealVariant::FuzzyFixedPoint, Direction::Up),
        _ => unreachable!("check_fuzzy only handles FZ theorem ids"),
    };
    let a = inst.alpha;
    let mut hyps = Vec::new();
    let mut notes = Vec::new();
    match variant {
        RealVariant::FuzzyDirect => {
            hyps.push(match dir {
                Direction::Down => range_check("r-range", a, 0.0, 0.5),
                Direction::Up => range_check("r-range", a, 0.0, 2.0),
            });
            hyps.push(real_defect_check(inst, true));
        }
        RealVariant::FuzzyFixedPoint => {
            hyps.push(range_check("lipschitz-range", a, 0.0, 1.0));
            // The fixed-point theorems bound the defect by t/(t+φ) directly.
            hyps.push(real_defect_check_deterministic(inst));
        }
        _ => unreachable!(),
    }
    hyps.push(real_scaling_check(inst, variant, dir));

    let errors = inst.errors();
    let phi: Vec<f64> = inst.grid.points.iter().map(|g| inst.phi_x2x(&g.point)).collect();
    let ratio = inst.fuzzy.beta / inst.fuzzy.alpha;
    let points = match (variant, dir) {
        // N(f−A, t) ≥ N'(|r|φ(x,2x,x)/(1−2|r|), t)
        (RealVariant::FuzzyDirect, Direction::Down) => graded_points(
            inst,
            &errors,
            true,
            |i| a * phi[i] / (1.0 - 2.0 * a),
            |i, t| inst.fuzzy.eval(a * phi[i] / (1.0 - 2.0 * a), t),
        ),
        // N(f−A, t) ≥ N'(φ(x,2x,x)/(2−|r|), t)
        (RealVariant::FuzzyDirect, Direction::Up) => graded_points(
            inst,
            &errors,
            true,
            |i| phi[i] / (2.0 - a),
            |i, t| inst.fuzzy.eval(phi[i] / (2.0 - a), t),
        ),
        // N(f−A, t) ≥ (2−2L)t/((2−2L)t + L·φ(x,2x,x))
        (RealVariant::FuzzyFixedPoint, Direction::Down) => graded_points(
            inst,
            &errors,
            true,
            |i| a * phi[i] / ((2.0 - 2.0 * a) * ratio),
            |i, t| induced_value((2.0 - 2.0 * a) * t, a * phi[i]),
        ),
        // N(f−A, t) ≥ (2−2L)t/((2−2L)t + φ(x,2x,x))
        (RealVariant::FuzzyFixedPoint, Direction::Up) => graded_points(
            inst,
            &errors,
            true,
            |i| phi[i] / ((2.0 - 2.0 * a) * ratio),
            |i, t| induced_value((2.0 - 2.0 * a) * t, phi[i]),
        ),
        _ => unreachable!(),
    };
    if variant == RealVariant::FuzzyFixedPoint {
        notes.push("conclusion uses the theorem's t/(t+·) graded form".into());
    }

    let mut cert = Certificate::assemble(
        id.as_str().to_string(),
        SettingKind::Fuzzy,
        hyps,
        points,
        false,
        notes,
    );
    cert.corollary = fuzzy_corollary(inst, variant, dir, &errors).map(Box::new);
    cert
}

/// Fuzzy corollaries, tested with the stated formulas:
/// * direct-down (0<p<2, |r|=1/4): N ≥ N'((2^p+2)θ‖x‖^p/2, t), reading the
///   statement's stray exponent r as p;
/// * fixed-point-down (p>1, L=2^(−p)): N ≥ (2^(p+1)−2)t/((2^(p+1)−2)t+(2^p+2)θ‖x‖^p);
/// * fixed-point-up (0<p<1/3 product, L=2^(−3p)):
///   N ≥ (2^(1+3p)−2)t/((2^(1+3p)−2)t+2^(3p)θ‖x‖^(3p)).
fn fuzzy_corollary(
    inst: &RealInstance,
    variant: RealVariant,
    dir: Direction,
    errors: &[f64],
) -> Option<Certificate> {
    match (variant, dir, inst.control) {
        (RealVariant::FuzzyDirect, Direction::Down, ControlFamily::PowerSum { theta, r }) => {
            let p = r.to_f64().unwrap();
            let th = theta.to_f64().unwrap();
            let hyps = vec![
                range_check("p-range", p, 0.0, 2.0),
                real_defect_check(inst, true),
            ];
            let points = graded_points(
                inst,
                errors,
                true,
                |i| {
                    let xn = inst.carrier.norm(&inst.grid.points[i].point);
                    (2f64.powf(p) + 2.0) * th * xn.powf(p) / 2.0
                },
                |i, t| {
                    let xn = inst.carrier.norm(&inst.grid.points[i].point);
                    inst.fuzzy.eval((2f64.powf(p) + 2.0) * th * xn.powf(p) / 2.0, t)
                },
            );
            Some(Certificate::assemble(
                "FZ-D-down/power-sum-corollary".to_string(),
                SettingKind::Fuzzy,
                hyps,
                points,
                false,
                vec!["statement's exponent r read as p; |r| = 1/4".into()],
            ))
        }
        (RealVariant::FuzzyFixedPoint, Direction::Down, ControlFamily::PowerSum { theta, r }) => {
            let p = r.to_f64().unwrap();
            let th = theta.to_f64().unwrap();
            let hyps = vec![
                HypothesisCheck::new(
                    "p-range",
                    p > 1.0,
                    format!("corollary needs p > 1, got {p}"),
                ),
                real_defect_check_deterministic(inst),
            ];
            let scale = 2f64.powf(p + 1.0) - 2.0;
            let points = if p > 1.0 {
                graded_points(
                    inst,
                    errors,
                    true,
                    |i| {
                        let xn = inst.carrier.norm(&inst.grid.points[i].point);
                        (2f64.powf(p) + 2.0) * th * xn.powf(p) / scale
                    },
                    |i, t| {
                        let xn = inst.carrier.norm(&inst.grid.points[i].point);
                        induced_value(scale * t, (2f64.powf(p) + 2.0) * th * xn.powf(p))
                    },
                )
            } else {
                Vec::new()
            };
            Some(Certificate::assemble(
                "FZ-FP-down/power-sum-corollary".to_string(),
                SettingKind::Fuzzy,
                hyps,
                points,
                false,
                vec!["L = 2^(−p) taken from the statement".into()],
            ))
        }
        (
            RealVariant::FuzzyFixedPoint,
            Direction::Up,
            ControlFamily::PowerProduct { theta, p1, p2, p3 },
        ) => {
            // Equal exponents p1 = p2 = p3 = p, hypothesis 0 < p < 1/3.
            if p1 != p2 || p2 != p3 {
                return None;
            }
            let p = p1.to_f64().unwrap();
            let th = theta.to_f64().unwrap();
            let hyps = vec![
                range_check("p-range", p, 0.0, 1.0 / 3.0),
                real_defect_check_deterministic(inst),
            ];
            let scale = 2f64.powf(1.0 + 3.0 * p) - 2.0;
            let points = if p > 0.0 && p < 1.0 / 3.0 {
                graded_points(
                    inst,
                    errors,
                    true,
                    |i| {
                        let xn = inst.carrier.norm(&inst.grid.points[i].point);
                        2f64.powf(3.0 * p) * th * xn.powf(3.0 * p) / scale
                    },
                    |i, t| {
                        let xn = inst.carrier.norm(&inst.grid.points[i].point);
                        induced_value(scale * t, 2f64.powf(3.0 * p) * th * xn.powf(3.0 * p))
                    },
                )
            } else {
                Vec::new()
            };
            Some(Certificate::assemble(
                "FZ-FP-up/power-product-corollary".to_string(),
                SettingKind::Fuzzy,
                hyps,
                points,
                false,
                vec!["L = 2^(−3p) taken from the statement".into()],
            ))
        }
        _ => None,
    }
}

/// Pairs for the classical Cauchy-defect oracle.
pub fn sample_pairs(
    grid: &Grid<RealCarrier>,
    random_count: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<(String, Vec<f64>, Vec<f64>)> {
    use rand::Rng;
    let c = &grid.carrier;
    let mut pairs = Vec::new();
    for gp in &grid.points {
        pairs.push((format!("({0},{0})", gp.id), gp.point.clone(), gp.point.clone()));
        pairs.push((format!("({0},-{0})", gp.id), gp.point.clone(), c.neg(&gp.point)));
        pairs.push((format!("({0},0)", gp.id), gp.point.clone(), c.zero()));
        pairs.push((
            format!("({0},2{0})", gp.id),
            gp.point.clone(),
            c.double(&gp.point),
        ));
    }
    let pool: Vec<Vec<f64>> = grid
        .points
        .iter()
        .flat_map(|gp| (-2..=2).map(|j| c.scale_pow2(&gp.point, j)).collect::<Vec<_>>())
        .collect();
    for i in 0..random_count {
        let x = pool[rng.gen_range(0..pool.len())].clone();
        let y = pool[rng.gen_range(0..pool.len())].clone();
        pairs.push((format!("rand({i})"), x, y));
    }
    pairs
}

/// ‖·‖^p with the p = 0 convention ‖x‖⁰ = 1 (constant control).
fn pow_p(n: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if n == 0.0 {
        0.0
    } else {
        n.powf(p)
    }
}

/// Fit ε for the classical theorem: the max over pairs of
/// ‖f(x+y) − f(x) − f(y)‖ / (‖x‖^p + ‖y‖^p).
pub fn fit_rassias_eps(
    f: &SampledFunction<RealCarrier>,
    p: f64,
    pairs: &[(String, Vec<f64>, Vec<f64>)],
) -> Result<(f64, Option<String>)> {
    let c = &f.carrier;
    let mut eps = 0.0f64;
    let mut witness = None;
    for (id, x, y) in pairs {
        let d = c.norm(&f.cauchy_defect(x, y));
        let v = pow_p(c.norm(x), p) + pow_p(c.norm(y), p);
        if v == 0.0 {
            if d > 0.0 {
                return Err(Error::Unfittable(format!(
                    "Cauchy control vanishes at {id} but the defect is {d}"
                )));
            }
            continue;
        }
        let ratio = d / v;
        if ratio > eps {
            eps = ratio;
            witness = Some(id.clone());
        }
    }
    Ok((eps, witness))
}

/// The classical certificate: with the Cauchy defect bounded by
/// ε(‖x‖^p + ‖y‖^p), 0 ≤ p < 1, the upscale limit L satisfies
/// ‖f(x) − L(x)‖ ≤ 2ε‖x‖^p/(2 − 2^p).
pub fn check_classical_rassias(
    inst: &RealInstance,
    eps: f64,
    p: f64,
    pairs: &[(String, Vec<f64>, Vec<f64>)],
) -> Certificate {
    let c = inst.carrier;
    let mut hyps = Vec::new();
    hyps.push(HypothesisCheck::new(
        "p-range",
        (0.0..1.0).contains(&p),
        format!("requires 0 ≤ p < 1, got {p}"),
    ));
    let mut defect_ok = true;
    let mut detail = format!("Cauchy defect ≤ ε(‖x‖^p+‖y‖^p) with ε = {eps} on {} pairs", pairs.len());
    for (id, x, y) in pairs {
        let d = c.norm(&inst.f.cauchy_defect(x, y));
        let v = eps * (pow_p(c.norm(x), p) + pow_p(c.norm(y), p));
        if !near_le(d, v) {
            defect_ok = false;
            detail = format!("Cauchy defect exceeds ε-control at {id}");
            break;
        }
    }
    hyps.push(HypothesisCheck::new("cauchy-defect", defect_ok, detail));

    let errors = inst.errors();
    let denom = 2.0 - 2f64.powf(p);
    let mut points = Vec::new();
    for (i, gp) in inst.grid.points.iter().enumerate() {
        let bound = 2.0 * eps * pow_p(c.norm(&gp.point), p) / denom;
        points.push(PointMargin {
            id: gp.id.clone(),
            error: errors[i],
            bound,
            margin: bound - errors[i],
            exact_pass: None,
        });
    }
    Certificate::assemble(
        TheoremId::ClRassias.as_str().to_string(),
        SettingKind::Classical,
        hyps,
        points,
        false,
        Vec::new(),
    )
}

/// Shared graded reduction used by the cross-setting consistency check: the
/// per-point min over t of LHS − RHS for LHS = graded(e), RHS = graded(B).
/// With α = β = 1 the fuzzy example norm evaluates bit-identically to the
/// induced distribution function, so the two settings produce identical
/// margins for identical (e, B) inputs.
pub fn graded_margins(
    errors: &[f64],
    radii: &[f64],
    t_grid: &[f64],
    fuzzy: Option<FuzzyNorm>,
) -> Vec<f64> {
    errors
        .iter()
        .zip(radii)
        .map(|(&e, &b)| {
            let mut min_margin = f64::INFINITY;
            for &t in t_grid.iter().filter(|&&t| t >= T_MIN_WITNESS) {
                let (lhs, rhs) = match fuzzy {
                    Some(n) => (n.eval(e, t), n.eval(b, t)),
                    None => (induced_value(t, e), induced_value(t, b)),
                };
                let m = lhs - rhs;
                if m < min_margin {
                    min_margin = m;
                }
            }
            min_margin
        })
        .collect()
}

/// Default log-spaced t-grid: 100 points over [1e−6, 1e3].
pub fn default_t_grid() -> Vec<f64> {
    log_t_grid(1e-6, 1e3, 100)
}

pub fn log_t_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min && count >= 2);
    let (a, b) = (t_min.log10(), t_max.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}
