//! The Cauchy-Jensen defect operator, control-function families, perturbed
//! test functions, and the coefficient-fitting oracle.
//!
//! The equation under study is
//! `f((x+y+z)/2) + f((x−y+z)/2) = f(x) + f(z)`;
//! its defect `Df(x,y,z)` is the left side minus the right side. Control
//! functions bound the defect; stability certificates turn that bound into
//! an explicit radius around an additive map.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::carrier::{Carrier, Grid, PadicCarrier, RealCarrier};
use crate::error::{Error, Result};
use crate::exact::{ceil_log_prime, exp_int, Exponent, PowRatio, PowSum};
use crate::padic::PAdicNumber;

/// Closed-form evaluation rule of a sampled function.
pub type EvalRule<C> =
    Arc<dyn Fn(&<C as Carrier>::Point) -> <C as Carrier>::Point + Send + Sync>;

/// A function under test: a closed-form evaluation rule over a report grid.
/// Orbit points (x·2^k) are evaluated on demand through the rule.
#[derive(Clone)]
pub struct SampledFunction<C: Carrier> {
    pub carrier: C,
    pub grid: Arc<Grid<C>>,
    rule: EvalRule<C>,
    /// Rescaling depth already consumed by J-applications.
    pub depth_used: i64,
}

impl<C: Carrier> SampledFunction<C> {
    pub fn new(
        carrier: C,
        grid: Arc<Grid<C>>,
        rule: EvalRule<C>,
    ) -> Self {
        SampledFunction { carrier, grid, rule, depth_used: 0 }
    }

    pub fn eval(&self, x: &C::Point) -> C::Point {
        (self.rule)(x)
    }

    /// The Cauchy-Jensen defect Df(x,y,z).
    pub fn defect(&self, x: &C::Point, y: &C::Point, z: &C::Point) -> C::Point {
        let c = &self.carrier;
        let xz = c.add(x, z);
        let w1 = c.halve(&c.add(&xz, y));
        let w2 = c.halve(&c.sub(&xz, y));
        let lhs = c.add(&self.eval(&w1), &self.eval(&w2));
        c.sub(&c.sub(&lhs, &self.eval(x)), &self.eval(z))
    }

    /// The plain Cauchy defect f(x+y) − f(x) − f(y).
    pub fn cauchy_defect(&self, x: &C::Point, y: &C::Point) -> C::Point {
        let c = &self.carrier;
        let s = self.eval(&c.add(x, y));
        c.sub(&c.sub(&s, &self.eval(x)), &self.eval(y))
    }
}

/// Perturbation descriptors for the real carrier.
#[derive(Clone, Debug)]
pub enum RealPerturbation {
    None,
    /// f(x) = a·x + ε‖x‖^r·u for a fixed unit direction u; requires r > 0,
    /// so f(0) = 0.
    Power { eps: f64, r: f64 },
    /// f(x) = a·x + ε·u; constant offset (f(0) ≠ 0), used by the p = 0
    /// classical instances.
    Offset { eps: f64 },
}

/// Perturbation descriptors for the p-adic carrier.
#[derive(Clone, Debug)]
pub enum PadicPerturbation {
    None,
    /// f(x) = a·x + c·p^(m + ⌈r·v(x)⌉) for x ≠ 0, f(0) = 0. The ceiling
    /// keeps exponents integral, mimicking ε‖x‖^r with ‖δ(x)‖ ≤ |c|·p^(−m)·‖x‖^r.
    ValuationShift { c: BigRational, m: i64, r: Exponent },
}

pub fn perturbed_real(
    carrier: RealCarrier,
    grid: Arc<Grid<RealCarrier>>,
    a: f64,
    pert: RealPerturbation,
) -> SampledFunction<RealCarrier> {
    let c = carrier.clone();
    let u = carrier.unit();
    let rule: EvalRule<RealCarrier> = match pert {
        RealPerturbation::None => Arc::new(move |x| c.axpy(a, x, 0.0, &u)),
        RealPerturbation::Power { eps, r } => {
            assert!(r > 0.0, "power perturbation requires r > 0");
            Arc::new(move |x| {
                let n = c.norm(x);
                let amp = if n == 0.0 { 0.0 } else { eps * n.powf(r) };
                c.axpy(a, x, amp, &u)
            })
        }
        RealPerturbation::Offset { eps } => Arc::new(move |x| c.axpy(a, x, eps, &u)),
    };
    SampledFunction::new(carrier, grid, rule)
}

pub fn perturbed_padic(
    carrier: PadicCarrier,
    grid: Arc<Grid<PadicCarrier>>,
    a: BigRational,
    pert: PadicPerturbation,
) -> Result<SampledFunction<PadicCarrier>> {
    let a_embedded = PAdicNumber::from_big_rational(&a, carrier.prime, carrier.precision)?;
    let c = carrier.clone();
    let rule: EvalRule<PadicCarrier> = match pert {
        PadicPerturbation::None => {
            Arc::new(move |x| a_embedded.mul(x).expect("same prime"))
        }
        PadicPerturbation::ValuationShift { c: coef, m, r } => {
            if r <= exp_int(0) {
                return Err(Error::Config("valuation-shift rate must be positive".into()));
            }
            let base = PAdicNumber::from_big_rational(&coef, carrier.prime, carrier.precision)?;
            Arc::new(move |x| {
                let linear = a_embedded.mul(x).expect("same prime");
                match x.valuation() {
                    None => linear,
                    Some(v) => {
                        let e = m + (r * v).ceil().to_integer();
                        let delta = base.shift_valuation(e);
                        c.add(&linear, &delta)
                    }
                }
            })
        }
    };
    Ok(SampledFunction::new(carrier, grid, rule))
}

/// The control-function families of the stability theorems. Exponents are
/// exact rationals so the ultrametric evaluations stay exact; coefficients
/// are exact rationals too (fitted values are dyadic or prime powers).
#[derive(Clone, Debug)]
pub enum ControlFamily {
    /// θ(‖x‖^r + ‖y‖^r + ‖z‖^r)
    PowerSum { theta: BigRational, r: Exponent },
    /// θ(‖x‖^p1 · ‖y‖^p2 · ‖z‖^p3)
    PowerProduct { theta: BigRational, p1: Exponent, p2: Exponent, p3: Exponent },
    /// κ(ξ(‖x‖) + ξ(‖y‖) + ξ(‖z‖)) with ξ(t) = t^s
    XiSum { kappa: BigRational, s: Exponent },
    /// κ(ξ(‖x‖) · ξ(‖y‖) · ξ(‖z‖)) with ξ(t) = t^s
    XiProduct { kappa: BigRational, s: Exponent },
    /// The constant δ
    Constant { delta: BigRational },
}

impl ControlFamily {
    pub fn validate(&self) -> Result<()> {
        let positive = |e: &Exponent, what: &str| {
            if *e <= exp_int(0) {
                Err(Error::Config(format!("{what} exponent must be positive, got {e}")))
            } else {
                Ok(())
            }
        };
        let nonneg = |c: &BigRational, what: &str| {
            if c.is_negative() {
                Err(Error::Config(format!("{what} coefficient must be nonnegative")))
            } else {
                Ok(())
            }
        };
        match self {
            ControlFamily::PowerSum { theta, r } => {
                nonneg(theta, "power-sum")?;
                positive(r, "power-sum")
            }
            ControlFamily::PowerProduct { theta, p1, p2, p3 } => {
                nonneg(theta, "power-product")?;
                positive(p1, "power-product p1")?;
                positive(p2, "power-product p2")?;
                positive(p3, "power-product p3")
            }
            ControlFamily::XiSum { kappa, s } => {
                nonneg(kappa, "xi-sum")?;
                positive(s, "xi")
            }
            ControlFamily::XiProduct { kappa, s } => {
                nonneg(kappa, "xi-product")?;
                positive(s, "xi")
            }
            ControlFamily::Constant { delta } => nonneg(delta, "constant"),
        }
    }

    /// Coefficient θ/κ/δ of the family.
    pub fn coefficient(&self) -> &BigRational {
        match self {
            ControlFamily::PowerSum { theta, .. } => theta,
            ControlFamily::PowerProduct { theta, .. } => theta,
            ControlFamily::XiSum { kappa, .. } => kappa,
            ControlFamily::XiProduct { kappa, .. } => kappa,
            ControlFamily::Constant { delta } => delta,
        }
    }

    pub fn with_coefficient(&self, c: BigRational) -> Self {
        let mut out = self.clone();
        match &mut out {
            ControlFamily::PowerSum { theta, .. } => *theta = c,
            ControlFamily::PowerProduct { theta, .. } => *theta = c,
            ControlFamily::XiSum { kappa, .. } => *kappa = c,
            ControlFamily::XiProduct { kappa, .. } => *kappa = c,
            ControlFamily::Constant { delta } => *delta = c,
        }
        out
    }

    /// Total homogeneity degree under scaling of all three arguments.
    pub fn degree(&self) -> Exponent {
        match self {
            ControlFamily::PowerSum { r, .. } => *r,
            ControlFamily::XiSum { s, .. } => *s,
            ControlFamily::PowerProduct { p1, p2, p3, .. } => p1 + p2 + p3,
            ControlFamily::XiProduct { s, .. } => s * 3,
            ControlFamily::Constant { .. } => exp_int(0),
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(
            self,
            ControlFamily::PowerProduct { .. } | ControlFamily::XiProduct { .. }
        )
    }

    /// Evaluate on the real carrier. `‖0‖^r` is 0 for the positive exponents
    /// these families carry.
    pub fn eval_real(&self, c: &RealCarrier, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let (nx, ny, nz) = (
            c.norm(&x.to_vec()),
            c.norm(&y.to_vec()),
            c.norm(&z.to_vec()),
        );
        self.eval_real_norms(nx, ny, nz)
    }

    pub fn eval_real_norms(&self, nx: f64, ny: f64, nz: f64) -> f64 {
        let pw = |n: f64, e: &Exponent| {
            let ef = e.to_f64().unwrap();
            if n == 0.0 {
                0.0
            } else {
                n.powf(ef)
            }
        };
        match self {
            ControlFamily::PowerSum { theta, r } => {
                theta.to_f64().unwrap() * (pw(nx, r) + pw(ny, r) + pw(nz, r))
            }
            ControlFamily::PowerProduct { theta, p1, p2, p3 } => {
                theta.to_f64().unwrap() * pw(nx, p1) * pw(ny, p2) * pw(nz, p3)
            }
            ControlFamily::XiSum { kappa, s } => {
                kappa.to_f64().unwrap() * (pw(nx, s) + pw(ny, s) + pw(nz, s))
            }
            ControlFamily::XiProduct { kappa, s } => {
                kappa.to_f64().unwrap() * pw(nx, s) * pw(ny, s) * pw(nz, s)
            }
            ControlFamily::Constant { delta } => delta.to_f64().unwrap(),
        }
    }

    /// Evaluate exactly on the p-adic carrier: `‖x‖^r = p^(−v·r)`.
    pub fn eval_padic(
        &self,
        c: &PadicCarrier,
        x: &PAdicNumber,
        y: &PAdicNumber,
        z: &PAdicNumber,
    ) -> PowSum {
        let p = c.prime;
        let pw = |a: &PAdicNumber, e: &Exponent| match a.valuation() {
            None => PowSum::zero(p),
            Some(v) => PowSum::power(p, -(e * v)),
        };
        match self {
            ControlFamily::PowerSum { theta, r } => pw(x, r)
                .add(&pw(y, r))
                .add(&pw(z, r))
                .scale(theta),
            ControlFamily::PowerProduct { theta, p1, p2, p3 } => pw(x, p1)
                .mul(&pw(y, p2))
                .mul(&pw(z, p3))
                .scale(theta),
            ControlFamily::XiSum { kappa, s } => pw(x, s)
                .add(&pw(y, s))
                .add(&pw(z, s))
                .scale(kappa),
            ControlFamily::XiProduct { kappa, s } => pw(x, s)
                .mul(&pw(y, s))
                .mul(&pw(z, s))
                .scale(kappa),
            ControlFamily::Constant { delta } => PowSum::rational(p, delta.clone()),
        }
    }

    /// φ(x, 2x, x), the combination every bound formula uses.
    pub fn phi_x2x_real(&self, c: &RealCarrier, x: &[f64]) -> f64 {
        let n = c.norm(&x.to_vec());
        self.eval_real_norms(n, 2.0 * n, n)
    }

    pub fn phi_x2x_padic(&self, c: &PadicCarrier, x: &PAdicNumber) -> PowSum {
        let two_x = x.scale_pow2(1);
        self.eval_padic(c, x, &two_x, x)
    }
}

/// A sampled triple with a stable id.
#[derive(Clone)]
pub struct Triple<C: Carrier> {
    pub id: String,
    pub x: C::Point,
    pub y: C::Point,
    pub z: C::Point,
}

/// Build the triple sample a certificate quantifies over:
/// * the telescoping triples (u, 2u, u) along each grid point's dyadic
///   orbit (these are exactly the triples the stability proofs consume),
/// * Jensen triples (x, 0, z) unless the family vanishes on zero arguments,
/// * sign triples (x, −x, x),
/// * seeded random triples from the orbit pool.
pub fn sample_triples<C: Carrier>(
    grid: &Grid<C>,
    orbit_depth: i64,
    include_zero_y: bool,
    random_count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Triple<C>> {
    let c = &grid.carrier;
    let mut triples = Vec::new();
    for gp in &grid.points {
        for j in -(orbit_depth + 1)..=orbit_depth {
            let u = c.scale_pow2(&gp.point, j);
            let two_u = c.double(&u);
            triples.push(Triple {
                id: format!("orbit({},2^{j})", gp.id),
                x: u.clone(),
                y: two_u,
                z: u,
            });
        }
    }
    let zero = c.zero();
    for gp in &grid.points {
        if include_zero_y {
            triples.push(Triple {
                id: format!("jensen({})", gp.id),
                x: gp.point.clone(),
                y: zero.clone(),
                z: gp.point.clone(),
            });
            // (x, 0, −x) attains the extremal defect/control ratio of the
            // power perturbations; without it sample fits undershoot the
            // borderline corollary radii.
            triples.push(Triple {
                id: format!("jensen-neg({})", gp.id),
                x: gp.point.clone(),
                y: zero.clone(),
                z: c.neg(&gp.point),
            });
        }
        triples.push(Triple {
            id: format!("sign({})", gp.id),
            x: gp.point.clone(),
            y: c.neg(&gp.point),
            z: gp.point.clone(),
        });
    }
    // Random triples drawn from a shallow orbit pool around the grid.
    let mut pool: Vec<C::Point> = Vec::new();
    for gp in &grid.points {
        for j in -2..=2 {
            pool.push(c.scale_pow2(&gp.point, j));
        }
    }
    for i in 0..random_count {
        let x = pool[rng.gen_range(0..pool.len())].clone();
        let y = pool[rng.gen_range(0..pool.len())].clone();
        let z = pool[rng.gen_range(0..pool.len())].clone();
        triples.push(Triple { id: format!("rand({i})"), x, y, z });
    }
    triples
}

/// Outcome of fitting the control coefficient against the sampled defects.
#[derive(Clone, Debug)]
pub struct DefectReport {
    /// Exact coefficient installed in the control function.
    pub theta: BigRational,
    /// Floating view of the raw max ratio before any rounding.
    pub raw_max_ratio: f64,
    /// Largest defect norm seen.
    pub max_defect: f64,
    pub witness: Option<String>,
    pub samples: usize,
    /// True when the exact p-adic fit rounded up to an integer prime power.
    pub rounded_to_prime_power: bool,
}

/// Fit θ on the real carrier: the max over triples of ‖Df‖/family(θ=1).
pub fn fit_theta_real(
    f: &SampledFunction<RealCarrier>,
    shape: &ControlFamily,
    triples: &[Triple<RealCarrier>],
) -> Result<DefectReport> {
    let c = &f.carrier;
    let unit = shape.with_coefficient(BigRational::from_integer(BigInt::from(1)));
    let mut max_ratio = 0.0f64;
    let mut max_defect = 0.0f64;
    let mut witness = None;
    for t in triples {
        let defect = c.norm(&f.defect(&t.x, &t.y, &t.z));
        let value = unit.eval_real(c, &t.x, &t.y, &t.z);
        if defect > max_defect {
            max_defect = defect;
        }
        if value == 0.0 {
            if defect > 0.0 {
                return Err(Error::Unfittable(format!(
                    "control vanishes at {} but the defect is {defect}",
                    t.id
                )));
            }
            continue;
        }
        let ratio = defect / value;
        if ratio > max_ratio {
            max_ratio = ratio;
            witness = Some(t.id.clone());
        }
    }
    let theta = BigRational::from_float(max_ratio)
        .unwrap_or_else(BigRational::zero);
    Ok(DefectReport {
        theta,
        raw_max_ratio: max_ratio,
        max_defect,
        witness,
        samples: triples.len(),
        rounded_to_prime_power: false,
    })
}

/// Fit θ on the p-adic carrier with exact comparisons, rounding the fitted
/// value up to the next integer power of p so the coefficient stays an
/// exact rational.
pub fn fit_theta_padic(
    f: &SampledFunction<PadicCarrier>,
    shape: &ControlFamily,
    triples: &[Triple<PadicCarrier>],
) -> Result<DefectReport> {
    let c = &f.carrier;
    let p = c.prime;
    let unit = shape.with_coefficient(BigRational::from_integer(BigInt::from(1)));
    let mut max_ratio: Option<PowRatio> = None;
    let mut max_defect = UltraZero::new();
    let mut witness = None;
    for t in triples {
        let defect = f.defect(&t.x, &t.y, &t.z);
        let dn = defect.norm_powsum();
        max_defect.update(defect.norm_f64());
        if dn.is_zero() {
            continue;
        }
        let value = unit.eval_padic(c, &t.x, &t.y, &t.z);
        if value.is_zero() {
            return Err(Error::Unfittable(format!(
                "control vanishes at {} but the defect has norm {}",
                t.id,
                defect.norm_f64()
            )));
        }
        let ratio = PowRatio::new(dn, value);
        let larger = match &max_ratio {
            None => true,
            Some(cur) => cur.cmp_value(&ratio) == std::cmp::Ordering::Less,
        };
        if larger {
            max_ratio = Some(ratio);
            witness = Some(t.id.clone());
        }
    }
    let (theta, raw, rounded) = match &max_ratio {
        None => (BigRational::zero(), 0.0, false),
        Some(r) => {
            let k = ceil_log_prime(r);
            let mag = BigInt::from(p).pow(k.unsigned_abs() as u32);
            let theta = if k >= 0 {
                BigRational::from_integer(mag)
            } else {
                BigRational::new(BigInt::from(1), mag)
            };
            (theta, r.to_f64(), true)
        }
    };
    Ok(DefectReport {
        theta,
        raw_max_ratio: raw,
        max_defect: max_defect.value,
        witness,
        samples: triples.len(),
        rounded_to_prime_power: rounded,
    })
}

struct UltraZero {
    value: f64,
}

impl UltraZero {
    fn new() -> Self {
        UltraZero { value: 0.0 }
    }
    fn update(&mut self, v: f64) {
        if v > self.value {
            self.value = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::Grid;
    use num_rational::Ratio;
    use rand::SeedableRng;

    fn real_grid() -> (RealCarrier, Arc<Grid<RealCarrier>>) {
        let c = RealCarrier::new(1);
        let seeds = vec![
            ("1".into(), c.scalar(1.0)),
            ("2".into(), c.scalar(2.0)),
            ("3".into(), c.scalar(3.0)),
            ("-1".into(), c.scalar(-1.0)),
            ("-2".into(), c.scalar(-2.0)),
        ];
        let grid = Grid::from_seeds(c.clone(), seeds, 2, 40);
        (c, grid)
    }

    #[test]
    fn additive_function_has_zero_defect() {
        let (c, grid) = real_grid();
        let f = perturbed_real(c.clone(), grid, 1.5, RealPerturbation::None);
        for (x, y, z) in [(1.0, 2.0, 3.0), (0.5, -1.0, 2.0), (0.0, 0.0, 0.0)] {
            let d = f.defect(&c.scalar(x), &c.scalar(y), &c.scalar(z));
            assert_eq!(c.norm(&d), 0.0);
        }
    }

    #[test]
    fn constant_offset_cancels_in_defect() {
        // f(x) = x + c: the two midpoint offsets cancel the two right-side
        // offsets exactly.
        let (c, grid) = real_grid();
        let f = perturbed_real(c.clone(), grid, 1.0, RealPerturbation::Offset { eps: 0.375 });
        for (x, y, z) in [(1.0, 2.0, 3.0), (2.0, -4.0, 6.0)] {
            let d = f.defect(&c.scalar(x), &c.scalar(y), &c.scalar(z));
            assert_eq!(c.norm(&d), 0.0);
        }
    }

    #[test]
    fn square_defect_matches_hand_value() {
        let (c, grid) = real_grid();
        let rule: EvalRule<RealCarrier> =
            Arc::new(|x: &Vec<f64>| vec![x[0] * x[0]]);
        let f = SampledFunction::new(c.clone(), grid, rule);
        let d = f.defect(&c.scalar(0.0), &c.scalar(2.0), &c.scalar(0.0));
        assert_eq!(d[0], 2.0);
    }

    #[test]
    fn defect_symmetric_under_y_negation() {
        let (c, grid) = real_grid();
        let f = perturbed_real(
            c.clone(),
            grid,
            1.0,
            RealPerturbation::Power { eps: 0.25, r: 0.5 },
        );
        for (x, y, z) in [(1.0, 2.0, 3.0), (0.5, -1.5, 2.5), (2.0, 0.25, -1.0)] {
            let a = f.defect(&c.scalar(x), &c.scalar(y), &c.scalar(z));
            let b = f.defect(&c.scalar(x), &c.scalar(-y), &c.scalar(z));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn jensen_form_at_zero_y() {
        let (c, grid) = real_grid();
        let f = perturbed_real(
            c.clone(),
            grid,
            1.0,
            RealPerturbation::Power { eps: 0.125, r: 2.0 },
        );
        let (x, z) = (c.scalar(1.0), c.scalar(3.0));
        let d = f.defect(&x, &c.zero(), &z);
        let mid = f.eval(&c.halve(&c.add(&x, &z)));
        let expected = c.sub(
            &c.sub(&c.double(&mid), &f.eval(&x)),
            &f.eval(&z),
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn adding_an_additive_map_preserves_defect() {
        let (c, grid) = real_grid();
        let f = perturbed_real(
            c.clone(),
            grid.clone(),
            1.0,
            RealPerturbation::Power { eps: 0.1, r: 0.5 },
        );
        // g(x) = f(x) + 7x
        let f2 = f.clone();
        let c2 = c.clone();
        let rule: EvalRule<RealCarrier> =
            Arc::new(move |x| c2.add(&f2.eval(x), &c2.scale_pow2(&vec![x[0] * 3.5], 1)));
        let g = SampledFunction::new(c.clone(), grid, rule);
        for (x, y, z) in [(1.0, 2.0, 3.0), (0.5, -1.0, 2.0)] {
            let df = f.defect(&c.scalar(x), &c.scalar(y), &c.scalar(z));
            let dg = g.defect(&c.scalar(x), &c.scalar(y), &c.scalar(z));
            assert!((c.norm(&c.sub(&df, &dg))) <= 1e-12);
        }
    }

    #[test]
    fn control_examples() {
        let one = BigRational::from_integer(BigInt::from(1));
        let two = BigRational::from_integer(BigInt::from(2));
        let c = RealCarrier::new(1);
        let ps = ControlFamily::PowerSum { theta: one.clone(), r: exp_int(1) };
        assert_eq!(ps.eval_real(&c, &[1.0], &[2.0], &[1.0]), 4.0);
        assert_eq!(ps.eval_real(&c, &[0.0], &[0.0], &[0.0]), 0.0);
        let pp = ControlFamily::PowerProduct {
            theta: two,
            p1: exp_int(1),
            p2: exp_int(1),
            p3: exp_int(1),
        };
        assert_eq!(pp.eval_real(&c, &[1.0], &[2.0], &[3.0]), 12.0);
        assert!(ControlFamily::PowerSum { theta: -one.clone(), r: exp_int(1) }
            .validate()
            .is_err());
        assert!(ControlFamily::PowerSum { theta: one, r: exp_int(0) }
            .validate()
            .is_err());
    }

    #[test]
    fn control_padic_is_exact() {
        let pc = PadicCarrier::new(2, 32);
        let x = pc.from_rational(12, 1).unwrap(); // ‖x‖ = 1/4
        let y = pc.from_rational(1, 2).unwrap(); // ‖y‖ = 2
        let z = pc.from_rational(3, 1).unwrap(); // ‖z‖ = 1
        let fam = ControlFamily::PowerSum {
            theta: BigRational::from_integer(BigInt::from(1)),
            r: Ratio::new(1, 2),
        };
        let v = fam.eval_padic(&pc, &x, &y, &z);
        // 2^(−1) + 2^(1/2) + 1
        let expect = PowSum::power(2, Ratio::new(-2, 2))
            .add(&PowSum::power(2, Ratio::new(1, 2)))
            .add(&PowSum::one(2));
        assert_eq!(v.cmp_value(&expect), std::cmp::Ordering::Equal);
    }

    #[test]
    fn fit_is_zero_for_additive_and_monotone_in_samples() {
        let (c, grid) = real_grid();
        let additive = perturbed_real(c.clone(), grid.clone(), 2.0, RealPerturbation::None);
        let shape = ControlFamily::PowerSum {
            theta: BigRational::zero(),
            r: Ratio::new(1, 2),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let triples = sample_triples(&grid, 4, true, 60, &mut rng);
        let rep = fit_theta_real(&additive, &shape, &triples).unwrap();
        assert_eq!(rep.raw_max_ratio, 0.0);

        let f = perturbed_real(
            c.clone(),
            grid.clone(),
            1.0,
            RealPerturbation::Power { eps: 0.0625, r: 0.5 },
        );
        let small = &triples[..triples.len() / 2];
        let rep_small = fit_theta_real(&f, &shape, small).unwrap();
        let rep_full = fit_theta_real(&f, &shape, &triples).unwrap();
        assert!(rep_full.raw_max_ratio >= rep_small.raw_max_ratio);
        // ‖Df‖ ≤ θ_fit·(‖x‖^r+‖y‖^r+‖z‖^r) certified on the sample.
        let fitted = shape.with_coefficient(rep_full.theta.clone());
        for t in &triples {
            let d = c.norm(&f.defect(&t.x, &t.y, &t.z));
            let v = fitted.eval_real(&c, &t.x, &t.y, &t.z);
            assert!(d <= v + 1e-12, "triple {}", t.id);
        }
    }

    #[test]
    fn product_family_unfittable_on_zero_argument() {
        let (c, grid) = real_grid();
        let f = perturbed_real(
            c.clone(),
            grid.clone(),
            1.0,
            RealPerturbation::Power { eps: 0.1, r: 0.5 },
        );
        let shape = ControlFamily::PowerProduct {
            theta: BigRational::zero(),
            p1: Ratio::new(1, 4),
            p2: Ratio::new(1, 4),
            p3: Ratio::new(1, 4),
        };
        let bad = vec![Triple {
            id: "zero-y".into(),
            x: c.scalar(1.0),
            y: c.zero(),
            z: c.scalar(3.0),
        }];
        assert!(matches!(
            fit_theta_real(&f, &shape, &bad),
            Err(Error::Unfittable(_))
        ));
    }

    #[test]
    fn padic_fit_certifies_sample() {
        let pc = PadicCarrier::new(2, 48);
        let seeds: Vec<(String, PAdicNumber)> = [(1i64, 1i64), (3, 1), (1, 3), (-1, 1)]
            .iter()
            .map(|&(n, d)| (format!("{n}/{d}"), pc.from_rational(n, d).unwrap()))
            .collect();
        let grid = Grid::from_seeds(pc.clone(), seeds, 1, 32);
        let f = perturbed_padic(
            pc.clone(),
            grid.clone(),
            BigRational::from_integer(BigInt::from(1)),
            PadicPerturbation::ValuationShift {
                c: BigRational::from_integer(BigInt::from(1)),
                m: 6,
                r: Ratio::new(1, 2),
            },
        )
        .unwrap();
        let shape = ControlFamily::PowerSum {
            theta: BigRational::zero(),
            r: Ratio::new(1, 2),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let triples = sample_triples(&grid, 8, true, 40, &mut rng);
        let rep = fit_theta_padic(&f, &shape, &triples).unwrap();
        assert!(rep.rounded_to_prime_power);
        assert!(rep.raw_max_ratio > 0.0);
        let fitted = shape.with_coefficient(rep.theta.clone());
        for t in &triples {
            let d = f.defect(&t.x, &t.y, &t.z).norm_powsum();
            let v = fitted.eval_padic(&pc, &t.x, &t.y, &t.z);
            assert!(d.le(&v), "triple {}", t.id);
        }
    }
}
