//! Carriers: the spaces the function under test maps between.
//!
//! Two concrete carriers cover every setting in the laboratory: real vectors
//! with the Euclidean norm (classical, random-normed and fuzzy certificates
//! all quantify over a real carrier) and Q_p with the exact ultrametric
//! norm. Extraction and the fixed-point iteration are generic over the
//! trait; convergence detection is carrier-specific because the two norms
//! have incompatible notions of "negligible".

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::Result;
use crate::exact::PowSum;
use crate::padic::PAdicNumber;

pub trait Carrier: Clone + Send + Sync + 'static {
    type Point: Clone + PartialEq + Send + Sync + fmt::Debug;
    type Norm: Clone + PartialOrd + Send + Sync + fmt::Debug;
    /// Convergence policy parameter: absolute tolerance (real) or valuation
    /// floor (p-adic).
    type Tol: Copy + Send + Sync + fmt::Debug;

    fn zero(&self) -> Self::Point;
    fn add(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;
    fn sub(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;
    fn neg(&self, a: &Self::Point) -> Self::Point;
    /// Multiply by 2^k; exact in both carriers.
    fn scale_pow2(&self, a: &Self::Point, k: i64) -> Self::Point;
    fn norm(&self, a: &Self::Point) -> Self::Norm;
    fn norm_f64(&self, n: &Self::Norm) -> f64;
    fn is_zero_norm(&self, n: &Self::Norm) -> bool;
    /// Is the norm value negligible at this tolerance?
    fn within(&self, n: &Self::Norm, tol: Self::Tol) -> bool;
    /// Cauchy stopping rule on the trailing successive-iterate distances.
    fn diffs_converged(&self, diffs: &[Self::Norm], tol: Self::Tol) -> bool;
    fn describe(&self, a: &Self::Point) -> String;

    fn halve(&self, a: &Self::Point) -> Self::Point {
        self.scale_pow2(a, -1)
    }
    fn double(&self, a: &Self::Point) -> Self::Point {
        self.scale_pow2(a, 1)
    }
    fn dist(&self, a: &Self::Point, b: &Self::Point) -> Self::Norm {
        self.norm(&self.sub(a, b))
    }
}

/// Finite-dimensional real vectors with the Euclidean norm.
#[derive(Clone, Debug)]
pub struct RealCarrier {
    pub dim: usize,
}

impl RealCarrier {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        RealCarrier { dim }
    }

    pub fn scalar(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[0] = x;
        v
    }

    /// Fixed unit direction used by perturbations.
    pub fn unit(&self) -> Vec<f64> {
        self.scalar(1.0)
    }

    pub fn axpy(&self, a: f64, x: &[f64], c: f64, u: &[f64]) -> Vec<f64> {
        x.iter().zip(u).map(|(xi, ui)| a * xi + c * ui).collect()
    }
}

impl Carrier for RealCarrier {
    type Point = Vec<f64>;
    type Norm = f64;
    type Tol = f64;

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn add(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    fn sub(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    fn neg(&self, a: &Vec<f64>) -> Vec<f64> {
        a.iter().map(|x| -x).collect()
    }

    fn scale_pow2(&self, a: &Vec<f64>, k: i64) -> Vec<f64> {
        let f = 2f64.powi(k as i32);
        a.iter().map(|x| x * f).collect()
    }

    fn norm(&self, a: &Vec<f64>) -> f64 {
        if self.dim == 1 {
            a[0].abs()
        } else {
            a.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    }

    fn norm_f64(&self, n: &f64) -> f64 {
        *n
    }

    fn is_zero_norm(&self, n: &f64) -> bool {
        *n == 0.0
    }

    fn within(&self, n: &f64, tol: f64) -> bool {
        *n <= tol
    }

    fn diffs_converged(&self, diffs: &[f64], tol: f64) -> bool {
        match diffs.last() {
            None => false,
            Some(&0.0) => true,
            _ => diffs.len() >= 3 && diffs[diffs.len() - 3..].iter().all(|&d| d < tol),
        }
    }

    fn describe(&self, a: &Vec<f64>) -> String {
        if self.dim == 1 {
            format!("{}", a[0])
        } else {
            format!("{a:?}")
        }
    }
}

/// Ultrametric norm value `p^(−v)`, with zero stored as `valuation: None`
/// (valuation +∞). Ordering compares actual magnitudes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UltraNorm {
    pub prime: u32,
    pub valuation: Option<i64>,
}

impl UltraNorm {
    pub fn zero(prime: u32) -> Self {
        UltraNorm { prime, valuation: None }
    }

    pub fn of(x: &PAdicNumber) -> Self {
        UltraNorm { prime: x.prime(), valuation: x.valuation() }
    }

    pub fn is_zero(&self) -> bool {
        self.valuation.is_none()
    }

    /// Norm at or below `p^(−floor)`.
    pub fn at_most_scale(&self, floor: i64) -> bool {
        match self.valuation {
            None => true,
            Some(v) => v >= floor,
        }
    }

    pub fn powsum(&self) -> PowSum {
        match self.valuation {
            None => PowSum::zero(self.prime),
            Some(v) => PowSum::power(self.prime, Ratio::from_integer(-v)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self.valuation {
            None => 0.0,
            Some(v) => (self.prime as f64).powi(-(v as i32)),
        }
    }
}

impl PartialOrd for UltraNorm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        if self.prime != other.prime {
            return None;
        }
        match (self.valuation, other.valuation) {
            (None, None) => Some(std::cmp::Ordering::Equal),
            (None, Some(_)) => Some(std::cmp::Ordering::Less),
            (Some(_), None) => Some(std::cmp::Ordering::Greater),
            // Larger valuation means smaller norm.
            (Some(a), Some(b)) => Some(b.cmp(&a)),
        }
    }
}

/// The field Q_p at a fixed significant-digit budget.
#[derive(Clone, Debug)]
pub struct PadicCarrier {
    pub prime: u32,
    pub precision: usize,
}

impl PadicCarrier {
    pub fn new(prime: u32, precision: usize) -> Self {
        PadicCarrier { prime, precision }
    }

    pub fn from_rational(&self, numer: i64, denom: i64) -> Result<PAdicNumber> {
        PAdicNumber::from_rational(numer, denom, self.prime, self.precision)
    }

    /// |2| in this field as an exact power sum: p^(−v_p(2)).
    pub fn abs_two(&self) -> PowSum {
        let v2: i64 = if self.prime == 2 { 1 } else { 0 };
        PowSum::power(self.prime, Ratio::from_integer(-v2))
    }
}

impl Carrier for PadicCarrier {
    type Point = PAdicNumber;
    type Norm = UltraNorm;
    type Tol = i64;

    fn zero(&self) -> PAdicNumber {
        PAdicNumber::zero(self.prime, self.precision)
    }

    fn add(&self, a: &PAdicNumber, b: &PAdicNumber) -> PAdicNumber {
        a.add(b).expect("carrier points share a prime")
    }

    fn sub(&self, a: &PAdicNumber, b: &PAdicNumber) -> PAdicNumber {
        a.sub(b).expect("carrier points share a prime")
    }

    fn neg(&self, a: &PAdicNumber) -> PAdicNumber {
        a.neg()
    }

    fn scale_pow2(&self, a: &PAdicNumber, k: i64) -> PAdicNumber {
        a.scale_pow2(k)
    }

    fn norm(&self, a: &PAdicNumber) -> UltraNorm {
        UltraNorm::of(a)
    }

    fn norm_f64(&self, n: &UltraNorm) -> f64 {
        n.to_f64()
    }

    fn is_zero_norm(&self, n: &UltraNorm) -> bool {
        n.is_zero()
    }

    fn within(&self, n: &UltraNorm, floor: i64) -> bool {
        n.at_most_scale(floor)
    }

    /// Converged once the last two successive differences both sit at or
    /// below the valuation floor. A single step can cancel exactly (ceil
    /// plateaus in valuation-shift perturbations), so one quiet difference
    /// is not yet evidence of convergence.
    fn diffs_converged(&self, diffs: &[UltraNorm], floor: i64) -> bool {
        diffs.len() >= 2 && diffs[diffs.len() - 2..].iter().all(|d| d.at_most_scale(floor))
    }

    fn describe(&self, a: &PAdicNumber) -> String {
        a.to_string()
    }
}

/// A labelled report grid: the points certificates quantify over.
///
/// Deeper orbit points (x/2^n, 2^n x) are produced on demand by the carrier
/// arithmetic; `depth` documents how far iteration may walk.
pub struct Grid<C: Carrier> {
    pub carrier: C,
    pub points: Vec<GridPoint<C>>,
    pub depth: i64,
}

#[derive(Clone)]
pub struct GridPoint<C: Carrier> {
    pub id: String,
    pub point: C::Point,
}

impl<C: Carrier> Grid<C> {
    /// Build from seeds: each seed contributes `seed·2^k` for |k| ≤ levels,
    /// first occurrence wins on duplicates.
    pub fn from_seeds(
        carrier: C,
        seeds: Vec<(String, C::Point)>,
        levels: i64,
        depth: i64,
    ) -> Arc<Self> {
        let mut points: Vec<GridPoint<C>> = Vec::new();
        for (label, seed) in &seeds {
            for k in -levels..=levels {
                let point = carrier.scale_pow2(seed, k);
                if points.iter().any(|gp| gp.point == point) {
                    continue;
                }
                let id = if k == 0 {
                    label.clone()
                } else {
                    format!("{label}*2^{k}")
                };
                points.push(GridPoint { id, point });
            }
        }
        Arc::new(Grid { carrier, points, depth })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ultra_norm_order() {
        let a = UltraNorm { prime: 2, valuation: Some(1) }; // 1/2
        let b = UltraNorm { prime: 2, valuation: Some(-2) }; // 4
        let z = UltraNorm::zero(2);
        assert!(a < b);
        assert!(z < a);
        assert_eq!(z.partial_cmp(&z), Some(std::cmp::Ordering::Equal));
    }

    #[test]
    fn real_convergence_rules() {
        let c = RealCarrier::new(1);
        assert!(c.diffs_converged(&[0.5, 0.0], 1e-10));
        assert!(!c.diffs_converged(&[1e-12, 1e-12], 1e-10));
        assert!(c.diffs_converged(&[1e-11, 1e-12, 1e-13], 1e-10));
    }

    #[test]
    fn padic_convergence_needs_two_quiet_steps() {
        let c = PadicCarrier::new(2, 16);
        let quiet = UltraNorm { prime: 2, valuation: Some(25) };
        let loud = UltraNorm { prime: 2, valuation: Some(3) };
        let gone = UltraNorm::zero(2);
        assert!(!c.diffs_converged(&[loud.clone(), gone.clone()], 20));
        assert!(c.diffs_converged(&[loud, quiet, gone], 20));
    }

    #[test]
    fn grid_dedupes_orbit_collisions() {
        let c = RealCarrier::new(1);
        let seeds = vec![
            ("1".to_string(), c.scalar(1.0)),
            ("2".to_string(), c.scalar(2.0)),
        ];
        let grid = Grid::from_seeds(c, seeds, 1, 8);
        // 1·2^1 and the seed 2 collide; 2·2^-1 and the seed 1 collide.
        assert_eq!(grid.len(), 4);
    }
}
