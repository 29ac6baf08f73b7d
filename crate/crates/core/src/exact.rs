//! Exact arithmetic on finite sums `Σ c · p^q` with rational `c` and `q`.
//!
//! Ultrametric bound formulas mix rational coefficients with fractional
//! powers of the prime: `θ(2 + |2|^r)·‖x‖^r` with `r = 1/2` involves `√2`.
//! Sums of this shape are closed under addition, multiplication and scaling
//! by `p^q`, and their sign can be decided exactly: clearing exponent
//! denominators maps the value to a polynomial in `β = p^(1/d)`, which is
//! reduced modulo `X^d − p` (irreducible by Eisenstein, so the reduced form
//! vanishes only for the zero value) and then sign-isolated by rational
//! interval bisection. No floating point enters any comparison.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rational exponent of the prime.
pub type Exponent = Ratio<i64>;

pub fn exp_int(k: i64) -> Exponent {
    Ratio::from_integer(k)
}

/// A finite sum `Σ cᵢ · p^qᵢ` in canonical form: exponents unique and sorted,
/// no zero coefficients. The empty sum is the value 0.
#[derive(Clone, PartialEq)]
pub struct PowSum {
    prime: u32,
    terms: BTreeMap<Exponent, BigRational>,
}

impl PowSum {
    pub fn zero(prime: u32) -> Self {
        PowSum { prime, terms: BTreeMap::new() }
    }

    pub fn one(prime: u32) -> Self {
        Self::power(prime, exp_int(0))
    }

    /// The single term `p^q`.
    pub fn power(prime: u32, q: Exponent) -> Self {
        Self::term(prime, BigRational::one(), q)
    }

    /// The single term `c · p^q`.
    pub fn term(prime: u32, c: BigRational, q: Exponent) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(q, c);
        }
        PowSum { prime, terms }
    }

    pub fn rational(prime: u32, c: BigRational) -> Self {
        Self::term(prime, c, exp_int(0))
    }

    pub fn from_int(prime: u32, n: i64) -> Self {
        Self::rational(prime, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &BigRational)> {
        self.terms.iter()
    }

    fn insert(&mut self, q: Exponent, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(q) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.prime, other.prime, "prime mismatch in PowSum::add");
        let mut out = self.clone();
        for (q, c) in &other.terms {
            out.insert(*q, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(q, c)| (*q, -c.clone())).collect();
        PowSum { prime: self.prime, terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.prime);
        }
        let terms = self.terms.iter().map(|(q, k)| (*q, k * c)).collect();
        PowSum { prime: self.prime, terms }
    }

    /// Multiply by `p^q` (shift all exponents).
    pub fn shift(&self, q: Exponent) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (*e + q, c.clone())).collect();
        PowSum { prime: self.prime, terms }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.prime, other.prime, "prime mismatch in PowSum::mul");
        let mut out = Self::zero(self.prime);
        for (qa, ca) in &self.terms {
            for (qb, cb) in &other.terms {
                out.insert(qa + qb, ca * cb);
            }
        }
        out
    }

    /// Exact sign of the represented real value.
    pub fn sign(&self) -> Ordering {
        if self.terms.is_empty() {
            return Ordering::Equal;
        }
        let d = self
            .terms
            .keys()
            .fold(1i64, |acc, q| num_integer::lcm(acc, *q.denom()));
        debug_assert!(d >= 1);
        if d == 1 {
            // Purely rational value: sum the terms exactly.
            let mut total = BigRational::zero();
            for (q, c) in &self.terms {
                total += c * rational_prime_power(self.prime, q.to_integer());
            }
            return sign_of(&total);
        }
        // Integer exponents of β = p^(1/d), shifted to be nonnegative.
        let ks: Vec<(i64, &BigRational)> = self
            .terms
            .iter()
            .map(|(q, c)| ((q * d).to_integer(), c))
            .collect();
        let kmin = ks.iter().map(|(k, _)| *k).min().unwrap();
        // Reduce modulo β^d = p into a polynomial of degree < d.
        let mut poly = vec![BigRational::zero(); d as usize];
        for (k, c) in ks {
            let k = k - kmin;
            let (quot, rem) = (k.div_euclid(d), k.rem_euclid(d));
            poly[rem as usize] += c * rational_prime_power(self.prime, quot);
        }
        if poly.iter().all(|c| c.is_zero()) {
            return Ordering::Equal;
        }
        if poly.iter().skip(1).all(|c| c.is_zero()) {
            return sign_of(&poly[0]);
        }
        isolate_sign(&poly, self.prime, d)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        self.sub(other).sign()
    }

    pub fn le(&self, other: &Self) -> bool {
        self.cmp_value(other) != Ordering::Greater
    }

    pub fn max_value(self, other: Self) -> Self {
        if self.cmp_value(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        let p = self.prime as f64;
        self.terms
            .iter()
            .map(|(q, c)| c.to_f64().unwrap_or(f64::NAN) * p.powf(q.to_f64().unwrap()))
            .sum()
    }
}

impl fmt::Debug for PowSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for PowSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (q, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}*{}^({})", c, self.prime, q)?;
        }
        Ok(())
    }
}

fn sign_of(r: &BigRational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// p^k as an exact rational, k possibly negative.
fn rational_prime_power(prime: u32, k: i64) -> BigRational {
    let mag = BigInt::from(prime).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        BigRational::from_integer(mag)
    } else {
        BigRational::new(BigInt::one(), mag)
    }
}

/// Sign of `poly(β)` for `β = p^(1/d)`, `deg poly < d`, `poly ≠ 0`.
///
/// β is irrational, so a rational bisection midpoint never equals it, and
/// the reduced polynomial cannot vanish at β; the loop terminates.
fn isolate_sign(poly: &[BigRational], prime: u32, d: i64) -> Ordering {
    let p = BigRational::from_integer(BigInt::from(prime));
    let mut lo = BigRational::one();
    let mut hi = p.clone();
    for _ in 0..4096 {
        let (vlo, vhi) = interval_eval(poly, &lo, &hi);
        if vlo.is_positive() {
            return Ordering::Greater;
        }
        if vhi.is_negative() {
            return Ordering::Less;
        }
        let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
        if pow_rational(&mid, d as u32) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    unreachable!("sign isolation failed to converge; value too close to zero")
}

fn pow_rational(r: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= r;
    }
    acc
}

/// Interval image of the polynomial over `[lo, hi]` with `0 < lo ≤ hi`:
/// monomials are monotone on positive inputs.
fn interval_eval(
    poly: &[BigRational],
    lo: &BigRational,
    hi: &BigRational,
) -> (BigRational, BigRational) {
    let mut vlo = BigRational::zero();
    let mut vhi = BigRational::zero();
    let mut lo_pow = BigRational::one();
    let mut hi_pow = BigRational::one();
    for c in poly {
        if c.is_positive() {
            vlo += c * &lo_pow;
            vhi += c * &hi_pow;
        } else if c.is_negative() {
            vlo += c * &hi_pow;
            vhi += c * &lo_pow;
        }
        lo_pow *= lo;
        hi_pow *= hi;
    }
    (vlo, vhi)
}

/// A ratio of two `PowSum`s with strictly positive denominator. Bound radii
/// like `αφ(x,2x,x)/(|2|−|2|α)` live here; comparisons cross-multiply.
#[derive(Clone, Debug)]
pub struct PowRatio {
    num: PowSum,
    den: PowSum,
}

impl PowRatio {
    pub fn new(num: PowSum, den: PowSum) -> Self {
        assert_eq!(num.prime(), den.prime());
        assert_eq!(den.sign(), Ordering::Greater, "PowRatio denominator must be positive");
        PowRatio { num, den }
    }

    pub fn from_sum(num: PowSum) -> Self {
        let one = PowSum::one(num.prime());
        PowRatio { num, den: one }
    }

    pub fn zero(prime: u32) -> Self {
        Self::from_sum(PowSum::zero(prime))
    }

    pub fn num(&self) -> &PowSum {
        &self.num
    }

    pub fn den(&self) -> &PowSum {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        self.num.mul(&other.den).cmp_value(&other.num.mul(&self.den))
    }

    pub fn le(&self, other: &Self) -> bool {
        self.cmp_value(other) != Ordering::Greater
    }

    /// `self ≤ s` for a plain sum `s`.
    pub fn le_sum(&self, s: &PowSum) -> bool {
        self.num.le(&s.mul(&self.den))
    }

    pub fn mul_sum(&self, s: &PowSum) -> Self {
        PowRatio { num: self.num.mul(s), den: self.den.clone() }
    }

    pub fn max_value(self, other: Self) -> Self {
        if self.cmp_value(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.num.to_f64() / self.den.to_f64()
    }
}

/// Smallest integer `k` with `p^k ≥ value` (value strictly positive).
/// Estimated in floating point, then fixed up by exact comparison.
pub fn ceil_log_prime(value: &PowRatio) -> i64 {
    let prime = value.num().prime();
    assert!(!value.is_zero(), "ceil_log_prime of zero");
    let approx = value.to_f64();
    let mut k = if approx > 0.0 && approx.is_finite() {
        approx.log(prime as f64).ceil() as i64
    } else {
        0
    };
    // Exact fix-up: walk down while still dominating, up while not.
    while value.le_sum(&PowSum::power(prime, exp_int(k - 1))) {
        k -= 1;
    }
    while !value.le_sum(&PowSum::power(prime, exp_int(k))) {
        k += 1;
    }
    k
}
