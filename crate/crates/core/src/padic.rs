//! Fixed-precision arithmetic in the p-adic field Q_p.
//!
//! A nonzero value is `p^v · (d0 + d1·p + d2·p² + …)` with `d0 ≠ 0`: a
//! valuation `v` plus a window of `N` significant base-p digits, least
//! significant first. The ultrametric norm is `p^(−v)`, returned exactly as
//! a rational. Zero is canonical (empty digit window, norm 0).
//!
//! Precision is relative: every operation renormalizes the result and keeps
//! the worst-case correct window, so cancellation in a subtraction shows up
//! as a shorter digit window rather than silent garbage.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::PowSum;

#[derive(Clone, Debug)]
pub struct PAdicNumber {
    prime: u32,
    valuation: i64,
    /// Base-p digits, least significant first; empty iff the value is zero.
    /// For a nonzero value `digits[0] != 0` and `digits.len()` is the number
    /// of significant digits.
    digits: Vec<u32>,
    /// Significant-digit budget of the context that produced this value.
    /// Kept so that zero (which carries no digits) still remembers at which
    /// window it was asserted.
    precision: usize,
}

impl PartialEq for PAdicNumber {
    fn eq(&self, other: &Self) -> bool {
        self.prime == other.prime
            && self.valuation == other.valuation
            && self.digits == other.digits
    }
}

impl Eq for PAdicNumber {}

fn is_prime_u32(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// p-adic valuation of a nonzero integer: the number of factors of p.
fn int_valuation(n: &BigInt, p: u32) -> (i64, BigInt) {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut v = 0i64;
    let mut cur = n.clone();
    loop {
        let (q, r) = cur.div_rem(&p);
        if r.is_zero() {
            v += 1;
            cur = q;
        } else {
            return (v, cur);
        }
    }
}

fn modulus(prime: u32, precision: usize) -> BigUint {
    BigUint::from(prime).pow(precision as u32)
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    let a = BigInt::from(a.clone());
    let m_int = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m_int);
    debug_assert!(ext.gcd.is_one(), "mod_inverse of non-unit");
    let inv = ext.x.mod_floor(&m_int);
    inv.to_biguint().unwrap()
}

fn digits_of(residue: &BigUint, prime: u32, count: usize) -> Vec<u32> {
    let p = BigUint::from(prime);
    let mut out = Vec::with_capacity(count);
    let mut cur = residue.clone();
    for _ in 0..count {
        let (q, r) = cur.div_rem(&p);
        out.push(r.to_u32().unwrap());
        cur = q;
    }
    out
}

impl PAdicNumber {
    pub fn zero(prime: u32, precision: usize) -> Self {
        PAdicNumber { prime, valuation: 0, digits: Vec::new(), precision }
    }

    pub fn one(prime: u32, precision: usize) -> Self {
        Self::from_integer(1, prime, precision).expect("1 embeds in any Q_p")
    }

    pub fn from_integer(n: i64, prime: u32, precision: usize) -> Result<Self> {
        Self::from_rational(BigInt::from(n), BigInt::one(), prime, precision)
    }

    /// Embed the rational `numer/denom` to `precision` significant digits.
    pub fn from_rational(
        numer: impl Into<BigInt>,
        denom: impl Into<BigInt>,
        prime: u32,
        precision: usize,
    ) -> Result<Self> {
        let numer: BigInt = numer.into();
        let denom: BigInt = denom.into();
        if !is_prime_u32(prime) {
            return Err(Error::NonPrime(prime as u64));
        }
        if precision == 0 {
            return Err(Error::Config("precision must be at least 1".into()));
        }
        if denom.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if numer.is_zero() {
            return Ok(Self::zero(prime, precision));
        }
        let (vn, nu) = int_valuation(&numer, prime);
        let (vd, du) = int_valuation(&denom, prime);
        let m = modulus(prime, precision);
        let m_int = BigInt::from(m.clone());
        let nu_res = nu.mod_floor(&m_int).to_biguint().unwrap();
        let du_res = du.mod_floor(&m_int).to_biguint().unwrap();
        let residue = (nu_res * mod_inverse(&du_res, &m)) % &m;
        Ok(PAdicNumber {
            prime,
            valuation: vn - vd,
            digits: digits_of(&residue, prime, precision),
            precision,
        })
    }

    pub fn from_big_rational(q: &BigRational, prime: u32, precision: usize) -> Result<Self> {
        Self::from_rational(q.numer().clone(), q.denom().clone(), prime, precision)
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    /// Valuation of the value; `None` for zero (valuation +∞).
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.valuation)
        }
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Significant digits carried by this value.
    pub fn precision(&self) -> usize {
        if self.is_zero() {
            self.precision
        } else {
            self.digits.len()
        }
    }

    /// The unit part as an integer residue `d0 + d1·p + …` .
    fn residue(&self) -> BigUint {
        let p = BigUint::from(self.prime);
        let mut acc = BigUint::zero();
        for d in self.digits.iter().rev() {
            acc = acc * &p + BigUint::from(*d);
        }
        acc
    }

    /// Build from a raw residue at base valuation `v`, renormalizing so the
    /// leading digit is nonzero. `window` is the number of correct digits of
    /// `residue` at valuation `v`; cancellation shortens the kept window.
    fn from_residue(prime: u32, v: i64, residue: BigUint, window: usize) -> Self {
        if window == 0 {
            return Self::zero(prime, 1);
        }
        let m = modulus(prime, window);
        let mut r = residue % &m;
        if r.is_zero() {
            return Self::zero(prime, window);
        }
        let p = BigUint::from(prime);
        let mut shift = 0usize;
        loop {
            let (q, rem) = r.div_rem(&p);
            if rem.is_zero() {
                r = q;
                shift += 1;
            } else {
                break;
            }
        }
        if shift >= window {
            return Self::zero(prime, window);
        }
        let kept = window - shift;
        PAdicNumber {
            prime,
            valuation: v + shift as i64,
            digits: digits_of(&r, prime, kept),
            precision: kept,
        }
    }

    fn check_prime(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let v = self.valuation.min(other.valuation);
        // Absolute precision edge: digits beyond min(vᵢ + Nᵢ) are unknown.
        let edge = (self.valuation + self.digits.len() as i64)
            .min(other.valuation + other.digits.len() as i64);
        let window = (edge - v) as usize;
        let p = BigUint::from(self.prime);
        let a = self.residue() * p.pow((self.valuation - v) as u32);
        let b = other.residue() * p.pow((other.valuation - v) as u32);
        Ok(Self::from_residue(self.prime, v, a + b, window))
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = modulus(self.prime, self.digits.len());
        let r = (&m - self.residue() % &m) % &m;
        PAdicNumber {
            prime: self.prime,
            valuation: self.valuation,
            digits: digits_of(&r, self.prime, self.digits.len()),
            precision: self.digits.len(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.prime, self.precision().min(other.precision()).max(1)));
        }
        let n = self.digits.len().min(other.digits.len());
        let m = modulus(self.prime, n);
        let r = (self.residue() % &m) * (other.residue() % &m) % &m;
        Ok(PAdicNumber {
            prime: self.prime,
            valuation: self.valuation + other.valuation,
            digits: digits_of(&r, self.prime, n),
            precision: n,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero(self.prime, self.precision().min(other.precision()).max(1)));
        }
        let n = self.digits.len().min(other.digits.len());
        let m = modulus(self.prime, n);
        let inv = mod_inverse(&(other.residue() % &m), &m);
        let r = (self.residue() % &m) * inv % &m;
        Ok(PAdicNumber {
            prime: self.prime,
            valuation: self.valuation - other.valuation,
            digits: digits_of(&r, self.prime, n),
            precision: n,
        })
    }

    /// Division by 2. In Q_2 this lowers the valuation by one; for odd p it
    /// multiplies the unit part by the inverse of 2 and the norm is
    /// unchanged.
    pub fn halve(&self) -> Self {
        self.scale_pow2(-1)
    }

    /// Multiply by 2^k (k may be negative).
    pub fn scale_pow2(&self, k: i64) -> Self {
        if self.is_zero() || k == 0 {
            return self.clone();
        }
        if self.prime == 2 {
            let mut out = self.clone();
            out.valuation += k;
            return out;
        }
        let n = self.digits.len();
        let m = modulus(self.prime, n);
        let two = BigUint::from(2u32);
        let factor = if k >= 0 {
            two.modpow(&BigUint::from(k as u64), &m)
        } else {
            mod_inverse(&two, &m).modpow(&BigUint::from((-k) as u64), &m)
        };
        let r = self.residue() * factor % &m;
        PAdicNumber {
            prime: self.prime,
            valuation: self.valuation,
            digits: digits_of(&r, self.prime, n),
            precision: n,
        }
    }

    /// Multiply by p^k (pure valuation shift).
    pub fn shift_valuation(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.valuation += k;
        out
    }

    /// The norm `p^(−v)` as an exact rational; 0 for zero.
    pub fn norm(&self) -> BigRational {
        match self.valuation() {
            None => BigRational::zero(),
            Some(v) => {
                let mag = BigInt::from(self.prime).pow(v.unsigned_abs() as u32);
                if v >= 0 {
                    BigRational::new(BigInt::one(), mag)
                } else {
                    BigRational::from_integer(mag)
                }
            }
        }
    }

    /// The norm as an exact power sum (`p^(−v)` or zero).
    pub fn norm_powsum(&self) -> PowSum {
        match self.valuation() {
            None => PowSum::zero(self.prime),
            Some(v) => PowSum::power(self.prime, Ratio::from_integer(-v)),
        }
    }

    pub fn norm_f64(&self) -> f64 {
        match self.valuation() {
            None => 0.0,
            Some(v) => (self.prime as f64).powi(-(v as i32)),
        }
    }

    /// Parse either the canonical literal `Qp(p; v; d0,d1,…)` or a rational
    /// literal `rat(a/b)` / `a/b` / `a` (embedded with the supplied context).
    pub fn parse(s: &str, default_prime: u32, default_precision: usize) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("Qp(").and_then(|t| t.strip_suffix(')')) {
            let parts: Vec<&str> = body.split(';').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!(
                    "expected Qp(p; v; d0,d1,...), got `{s}`"
                )));
            }
            let prime: u32 = parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad prime in `{s}`")))?;
            if !is_prime_u32(prime) {
                return Err(Error::NonPrime(prime as u64));
            }
            let valuation: i64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad valuation in `{s}`")))?;
            let digit_part = parts[2].trim();
            let digits: Vec<u32> = if digit_part.is_empty() {
                Vec::new()
            } else {
                digit_part
                    .split(',')
                    .map(|d| {
                        d.trim()
                            .parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad digit `{d}` in `{s}`")))
                    })
                    .collect::<Result<_>>()?
            };
            if digits.iter().any(|&d| d >= prime) {
                return Err(Error::Parse(format!("digit out of range for base {prime}")));
            }
            if digits.is_empty() {
                return Ok(Self::zero(prime, default_precision));
            }
            if digits[0] == 0 {
                return Err(Error::Parse(
                    "leading digit of a nonzero value must be nonzero".into(),
                ));
            }
            let precision = digits.len();
            return Ok(PAdicNumber { prime, valuation, digits, precision });
        }
        let body = s
            .strip_prefix("rat(")
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(s);
        let (num_str, den_str) = match body.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (body.trim(), "1"),
        };
        let numer: BigInt = num_str
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational literal `{s}`")))?;
        let denom: BigInt = den_str
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational literal `{s}`")))?;
        Self::from_rational(numer, denom, default_prime, default_precision)
    }
}

impl fmt::Display for PAdicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Qp({}; {}; ", self.prime, self.valuation)?;
        let mut first = true;
        for d in &self.digits {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q2(n: i64, d: i64) -> PAdicNumber {
        PAdicNumber::from_rational(BigInt::from(n), BigInt::from(d), 2, 8).unwrap()
    }

    #[test]
    fn twelve_in_q2() {
        // 12 = 2²·3, so valuation 2 and unit digits of 3.
        let x = q2(12, 1);
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.digits(), &[1, 1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(x.norm(), BigRational::new(BigInt::one(), BigInt::from(4)));
    }

    #[test]
    fn one_has_norm_one() {
        for p in [2u32, 3, 5] {
            let one = PAdicNumber::from_integer(1, p, 6).unwrap();
            assert_eq!(one.valuation(), Some(0));
            assert_eq!(one.digits()[0], 1);
            assert!(one.digits()[1..].iter().all(|&d| d == 0));
            assert_eq!(one.norm(), BigRational::one());
            // |−1| = 1 as well.
            assert_eq!(one.neg().norm(), BigRational::one());
        }
    }

    #[test]
    fn inverse_of_three_multiplies_back() {
        let third = q2(1, 3);
        let three = q2(3, 1);
        let back = third.mul(&three).unwrap();
        let residual = back.sub(&q2(1, 1)).unwrap();
        // 3·(1/3) − 1 vanishes to the full 8-digit window.
        assert!(residual.is_zero());
    }

    #[test]
    fn ultrametric_sum_example() {
        let x = q2(2, 1);
        let y = q2(4, 1);
        let s = x.add(&y).unwrap();
        assert_eq!(s, q2(6, 1));
        assert_eq!(s.norm(), BigRational::new(BigInt::one(), BigInt::from(2)));
    }

    #[test]
    fn sub_self_is_canonical_zero() {
        let x = q2(7, 5);
        let z = x.sub(&x).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.digits().len(), 0);
        assert_eq!(z.norm(), BigRational::zero());
    }

    #[test]
    fn mul_identity() {
        let x = q2(-9, 7);
        assert_eq!(x.mul(&q2(1, 1)).unwrap(), x);
    }

    #[test]
    fn halving() {
        let two = q2(2, 1);
        let h = two.halve();
        assert_eq!(h, q2(1, 1));
        assert_eq!(h.norm(), BigRational::one());
        let one_half = q2(1, 1).halve();
        assert_eq!(one_half.valuation(), Some(-1));
        assert_eq!(one_half.norm(), BigRational::from_integer(BigInt::from(2)));
        // 2 is a unit in Q_3: the norm is unchanged.
        let one_q3 = PAdicNumber::from_integer(1, 3, 8).unwrap();
        assert_eq!(one_q3.halve().norm(), BigRational::one());
        let back = one_q3.halve().scale_pow2(1);
        assert_eq!(back, one_q3);
    }

    #[test]
    fn norm_of_unit_denominator() {
        assert_eq!(q2(1, 3).norm(), BigRational::one());
    }

    #[test]
    fn cancellation_shortens_window() {
        // (1 + 2^5) − 1 keeps 8−5 = 3 significant digits at valuation 5.
        let a = q2(33, 1);
        let b = q2(1, 1);
        let d = a.sub(&b).unwrap();
        assert_eq!(d.valuation(), Some(5));
        assert_eq!(d.precision(), 3);
    }

    #[test]
    fn prime_mismatch_rejected() {
        let x = q2(1, 1);
        let y = PAdicNumber::from_integer(1, 3, 8).unwrap();
        assert!(matches!(x.add(&y), Err(Error::PrimeMismatch(2, 3))));
    }

    #[test]
    fn division_errors() {
        let x = q2(1, 1);
        let z = PAdicNumber::zero(2, 8);
        assert!(matches!(x.div(&z), Err(Error::DivisionByZero)));
        assert!(matches!(
            PAdicNumber::from_integer(1, 4, 8),
            Err(Error::NonPrime(4))
        ));
        assert!(matches!(
            PAdicNumber::from_rational(BigInt::one(), BigInt::zero(), 2, 8),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn literal_round_trip() {
        let x = q2(-12, 5);
        let s = x.to_string();
        let y = PAdicNumber::parse(&s, 2, 8).unwrap();
        assert_eq!(x, y);
        let z = PAdicNumber::parse("rat(-12/5)", 2, 8).unwrap();
        assert_eq!(x, z);
        let zero = PAdicNumber::parse("Qp(2; 0; )", 2, 8).unwrap();
        assert!(zero.is_zero());
        assert!(PAdicNumber::parse("Qp(2; 0; 0,1)", 2, 8).is_err());
        assert!(PAdicNumber::parse("Qp(2; 0; 3)", 2, 8).is_err());
    }
}
