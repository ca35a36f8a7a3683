//! Exact numbers used for distances and costs.
//!
//! Every distance in this crate is the square root of a nonnegative rational
//! ([`Surd`]). Costs are finite sums of such roots with rational coefficients
//! ([`RadicalSum`]) and are compared exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Returns the exact square root of `q` when `q` is the square of a rational.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().magnitude();
    let d = q.denom().magnitude();
    let rn = n.sqrt();
    if &(&rn * &rn) != n {
        return None;
    }
    let rd = d.sqrt();
    if &(&rd * &rd) != d {
        return None;
    }
    Some(Rational::new(BigInt::from(rn), BigInt::from(rd)))
}

/// Floor of `sqrt(q)` as an integer, `q >= 0`.
pub fn floor_sqrt(q: &Rational) -> BigInt {
    // floor(sqrt(n/d)) == floor(sqrt(floor(n/d)))
    let fl = q.floor().to_integer();
    BigInt::from(fl.magnitude().sqrt())
}

/// Ceiling of `sqrt(q)` as an integer, `q >= 0`.
pub fn ceil_sqrt(q: &Rational) -> BigInt {
    let f = floor_sqrt(q);
    if Rational::from_integer(&f * &f) == *q {
        f
    } else {
        f + 1
    }
}

/// Converts a rational to the nearest `f64`, falling back to a ratio of
/// floats when the numerator or denominator overflow.
pub fn to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Parses `p`, `p/q`, or a plain decimal such as `-0.125`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Value(s.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && digits.is_empty() {
            return Err(bad());
        }
        if !digits.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let mut all = String::with_capacity(digits.len() + frac.len());
        all.push_str(digits);
        all.push_str(frac);
        let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
        let d = num::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if negative { -q } else { q });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Canonical text form of a rational: `p` or `p/q` in lowest terms.
pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

/// The square root of a nonnegative rational.
///
/// Ordering and equality compare the squares, which agree with the order of
/// the roots.
#[derive(Clone, Debug)]
pub struct Surd {
    square: Rational,
    root: Option<Rational>,
}

impl Surd {
    pub fn zero() -> Surd {
        Surd { square: Rational::zero(), root: Some(Rational::zero()) }
    }

    /// `sqrt(square)`. Panics if `square` is negative.
    pub fn sqrt_of(square: Rational) -> Surd {
        assert!(!square.is_negative(), "square root of a negative rational");
        let root = rational_sqrt(&square);
        Surd { square, root }
    }

    /// The rational `value`, which must be nonnegative.
    pub fn from_rational(value: Rational) -> Surd {
        assert!(!value.is_negative(), "surd values are nonnegative");
        Surd { square: &value * &value, root: Some(value) }
    }

    pub fn from_int(n: i64) -> Surd {
        Surd::from_rational(int(n))
    }

    /// The rational whose root this is.
    pub fn square(&self) -> &Rational {
        &self.square
    }

    /// The value itself when it is rational.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.root.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    /// `self^power` for `power` in {1, 2}; `None` if the result is irrational.
    pub fn pow_rational(&self, power: u32) -> Option<Rational> {
        match power {
            1 => self.root.clone(),
            2 => Some(self.square.clone()),
            _ => self.root.as_ref().map(|r| num::pow(r.clone(), power as usize)),
        }
    }

    /// `self^power` as a surd, for `power` in {1, 2}.
    pub fn powi(&self, power: u32) -> Surd {
        match power {
            1 => self.clone(),
            2 => Surd::from_rational(self.square.clone()),
            _ => panic!("unsupported power {power}"),
        }
    }

    /// Multiplies by a nonnegative rational.
    pub fn scale(&self, factor: &Rational) -> Surd {
        assert!(!factor.is_negative(), "negative scale factor");
        Surd {
            square: &self.square * factor * factor,
            root: self.root.as_ref().map(|r| r * factor),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.root {
            Some(r) => to_f64(r),
            None => to_f64(&self.square).sqrt(),
        }
    }

    /// Smaller of two surds (by reference).
    pub fn min<'a>(&'a self, other: &'a Surd) -> &'a Surd {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl PartialEq for Surd {
    fn eq(&self, other: &Self) -> bool {
        self.square == other.square
    }
}

impl Eq for Surd {}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Self) -> Ordering {
        self.square.cmp(&other.square)
    }
}

impl std::hash::Hash for Surd {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.square.hash(state)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.root {
            Some(r) => write!(f, "{r}"),
            None => write!(f, "sqrt({})", self.square),
        }
    }
}

impl FromStr for Surd {
    type Err = Error;

    /// Accepts a nonnegative rational or `sqrt(q)`.
    fn from_str(s: &str) -> Result<Surd> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            let q = parse_rational(inner)?;
            if q.is_negative() {
                return Err(Error::Value(s.to_string()));
            }
            return Ok(Surd::sqrt_of(q));
        }
        let q = parse_rational(t)?;
        if q.is_negative() {
            return Err(Error::Value(s.to_string()));
        }
        Ok(Surd::from_rational(q))
    }
}

/// A finite sum `r + sum c_i * sqrt(q_i)` with rational `r`, `c_i`, `q_i`.
///
/// Radicands that are perfect squares are folded into the rational part, and
/// zero coefficients are dropped, so the representation of a rational value
/// has an empty radical map. Different radicands may still be rational
/// multiples of each other (`sqrt(8)` and `sqrt(2)`); comparison handles that.
#[derive(Clone, Debug, Default)]
pub struct RadicalSum {
    rational: Rational,
    radicals: BTreeMap<Rational, Rational>,
}

impl RadicalSum {
    pub fn zero() -> RadicalSum {
        RadicalSum::default()
    }

    pub fn from_rational(r: Rational) -> RadicalSum {
        RadicalSum { rational: r, radicals: BTreeMap::new() }
    }

    pub fn from_int(n: i64) -> RadicalSum {
        RadicalSum::from_rational(int(n))
    }

    pub fn from_surd(s: &Surd) -> RadicalSum {
        let mut out = RadicalSum::zero();
        out.add_surd(s, &Rational::one());
        out
    }

    /// `c * sqrt(q)`.
    pub fn radical(coef: Rational, radicand: Rational) -> RadicalSum {
        let mut out = RadicalSum::zero();
        out.add_surd(&Surd::sqrt_of(radicand), &coef);
        out
    }

    /// Adds `coef * s` in place.
    pub fn add_surd(&mut self, s: &Surd, coef: &Rational) {
        if coef.is_zero() || s.is_zero() {
            return;
        }
        match &s.root {
            Some(r) => self.rational += r * coef,
            None => {
                let entry = self.radicals.entry(s.square.clone()).or_insert_with(Rational::zero);
                *entry += coef;
                if entry.is_zero() {
                    self.radicals.remove(&s.square);
                }
            }
        }
    }

    /// Adds `mult * s` in place.
    pub fn add_surd_times(&mut self, s: &Surd, mult: u64) {
        if mult == 1 {
            self.add_surd(s, &Rational::one());
        } else {
            self.add_surd(s, &Rational::from_integer(BigInt::from(mult)));
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    /// The radical terms as `(radicand, coefficient)` pairs.
    pub fn radical_terms(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.radicals.iter()
    }

    /// The value as a rational, if it is one.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.radicals.is_empty() {
            return Some(self.rational.clone());
        }
        let merged = self.merged();
        if merged.1.is_empty() {
            Some(merged.0)
        } else {
            None
        }
    }

    pub fn scale(&self, factor: &Rational) -> RadicalSum {
        if factor.is_zero() {
            return RadicalSum::zero();
        }
        RadicalSum {
            rational: &self.rational * factor,
            radicals: self.radicals.iter().map(|(q, c)| (q.clone(), c * factor)).collect(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        let mut v = to_f64(&self.rational);
        for (q, c) in &self.radicals {
            v += to_f64(c) * to_f64(q).sqrt();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.signum() == Ordering::Equal
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    /// Exact sign of the value.
    pub fn signum(&self) -> Ordering {
        if self.radicals.is_empty() {
            return self.rational.cmp(&Rational::zero());
        }
        if let Some(sign) = self.float_sign() {
            return sign;
        }
        let mut bits = 96u64;
        while bits < 384 {
            let (lo, hi) = self.fixed_point_bounds(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
        let (r, terms) = self.merged();
        if terms.is_empty() {
            return r.cmp(&Rational::zero());
        }
        // Square roots of rationals whose pairwise ratios are not squares are
        // linearly independent over the rationals, so the merged sum is
        // nonzero and refinement terminates.
        RadicalSum { rational: r, radicals: terms }.refine_nonzero(bits)
    }

    fn refine_nonzero(&self, mut bits: u64) -> Ordering {
        loop {
            let (lo, hi) = self.fixed_point_bounds(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    /// Sign from a double-precision estimate when the estimate clearly
    /// dominates the accumulated rounding error.
    fn float_sign(&self) -> Option<Ordering> {
        let mut est = to_f64(&self.rational);
        let mut mag = est.abs();
        for (q, c) in &self.radicals {
            let t = to_f64(c) * to_f64(q).sqrt();
            est += t;
            mag += t.abs();
        }
        if !est.is_finite() || !mag.is_finite() || mag == 0.0 || mag < 1e-250 {
            return None;
        }
        if est.abs() > 1e-9 * mag {
            Some(if est > 0.0 { Ordering::Greater } else { Ordering::Less })
        } else {
            None
        }
    }

    /// Integers `lo <= value * 2^bits <= hi`.
    fn fixed_point_bounds(&self, bits: u64) -> (BigInt, BigInt) {
        let scale = BigInt::one() << bits;
        let r = &self.rational * Rational::from_integer(scale.clone());
        let mut lo = r.floor().to_integer();
        let mut hi = r.ceil().to_integer();
        for (q, c) in &self.radicals {
            // sqrt(a/b) * 2^bits = sqrt(a*b*4^bits) / b
            let a = q.numer();
            let b = q.denom();
            let big = (a * b) << (2 * bits);
            let l = BigInt::from(big.magnitude().sqrt());
            let u = &l + 1;
            // c * [l, u] / b, with c = cn/cd and cd > 0
            let cn = c.numer();
            let den = c.denom() * b;
            let (x, y) = if cn.sign() == Sign::Minus { (cn * &u, cn * &l) } else { (cn * &l, cn * &u) };
            lo += x.div_floor(&den);
            hi += -((-y).div_floor(&den));
        }
        (lo, hi)
    }

    /// Merges radicands that differ by a rational square factor. Returns the
    /// rational part and the surviving radicals; the value is zero iff both
    /// are zero.
    fn merged(&self) -> (Rational, BTreeMap<Rational, Rational>) {
        let mut rational = self.rational.clone();
        let mut reps: Vec<(Rational, Rational)> = Vec::new();
        for (q, c) in &self.radicals {
            if let Some(root) = rational_sqrt(q) {
                rational += c * root;
                continue;
            }
            let mut placed = false;
            for (rep, coef) in reps.iter_mut() {
                if let Some(ratio) = rational_sqrt(&(q / &*rep)) {
                    *coef += c * ratio;
                    placed = true;
                    break;
                }
            }
            if !placed {
                reps.push((q.clone(), c.clone()));
            }
        }
        let radicals = reps.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        (rational, radicals)
    }
}

impl PartialEq for RadicalSum {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RadicalSum {}

impl PartialOrd for RadicalSum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RadicalSum {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl From<Rational> for RadicalSum {
    fn from(r: Rational) -> Self {
        RadicalSum::from_rational(r)
    }
}

impl From<&Surd> for RadicalSum {
    fn from(s: &Surd) -> Self {
        RadicalSum::from_surd(s)
    }
}

impl AddAssign<&RadicalSum> for RadicalSum {
    fn add_assign(&mut self, rhs: &RadicalSum) {
        self.rational += &rhs.rational;
        for (q, c) in &rhs.radicals {
            let entry = self.radicals.entry(q.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                self.radicals.remove(q);
            }
        }
    }
}

impl SubAssign<&RadicalSum> for RadicalSum {
    fn sub_assign(&mut self, rhs: &RadicalSum) {
        *self += &(-rhs);
    }
}

impl Add<&RadicalSum> for &RadicalSum {
    type Output = RadicalSum;
    fn add(self, rhs: &RadicalSum) -> RadicalSum {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&RadicalSum> for &RadicalSum {
    type Output = RadicalSum;
    fn sub(self, rhs: &RadicalSum) -> RadicalSum {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for RadicalSum {
    type Output = RadicalSum;
    fn add(mut self, rhs: RadicalSum) -> RadicalSum {
        self += &rhs;
        self
    }
}

impl Sub for RadicalSum {
    type Output = RadicalSum;
    fn sub(mut self, rhs: RadicalSum) -> RadicalSum {
        self -= &rhs;
        self
    }
}

impl Neg for &RadicalSum {
    type Output = RadicalSum;
    fn neg(self) -> RadicalSum {
        RadicalSum {
            rational: -&self.rational,
            radicals: self.radicals.iter().map(|(q, c)| (q.clone(), -c)).collect(),
        }
    }
}

impl Neg for RadicalSum {
    type Output = RadicalSum;
    fn neg(self) -> RadicalSum {
        -&self
    }
}

impl fmt::Display for RadicalSum {
    /// Writes e.g. `3/2 - sqrt(7/2) + 2*sqrt(5)`, radicands ascending.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.rational.is_zero() || self.radicals.is_empty() {
            write!(f, "{}", self.rational)?;
            first = false;
        }
        for (q, c) in &self.radicals {
            let negative = c.is_negative();
            let mag = c.abs();
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { '-' } else { '+' })?;
            }
            first = false;
            if mag.is_one() {
                write!(f, "sqrt({q})")?;
            } else {
                write!(f, "{mag}*sqrt({q})")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn surd_roundtrip_and_order() {
        let a: Surd = "sqrt(2)".parse().unwrap();
        let b: Surd = "sqrt(9/4)".parse().unwrap();
        assert_eq!(b.as_rational(), Some(&rat(3, 2)));
        assert_eq!(b.to_string(), "3/2");
        assert_eq!(a.to_string(), "sqrt(2)");
        assert!(a < b);
        assert!("sqrt(-1)".parse::<Surd>().is_err());
    }

    #[test]
    fn radical_sign_basics() {
        // sqrt(2) + sqrt(3) vs sqrt(10)
        let mut s = RadicalSum::radical(int(1), int(2));
        s += &RadicalSum::radical(int(1), int(3));
        let t = RadicalSum::radical(int(1), int(10));
        assert!(s < t);
        // sqrt(8) - 2 sqrt(2) == 0
        let mut z = RadicalSum::radical(int(1), int(8));
        z -= &RadicalSum::radical(int(2), int(2));
        assert!(z.is_zero());
        // sqrt(1/2) - sqrt(2)/2 == 0
        let mut w = RadicalSum::radical(int(1), rat(1, 2));
        w -= &RadicalSum::radical(rat(1, 2), int(2));
        assert!(w.is_zero());
        assert_eq!(w.as_rational(), Some(Rational::zero()));
    }

    #[test]
    fn radical_sign_near_cancellation() {
        // sqrt(10^20 + 1) - 10^10 is about 5e-11 > 0
        let big = BigInt::from(10u64).pow(20u32);
        let mut s = RadicalSum::radical(int(1), Rational::from_integer(big + 1));
        s -= &RadicalSum::from_rational(Rational::from_integer(BigInt::from(10u64).pow(10u32)));
        assert!(s.is_positive());
        // 10^10 + 1 - sqrt(10^20 + 2*10^10) is about 5e-11 > 0
        let t10 = BigInt::from(10u64).pow(10u32);
        let sq = &t10 * &t10 + &t10 * 2;
        let mut u = RadicalSum::from_rational(Rational::from_integer(t10 + 1));
        u -= &RadicalSum::radical(int(1), Rational::from_integer(sq));
        assert!(u.is_positive());
    }

    #[test]
    fn display_is_readable() {
        let mut s = RadicalSum::from_rational(rat(3, 2));
        s += &RadicalSum::radical(int(2), int(5));
        s += &RadicalSum::radical(int(-1), rat(7, 2));
        assert_eq!(s.to_string(), "3/2 - sqrt(7/2) + 2*sqrt(5)");
        assert_eq!(RadicalSum::zero().to_string(), "0");
        assert_eq!(RadicalSum::radical(int(-1), int(2)).to_string(), "-sqrt(2)");
    }

    #[test]
    fn sqrt_bounds() {
        assert_eq!(floor_sqrt(&int(10)), BigInt::from(3));
        assert_eq!(ceil_sqrt(&int(10)), BigInt::from(4));
        assert_eq!(ceil_sqrt(&int(9)), BigInt::from(3));
        assert_eq!(ceil_sqrt(&rat(9, 4)), BigInt::from(2));
    }
}
