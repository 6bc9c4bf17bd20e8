//! Outward-rounded interval arithmetic on MPFR floats, plus the small exact
//! rational helpers shared by every module.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round, Special};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PREC: u32 = 128;
pub const MAX_PREC: u32 = 4096;

/// Closed interval `[lo, hi]` with endpoints rounded outward.
#[derive(Clone, Debug, PartialEq)]
pub struct Real {
    lo: Float,
    hi: Float,
}

fn fdown(prec: u32, r: &Rational) -> Float {
    Float::with_val_round(prec, r, Round::Down).0
}

fn fup(prec: u32, r: &Rational) -> Float {
    Float::with_val_round(prec, r, Round::Up).0
}

impl Real {
    pub fn new(lo: Float, hi: Float) -> Self {
        debug_assert!(!(lo > hi), "inverted interval");
        Real { lo, hi }
    }

    pub fn point(x: Float) -> Self {
        Real { lo: x.clone(), hi: x }
    }

    pub fn whole(prec: u32) -> Self {
        Real { lo: Float::with_val(prec, Special::NegInfinity), hi: Float::with_val(prec, Special::Infinity) }
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        Real { lo: fdown(prec, r), hi: fup(prec, r) }
    }

    pub fn from_int(i: i64, prec: u32) -> Self {
        Real::from_integer(&Integer::from(i), prec)
    }

    pub fn from_integer(i: &Integer, prec: u32) -> Self {
        Real { lo: Float::with_val_round(prec, i, Round::Down).0, hi: Float::with_val_round(prec, i, Round::Up).0 }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        Real::point(Float::with_val(prec.max(53), x))
    }

    pub fn pi(prec: u32) -> Self {
        Real { lo: Float::with_val_round(prec, Constant::Pi, Round::Down).0, hi: Float::with_val_round(prec, Constant::Pi, Round::Up).0 }
    }

    pub fn ln2(prec: u32) -> Self {
        Real {
            lo: Float::with_val_round(prec, Constant::Log2, Round::Down).0,
            hi: Float::with_val_round(prec, Constant::Log2, Round::Up).0,
        }
    }

    /// Natural log of a positive rational.
    pub fn ln_rational(r: &Rational, prec: u32) -> Self {
        assert!(*r > 0, "log of nonpositive rational");
        Real::from_rational(r, prec + 8).ln().round_to(prec)
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn round_to(&self, prec: u32) -> Self {
        Real { lo: Float::with_val_round(prec, &self.lo, Round::Down).0, hi: Float::with_val_round(prec, &self.hi, Round::Up).0 }
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn mid(&self) -> Float {
        let p = self.prec() + 2;
        (Float::with_val(p, &self.lo + &self.hi)) / 2u32
    }

    pub fn width(&self) -> Float {
        Float::with_val_round(self.prec(), &self.hi - &self.lo, Round::Up).0
    }

    pub fn width_f64(&self) -> f64 {
        self.width().to_f64_round(Round::Up)
    }

    pub fn to_bounded(&self) -> BoundedValue {
        BoundedValue::new(self.lo_f64(), self.hi_f64())
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo.partial_cmp(r) != Some(Ordering::Greater) && self.hi.partial_cmp(r) != Some(Ordering::Less)
    }

    pub fn contains(&self, other: &Real) -> bool {
        self.lo <= other.lo && self.hi >= other.hi
    }

    /// True when every point of `self` is strictly below every point of `other`.
    pub fn lt(&self, other: &Real) -> bool {
        self.hi < other.lo
    }

    pub fn lt_rational(&self, r: &Rational) -> bool {
        self.hi.partial_cmp(r) == Some(Ordering::Less)
    }

    pub fn gt_rational(&self, r: &Rational) -> bool {
        self.lo.partial_cmp(r) == Some(Ordering::Greater)
    }

    pub fn hull(&self, other: &Real) -> Real {
        Real {
            lo: if self.lo < other.lo { self.lo.clone() } else { other.lo.clone() },
            hi: if self.hi > other.hi { self.hi.clone() } else { other.hi.clone() },
        }
    }

    pub fn intersect(&self, other: &Real) -> Option<Real> {
        let lo = if self.lo > other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi < other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| Real { lo: lo.clone(), hi: hi.clone() })
    }

    pub fn add(&self, o: &Real) -> Real {
        let p = self.prec().max(o.prec());
        Real { lo: Float::with_val_round(p, &self.lo + &o.lo, Round::Down).0, hi: Float::with_val_round(p, &self.hi + &o.hi, Round::Up).0 }
    }

    pub fn sub(&self, o: &Real) -> Real {
        let p = self.prec().max(o.prec());
        Real { lo: Float::with_val_round(p, &self.lo - &o.hi, Round::Down).0, hi: Float::with_val_round(p, &self.hi - &o.lo, Round::Up).0 }
    }

    pub fn neg(&self) -> Real {
        Real { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn mul(&self, o: &Real) -> Real {
        let p = self.prec().max(o.prec());
        let ends = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (x, y) in ends {
            let d = Float::with_val_round(p, x * y, Round::Down).0;
            let u = Float::with_val_round(p, x * y, Round::Up).0;
            if d.is_nan() || u.is_nan() {
                return Real::whole(p);
            }
            if lo.as_ref().map_or(true, |l| d < *l) {
                lo = Some(d);
            }
            if hi.as_ref().map_or(true, |h| u > *h) {
                hi = Some(u);
            }
        }
        Real { lo: lo.unwrap(), hi: hi.unwrap() }
    }

    pub fn mul_rational(&self, r: &Rational) -> Real {
        self.mul(&Real::from_rational(r, self.prec()))
    }

    pub fn sqr(&self) -> Real {
        let a = self.abs();
        let p = self.prec();
        Real {
            lo: Float::with_val_round(p, a.lo.square_ref(), Round::Down).0,
            hi: Float::with_val_round(p, a.hi.square_ref(), Round::Up).0,
        }
    }

    /// Reciprocal; the whole line if the interval meets zero.
    pub fn recip(&self) -> Real {
        let p = self.prec();
        if self.contains_zero() {
            return Real::whole(p);
        }
        let mut lo = self.hi.clone();
        lo.recip_round(Round::Down);
        let mut hi = self.lo.clone();
        hi.recip_round(Round::Up);
        Real { lo, hi }
    }

    pub fn div(&self, o: &Real) -> Real {
        self.mul(&o.recip())
    }

    pub fn abs(&self) -> Real {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let m = if -self.lo.clone() > self.hi { -self.lo.clone() } else { self.hi.clone() };
            Real { lo: Float::with_val(self.prec(), 0), hi: m }
        }
    }

    pub fn pow_u(&self, n: u32) -> Real {
        let mut base = self.clone();
        let mut acc = Real::from_int(1, self.prec());
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        acc
    }

    pub fn exp(&self) -> Real {
        let mut lo = self.lo.clone();
        lo.exp_round(Round::Down);
        let mut hi = self.hi.clone();
        hi.exp_round(Round::Up);
        Real { lo, hi }
    }

    /// Natural log; a lower endpoint at or below zero maps to -inf.
    pub fn ln(&self) -> Real {
        let p = self.prec();
        let lo = if self.lo > 0 {
            let mut l = self.lo.clone();
            l.ln_round(Round::Down);
            l
        } else {
            Float::with_val(p, Special::NegInfinity)
        };
        let hi = if self.hi > 0 {
            let mut h = self.hi.clone();
            h.ln_round(Round::Up);
            h
        } else {
            Float::with_val(p, Special::NegInfinity)
        };
        Real { lo, hi }
    }

    pub fn sqrt(&self) -> Real {
        let p = self.prec();
        let zero = Float::with_val(p, 0);
        let mut lo = if self.lo > 0 { self.lo.clone() } else { zero.clone() };
        lo.sqrt_round(Round::Down);
        let mut hi = if self.hi > 0 { self.hi.clone() } else { zero };
        hi.sqrt_round(Round::Up);
        Real { lo, hi }
    }

    /// Enclosure of `cos(pi * x)` over the interval.
    pub fn cos_pi(&self) -> Real {
        let p = self.prec();
        if !self.is_finite() || self.width() >= 2 {
            return Real { lo: Float::with_val(p, -1), hi: Float::with_val(p, 1) };
        }
        let mut a_lo = self.lo.clone();
        a_lo.cos_pi_round(Round::Down);
        let mut a_hi = self.lo.clone();
        a_hi.cos_pi_round(Round::Up);
        let mut b_lo = self.hi.clone();
        b_lo.cos_pi_round(Round::Down);
        let mut b_hi = self.hi.clone();
        b_hi.cos_pi_round(Round::Up);
        let mut lo = if a_lo < b_lo { a_lo } else { b_lo };
        let mut hi = if a_hi > b_hi { a_hi } else { b_hi };
        // interior extrema sit at the integers
        let first = self.lo.clone().ceil();
        let mut k = first;
        while k <= self.hi {
            let i = k.to_integer().expect("finite");
            if i.is_even() {
                hi = Float::with_val(p, 1);
            } else {
                lo = Float::with_val(p, -1);
            }
            k += 1u32;
        }
        Real { lo, hi }
    }

    pub fn cos(&self) -> Real {
        let p = self.prec();
        self.div(&Real::pi(p + 8)).round_to(p + 4).cos_pi().round_to(p)
    }

    pub fn sin(&self) -> Real {
        let p = self.prec();
        let half = Real::from_rational(&Rational::from((1, 2)), p + 8);
        self.div(&Real::pi(p + 8)).sub(&half).round_to(p + 4).cos_pi().round_to(p)
    }

    /// The integer part when both endpoints agree on it.
    pub fn floor_certain(&self) -> Option<Integer> {
        if !self.is_finite() {
            return None;
        }
        let a = self.lo.clone().floor();
        let b = self.hi.clone().floor();
        (a == b).then(|| a.to_integer().expect("finite"))
    }

    /// Integer nearest to the interval when the interval avoids the half-integers.
    pub fn nearest_integer_certain(&self) -> Option<Integer> {
        let half = Real::from_rational(&Rational::from((1, 2)), self.prec());
        self.add(&half).floor_certain()
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo_f64(), self.hi_f64())
    }
}

/// Double-precision enclosure `lo <= value <= hi`, rounded outward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedValue {
    pub lo: f64,
    pub hi: f64,
}

impl BoundedValue {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "inverted bound [{lo}, {hi}]");
        BoundedValue { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        BoundedValue { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Midpoint in log scale, `(ln lo + ln hi) / 2`.
    pub fn log_mid(&self) -> f64 {
        0.5 * (self.lo.ln() + self.hi.ln())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, o: &BoundedValue) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }
}

impl fmt::Display for BoundedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Exact rational enclosure of a probability mass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassBound {
    pub lo: Rational,
    pub hi: Rational,
}

impl MassBound {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        MassBound { lo, hi }
    }

    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    pub fn contains(&self, r: &Rational) -> bool {
        self.lo <= *r && *r <= self.hi
    }

    pub fn to_bounded(&self) -> BoundedValue {
        BoundedValue::new(
            Float::with_val_round(64, &self.lo, Round::Down).0.to_f64_round(Round::Down),
            Float::with_val_round(64, &self.hi, Round::Up).0.to_f64_round(Round::Up),
        )
    }
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::from((p, q))
}

pub fn rpow(r: &Rational, n: u32) -> Rational {
    Rational::from(r.pow(n))
}

/// Signed integer power, `r^n` for `n < 0` meaning `(1/r)^|n|`.
pub fn rpow_i(r: &Rational, n: i64) -> Rational {
    if n >= 0 {
        rpow(r, n as u32)
    } else {
        rpow(&Rational::from(r.recip_ref()), (-n) as u32)
    }
}

/// Parse `p/q`, an integer, or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let err = |position: usize, message: &str| Error::Parse { input: s.to_string(), position, message: message.to_string() };
    let t = s.trim();
    let offset = s.find(t).unwrap_or(0);
    if t.is_empty() {
        return Err(err(0, "empty rational"));
    }
    if let Some(slash) = t.find('/') {
        let num = parse_integer(&t[..slash]).map_err(|p| err(offset + p, "invalid numerator"))?;
        let den_str = &t[slash + 1..];
        let den = parse_integer(den_str).map_err(|p| err(offset + slash + 1 + p, "invalid denominator"))?;
        if den == 0 {
            return Err(err(offset + slash + 1, "zero denominator"));
        }
        return Ok(Rational::from((num, den)));
    }
    if let Some(dot) = t.find('.') {
        let int_part = &t[..dot];
        let frac = &t[dot + 1..];
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            let bad = frac.bytes().position(|c| !c.is_ascii_digit()).unwrap_or(0);
            return Err(err(offset + dot + 1 + bad, "invalid decimal digits"));
        }
        let neg = int_part.starts_with('-');
        let ip = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            Integer::new()
        } else {
            parse_integer(int_part).map_err(|p| err(offset + p, "invalid integer part"))?
        };
        let scale = Integer::from(10).pow(frac.len() as u32);
        let f = Integer::from_str_radix(frac, 10).map_err(|_| err(offset + dot + 1, "invalid decimal digits"))?;
        let mag = Rational::from((Integer::from(ip.abs_ref()) * &scale + f, scale));
        return Ok(if neg { -mag } else { mag });
    }
    parse_integer(t).map(Rational::from).map_err(|p| err(offset + p, "invalid integer"))
}

fn parse_integer(s: &str) -> std::result::Result<Integer, usize> {
    let bytes = s.as_bytes();
    let start = usize::from(matches!(bytes.first(), Some(b'-') | Some(b'+')));
    if start == bytes.len() {
        return Err(start);
    }
    if let Some(p) = bytes[start..].iter().position(|c| !c.is_ascii_digit()) {
        return Err(start + p);
    }
    Integer::from_str_radix(s, 10).map_err(|_| 0)
}
