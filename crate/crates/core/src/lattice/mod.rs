//! The product measure `eta = mu_a x mu_b`, its skewed projections, and the
//! rotation-driven rectangle families used to compute grid masses.

mod cover;
mod engine;
mod family;
mod rotation;

use std::cmp::Ordering;
use std::fmt;

use rug::Rational;

use crate::diophantine::{ratio_class, RatioClass};
use crate::error::{precondition, Error, Result};
use crate::measures::CantorParam;
use crate::real::{parse_rational, rpow, Real, DEFAULT_PREC, MAX_PREC};

pub use cover::{cover_tau, good_cover, renormalized_cover, GoodCover, RenormalizedCover};
pub use engine::{eta_strip_mass, grid_masses, tau, tau_rel, total_mass, GridSpec, TauBound, TauOptions};
pub use family::{
    children, enumerate_x, enumerate_y, partition_check, root_node, y_family, IndexPair, NodeKind, PartitionReport, RectNode,
};
pub use rotation::{build_rotation, RotationScheme};

/// Two Cantor parameters with `a <= b < 1/2`.
#[derive(Clone, Debug)]
pub struct PairParam {
    pa: CantorParam,
    pb: CantorParam,
    ratio: RatioClass,
    dim_sum: Real,
}

impl PairParam {
    pub fn new(pa: CantorParam, pb: CantorParam) -> Result<Self> {
        pa.require_strict()?;
        pb.require_strict()?;
        if pa.a() > pb.a() {
            return precondition(format!("need a <= b, got a = {} and b = {}", pa.a(), pb.a()));
        }
        let ratio = ratio_class(pa.a(), pb.a());
        let dim_sum = pa.dimension().add(pb.dimension());
        Ok(PairParam { pa, pb, ratio, dim_sum })
    }

    pub fn from_ratios(a: Rational, b: Rational) -> Result<Self> {
        PairParam::new(CantorParam::new(a)?, CantorParam::new(b)?)
    }

    pub fn parse(a: &str, b: &str) -> Result<Self> {
        PairParam::new(CantorParam::parse(a)?, CantorParam::parse(b)?)
    }

    /// Puts an arbitrary ordered pair into `a <= b` form. `X + l Y` and
    /// `l (Y + X / l)` differ by a scaling, so the skew is inverted on a swap.
    pub fn normalized(pa: CantorParam, pb: CantorParam, skew: Skew) -> Result<(Self, Skew, bool)> {
        if pa.a() > pb.a() {
            Ok((PairParam::new(pb, pa)?, skew.recip(), true))
        } else {
            Ok((PairParam::new(pa, pb)?, skew, false))
        }
    }

    pub fn pa(&self) -> &CantorParam {
        &self.pa
    }

    pub fn pb(&self) -> &CantorParam {
        &self.pb
    }

    pub fn a(&self) -> &Rational {
        self.pa.a()
    }

    pub fn b(&self) -> &Rational {
        self.pb.a()
    }

    pub fn ratio_class(&self) -> &RatioClass {
        &self.ratio
    }

    pub fn dim_sum(&self) -> &Real {
        &self.dim_sum
    }
}

impl fmt::Display for PairParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a={}, b={})", self.a(), self.b())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum SkewBase {
    One,
    Exp(Rational),
    Fixed(Real),
}

/// The skew `lambda = e^s > 0`, kept in a form that can be re-evaluated at
/// any precision: `factor * base` with `base` one of `1`, `e^s`, or a fixed
/// enclosure.
#[derive(Clone, Debug, PartialEq)]
pub struct Skew {
    factor: Rational,
    base: SkewBase,
}

impl Skew {
    pub fn from_lambda(lambda: Rational) -> Result<Self> {
        if lambda <= 0 {
            return precondition(format!("lambda = {lambda} must be positive"));
        }
        Ok(Skew { factor: lambda, base: SkewBase::One })
    }

    pub fn from_log(s: Rational) -> Self {
        if s == 0 {
            return Skew { factor: Rational::from(1), base: SkewBase::One };
        }
        Skew { factor: Rational::from(1), base: SkewBase::Exp(s) }
    }

    pub fn from_enclosure(lambda: Real) -> Result<Self> {
        if !lambda.is_positive() || !lambda.is_finite() {
            return precondition(format!("lambda enclosure {lambda} must be positive"));
        }
        Ok(Skew { factor: Rational::from(1), base: SkewBase::Fixed(lambda) })
    }

    /// `p/q` for an exact lambda, `s=<rational>` for `lambda = e^s`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("s=") {
            let s = parse_rational(rest).map_err(|e| shift_parse(e, text, 2))?;
            return Ok(Skew::from_log(s));
        }
        Skew::from_lambda(parse_rational(t)?)
    }

    pub fn exact(&self) -> Option<&Rational> {
        matches!(self.base, SkewBase::One).then_some(&self.factor)
    }

    pub fn lambda(&self, prec: u32) -> Real {
        let f = Real::from_rational(&self.factor, prec + 8);
        let v = match &self.base {
            SkewBase::One => f,
            SkewBase::Exp(s) => Real::from_rational(s, prec + 16).exp().mul(&f),
            SkewBase::Fixed(r) => r.mul(&f),
        };
        v.round_to(prec)
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda(64).mid_f64()
    }

    /// `s = log lambda`.
    pub fn log(&self, prec: u32) -> Real {
        let lf = Real::ln_rational(&self.factor, prec + 8);
        let v = match &self.base {
            SkewBase::One => lf,
            SkewBase::Exp(s) => lf.add(&Real::from_rational(s, prec + 8)),
            SkewBase::Fixed(r) => lf.add(&r.round_to(prec + 8).ln()),
        };
        v.round_to(prec)
    }

    pub fn scaled(&self, f: &Rational) -> Skew {
        Skew { factor: Rational::from(&self.factor * f), base: self.base.clone() }
    }

    pub fn recip(&self) -> Skew {
        let factor = Rational::from(self.factor.recip_ref());
        let base = match &self.base {
            SkewBase::One => SkewBase::One,
            SkewBase::Exp(s) => SkewBase::Exp(Rational::from(-s)),
            SkewBase::Fixed(r) => SkewBase::Fixed(r.recip()),
        };
        Skew { factor, base }
    }

    /// Certified comparison of lambda with a rational, raising precision as
    /// needed. Equality is only reported for exact skews.
    pub fn cmp_rational(&self, r: &Rational) -> Result<Ordering> {
        if let Some(l) = self.exact() {
            return Ok(l.cmp(r));
        }
        let mut prec = DEFAULT_PREC;
        loop {
            let l = self.lambda(prec);
            if l.lt_rational(r) {
                return Ok(Ordering::Less);
            }
            if l.gt_rational(r) {
                return Ok(Ordering::Greater);
            }
            if matches!(self.base, SkewBase::Fixed(_)) || prec >= MAX_PREC {
                return Err(Error::PrecisionCap { cap: prec, context: format!("comparing lambda = {self} with {r}") });
            }
            prec *= 2;
        }
    }
}

fn shift_parse(e: Error, input: &str, by: usize) -> Error {
    match e {
        Error::Parse { position, message, .. } => Error::Parse { input: input.to_string(), position: position + by, message },
        other => other,
    }
}

impl fmt::Display for Skew {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            SkewBase::One => write!(f, "{}", self.factor),
            SkewBase::Exp(s) if self.factor == 1 => write!(f, "exp({s})"),
            SkewBase::Exp(s) => write!(f, "{}*exp({s})", self.factor),
            SkewBase::Fixed(r) if self.factor == 1 => write!(f, "{r}"),
            SkewBase::Fixed(r) => write!(f, "{}*{r}", self.factor),
        }
    }
}

/// `[j a^n, (j+1) a^n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridInterval {
    pub n: u32,
    pub j: i64,
}

impl GridInterval {
    pub fn endpoints(&self, a: &Rational) -> (Rational, Rational) {
        let h = rpow(a, self.n);
        (Rational::from(&h * self.j), Rational::from(&h * (self.j + 1)))
    }
}
