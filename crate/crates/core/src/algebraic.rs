//! Pisot certification for monic integer polynomials.
//!
//! Roots are approximated by Aberth iteration in MPFR and then certified with
//! Smith's inclusion disks: for distinct approximations `z_i` of the roots of
//! a monic degree-`d` polynomial, the disks `|z - z_i| <= d |p(z_i)| / prod_{j != i} |z_i - z_j|`
//! cover all roots, and a disk disjoint from the others holds exactly one.
//! The radii are evaluated in interval arithmetic, so a disjoint family is a
//! proof of isolation.

use std::fmt;

use rug::float::Round;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::real::{Real, MAX_PREC};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Irreducibility {
    Irreducible,
    Reducible(String),
    /// Degree above 4: taken on the caller's word.
    Asserted,
}

/// Monic integer polynomial, coefficients stored constant term first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    coeffs: Vec<Integer>,
    irreducibility: Irreducibility,
}

impl IntPolynomial {
    pub fn new(coeffs: Vec<Integer>) -> Result<Self> {
        if coeffs.len() < 2 {
            return precondition("polynomial must have degree at least 1");
        }
        if *coeffs.last().unwrap() != 1 {
            return precondition(format!("polynomial must be monic, leading coefficient is {}", coeffs.last().unwrap()));
        }
        let irreducibility = check_irreducible(&coeffs);
        Ok(IntPolynomial { coeffs, irreducibility })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        IntPolynomial::new(coeffs.iter().map(|&c| Integer::from(c)).collect())
    }

    /// Comma-separated integers, constant term first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut coeffs = Vec::new();
        let mut pos = 0;
        for part in text.split(',') {
            let t = part.trim();
            let c = t.parse::<Integer>().map_err(|_| Error::Parse {
                input: text.to_string(),
                position: pos + (part.len() - part.trim_start().len()),
                message: format!("{t:?} is not an integer"),
            })?;
            coeffs.push(c);
            pos += part.len() + 1;
        }
        IntPolynomial::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn irreducibility(&self) -> &Irreducibility {
        &self.irreducibility
    }

    /// Power sums `s_k = sum_i theta_i^k` for `k = 0..=upto`, by Newton's identities.
    pub fn power_sums(&self, upto: usize) -> Vec<Integer> {
        let d = self.degree();
        // c(i) is the coefficient of x^(d - i)
        let c = |i: usize| &self.coeffs[d - i];
        let mut s: Vec<Integer> = Vec::with_capacity(upto + 1);
        s.push(Integer::from(d));
        for k in 1..=upto {
            let mut acc = Integer::new();
            for i in 1..=k.min(d) {
                if i == k {
                    acc += Integer::from(c(i) * k as u64);
                } else {
                    acc += Integer::from(c(i) * &s[k - i]);
                }
            }
            s.push(-acc);
        }
        s
    }

    pub fn eval(&self, x: &Real) -> Real {
        let p = x.prec();
        let mut acc = Real::from_int(0, p);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&Real::from_integer(c, p));
        }
        acc
    }

    /// `p(x + iy)` over a complex rectangle, as (real part, imaginary part).
    pub fn eval_complex(&self, re: &Real, im: &Real) -> (Real, Real) {
        let z = CI { re: re.clone(), im: im.clone() };
        let p = re.prec().max(im.prec());
        let mut acc = CI::real(Real::from_int(0, p));
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&z).add(&CI::real(Real::from_integer(c, p)));
        }
        (acc.re, acc.im)
    }

    fn is_reciprocal(&self) -> bool {
        let d = self.degree();
        let same = (0..=d).all(|i| self.coeffs[i] == self.coeffs[d - i]);
        let anti = (0..=d).all(|i| self.coeffs[i] == Integer::from(-&self.coeffs[d - i]));
        same || anti
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0 {
                continue;
            }
            let sign = if *c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = Integer::from(c.abs_ref());
            let coef = if mag == 1 && k > 0 { String::new() } else { mag.to_string() };
            let var = match k {
                0 => String::new(),
                1 => "x".to_string(),
                _ => format!("x^{k}"),
            };
            if first {
                write!(f, "{sign}{coef}{var}")?;
            } else {
                write!(f, " {sign} {coef}{var}")?;
            }
            first = false;
        }
        Ok(())
    }
}

fn divisors(n: &Integer) -> Option<Vec<Integer>> {
    let n = Integer::from(n.abs_ref());
    if n > 1_000_000_000_000u64 {
        return None;
    }
    let n = n.to_u64().unwrap();
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(Integer::from(d));
            if d * d != n {
                out.push(Integer::from(n / d));
            }
        }
        d += 1;
    }
    Some(out)
}

fn eval_int(coeffs: &[Integer], x: &Integer) -> Integer {
    coeffs.iter().rev().fold(Integer::new(), |acc, c| acc * x + c)
}

fn check_irreducible(coeffs: &[Integer]) -> Irreducibility {
    let d = coeffs.len() - 1;
    if d == 1 {
        return Irreducibility::Irreducible;
    }
    if d > 4 {
        return Irreducibility::Asserted;
    }
    if coeffs[0] == 0 {
        return Irreducibility::Reducible("x divides the polynomial".into());
    }
    let Some(divs) = divisors(&coeffs[0]) else {
        return Irreducibility::Asserted;
    };
    // monic: rational roots are integer divisors of the constant term
    for r in &divs {
        for x in [r.clone(), Integer::from(-r)] {
            if eval_int(coeffs, &x) == 0 {
                return Irreducibility::Reducible(format!("{x} is a root"));
            }
        }
    }
    if d == 4 {
        // (x^2 + b x + c)(x^2 + e x + g): c g = a0, b + e = a3, c + g + b e = a2, b g + c e = a1
        let (a0, a1, a2, a3) = (&coeffs[0], &coeffs[1], &coeffs[2], &coeffs[3]);
        for c in divs.iter().flat_map(|r| [r.clone(), Integer::from(-r)]) {
            let g = Integer::from(a0 / &c);
            let be = Integer::from(a2 - &c) - &g;
            // b, e roots of t^2 - a3 t + be
            let disc = Integer::from(a3 * a3) - Integer::from(&be * 4u32);
            if disc < 0 || !disc.is_perfect_square() {
                continue;
            }
            let sq = disc.sqrt();
            for sgn in [1i32, -1] {
                let num = Integer::from(a3 + Integer::from(&sq * sgn));
                if !num.is_even() {
                    continue;
                }
                let b = num / 2u32;
                let e = Integer::from(a3 - &b);
                if Integer::from(&b * &g) + Integer::from(&c * &e) == *a1 {
                    return Irreducibility::Reducible(format!("factors as (x^2 + {b}x + {c})(x^2 + {e}x + {g})"));
                }
            }
        }
    }
    Irreducibility::Irreducible
}

fn rat_poly_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db && !r.is_empty() {
        let lead = Rational::from(r.last().unwrap() / b.last().unwrap());
        let shift = r.len() - 1 - db;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= Rational::from(&lead * bc);
        }
        r.pop();
        while r.last().is_some_and(|c| *c == 0) {
            r.pop();
        }
    }
    r
}

fn is_squarefree(p: &IntPolynomial) -> bool {
    let mut a: Vec<Rational> = p.coeffs.iter().map(Rational::from).collect();
    let mut b: Vec<Rational> = p.coeffs.iter().enumerate().skip(1).map(|(k, c)| Rational::from(c * k as u64)).collect();
    while !b.is_empty() {
        let r = rat_poly_rem(&a, &b);
        a = b;
        b = r;
    }
    a.len() == 1
}

/// Complex rectangle with interval parts.
#[derive(Clone, Debug)]
struct CI {
    re: Real,
    im: Real,
}

impl CI {
    fn real(re: Real) -> Self {
        let p = re.prec();
        CI { re, im: Real::from_int(0, p) }
    }

    fn add(&self, o: &CI) -> CI {
        CI { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    fn sub(&self, o: &CI) -> CI {
        CI { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    fn mul(&self, o: &CI) -> CI {
        CI { re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)), im: self.re.mul(&o.im).add(&self.im.mul(&o.re)) }
    }

    fn abs(&self) -> Real {
        self.re.sqr().add(&self.im.sqr()).sqrt()
    }
}

/// Plain (non-interval) complex number for the Aberth iteration.
#[derive(Clone, Debug)]
struct Cx {
    re: Float,
    im: Float,
}

impl Cx {
    fn new(prec: u32, re: f64, im: f64) -> Self {
        Cx { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    fn zero(prec: u32) -> Self {
        Cx::new(prec, 0.0, 0.0)
    }

    fn add(&self, o: &Cx) -> Cx {
        let p = self.re.prec();
        Cx { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }

    fn sub(&self, o: &Cx) -> Cx {
        let p = self.re.prec();
        Cx { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }

    fn mul(&self, o: &Cx) -> Cx {
        let p = self.re.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Cx { re, im }
    }

    fn norm2(&self) -> Float {
        let p = self.re.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    fn div(&self, o: &Cx) -> Cx {
        let p = self.re.prec();
        let n = o.norm2();
        let conj = Cx { re: o.re.clone(), im: Float::with_val(p, -&o.im) };
        let m = self.mul(&conj);
        Cx { re: m.re / &n, im: m.im / &n }
    }

    fn abs(&self) -> Float {
        self.norm2().sqrt()
    }
}

fn horner(coeffs: &[Integer], z: &Cx) -> (Cx, Cx) {
    let p = z.re.prec();
    let mut val = Cx::zero(p);
    let mut der = Cx::zero(p);
    for c in coeffs.iter().rev() {
        der = der.mul(z).add(&val);
        val = val.mul(z);
        val.re += c;
    }
    (val, der)
}

fn aberth(coeffs: &[Integer], start: Option<Vec<Cx>>, prec: u32) -> Vec<Cx> {
    let d = coeffs.len() - 1;
    let wp = prec + 32;
    let mut z: Vec<Cx> = match start {
        Some(s) => s.into_iter().map(|c| Cx { re: Float::with_val(wp, &c.re), im: Float::with_val(wp, &c.im) }).collect(),
        None => {
            let bound = 1.0 + coeffs[..d].iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max);
            (0..d)
                .map(|k| {
                    let ang = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
                    let r = bound.min(1e6) * 0.5 + 0.1;
                    Cx::new(wp, r * ang.cos(), r * ang.sin())
                })
                .collect()
        }
    };
    let tol = Float::with_val(wp, Float::i_exp(1, -(prec as i32)));
    for _ in 0..(200 + 4 * prec as usize) {
        let mut worst = Float::with_val(wp, 0);
        for i in 0..d {
            let (v, dv) = horner(coeffs, &z[i]);
            if v.norm2() == 0 {
                continue;
            }
            let ratio = v.div(&dv);
            let mut sum = Cx::zero(wp);
            for j in 0..d {
                if j != i {
                    let diff = z[i].sub(&z[j]);
                    if diff.norm2() > 0 {
                        sum = sum.add(&Cx::new(wp, 1.0, 0.0).div(&diff));
                    }
                }
            }
            let denom = Cx::new(wp, 1.0, 0.0).sub(&ratio.mul(&sum));
            let w = ratio.div(&denom);
            if !w.re.is_finite() || !w.im.is_finite() {
                continue;
            }
            let scale = z[i].abs().max(&Float::with_val(wp, 1));
            let rel = w.abs() / scale;
            if rel > worst {
                worst = rel;
            }
            z[i] = z[i].sub(&w);
        }
        if worst < tol {
            break;
        }
    }
    z
}

/// A certified root disk `|z - center| <= radius`.
#[derive(Clone, Debug)]
pub struct RootDisk {
    pub re: Float,
    pub im: Float,
    pub radius: Float,
}

impl RootDisk {
    /// Centered on the real axis, so an isolated disk holds a real root.
    pub fn is_real(&self) -> bool {
        self.im == 0
    }

    pub fn real_enclosure(&self) -> Real {
        let p = self.re.prec().max(self.radius.prec());
        Real::new(
            Float::with_val_round(p, &self.re - &self.radius, Round::Down).0,
            Float::with_val_round(p, &self.re + &self.radius, Round::Up).0,
        )
    }

    /// Enclosure of the modulus of the root.
    pub fn modulus(&self) -> Real {
        let p = self.re.prec();
        let c = CI { re: Real::point(self.re.clone()), im: Real::point(self.im.clone()) }.abs();
        let r = Real::point(Float::with_val(p, &self.radius));
        let lo = c.sub(&r);
        let zero = Float::with_val(p, 0);
        let lo_end = if *lo.lo() < zero { zero } else { lo.lo().clone() };
        Real::new(lo_end, c.add(&r).hi().clone())
    }

    pub fn box_re(&self) -> Real {
        self.real_enclosure()
    }

    pub fn box_im(&self) -> Real {
        let p = self.im.prec().max(self.radius.prec());
        Real::new(
            Float::with_val_round(p, &self.im - &self.radius, Round::Down).0,
            Float::with_val_round(p, &self.im + &self.radius, Round::Up).0,
        )
    }
}

impl fmt::Display for RootDisk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12} {:+.12}i (r = {:.3e})", self.re.to_f64(), self.im.to_f64(), self.radius.to_f64())
    }
}

/// Smith disks around the approximations; `None` if two disks meet.
fn smith_disks(poly: &IntPolynomial, approx: &[Cx], prec: u32) -> Option<Vec<RootDisk>> {
    let d = approx.len();
    let centers: Vec<Cx> = approx
        .iter()
        .map(|z| {
            let re = Float::with_val(prec, &z.re);
            let scale = Float::with_val(prec, re.abs_ref()).max(&Float::with_val(prec, 1));
            let thresh = scale * Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));
            let im = if Float::with_val(prec, z.im.abs_ref()) < thresh { Float::with_val(prec, 0) } else { Float::with_val(prec, &z.im) };
            Cx { re, im }
        })
        .collect();
    let ci: Vec<CI> = centers.iter().map(|c| CI { re: Real::point(c.re.clone()), im: Real::point(c.im.clone()) }).collect();
    let mut disks = Vec::with_capacity(d);
    for i in 0..d {
        let (vr, vi) = poly.eval_complex(&ci[i].re, &ci[i].im);
        let pv = CI { re: vr, im: vi }.abs();
        let mut prod = Real::from_int(1, prec);
        for j in 0..d {
            if j != i {
                prod = prod.mul(&ci[i].sub(&ci[j]).abs());
            }
        }
        if !(*prod.lo() > 0) {
            return None;
        }
        let r = pv.mul(&Real::from_int(d as i64, prec)).div(&prod);
        disks.push(RootDisk { re: centers[i].re.clone(), im: centers[i].im.clone(), radius: r.hi().clone() });
    }
    for i in 0..d {
        for j in i + 1..d {
            let dist = ci[i].sub(&ci[j]).abs();
            let rsum = Real::point(disks[i].radius.clone()).add(&Real::point(disks[j].radius.clone()));
            if !(dist.lo() > rsum.hi()) {
                return None;
            }
        }
    }
    Some(disks)
}

/// Every root of the polynomial, each in its own certified disk.
pub fn isolate_roots(poly: &IntPolynomial, precision: u32) -> Result<Vec<RootDisk>> {
    if !is_squarefree(poly) {
        return precondition(format!("{poly} has repeated roots"));
    }
    let mut prec = precision.max(64);
    let mut approx = None;
    loop {
        let z = aberth(&poly.coeffs, approx.take(), prec);
        if let Some(d) = smith_disks(poly, &z, prec) {
            return Ok(d);
        }
        if prec >= MAX_PREC {
            return Err(Error::PrecisionCap { cap: MAX_PREC, context: format!("isolating the roots of {poly}") });
        }
        approx = Some(z);
        prec = (prec * 2).min(MAX_PREC);
    }
}

#[derive(Clone, Debug)]
pub struct PisotCertificate {
    pub poly: IntPolynomial,
    pub theta: Real,
    pub conjugates: Vec<RootDisk>,
    /// Number of conjugates, `degree - 1`.
    pub r: usize,
    /// Enclosure of the largest conjugate modulus; 0 when there are none.
    pub gamma: Real,
    pub precision: u32,
}

#[derive(Clone, Debug)]
pub struct Rejection {
    pub reason: String,
    pub root: Option<RootDisk>,
}

#[derive(Clone, Debug)]
pub enum PisotVerdict {
    Pisot(PisotCertificate),
    Rejected(Rejection),
}

impl PisotVerdict {
    pub fn certificate(self) -> Result<PisotCertificate> {
        match self {
            PisotVerdict::Pisot(c) => Ok(c),
            PisotVerdict::Rejected(r) => precondition(format!("not a Pisot polynomial: {}", r.reason)),
        }
    }
}

fn reject(reason: impl Into<String>, root: Option<RootDisk>) -> Result<PisotVerdict> {
    Ok(PisotVerdict::Rejected(Rejection { reason: reason.into(), root }))
}

pub fn certify_pisot(poly: &IntPolynomial, precision: u32) -> Result<PisotVerdict> {
    if let Irreducibility::Reducible(why) = &poly.irreducibility {
        return reject(format!("{poly} is reducible: {why}"), None);
    }
    let d = poly.degree();
    let prec = precision.max(64);
    if d == 1 {
        let theta = Integer::from(-&poly.coeffs[0]);
        let disk = RootDisk { re: Float::with_val(prec, &theta), im: Float::with_val(prec, 0), radius: Float::with_val(prec, 0) };
        if theta <= 1 {
            return reject(format!("the root {theta} is not greater than 1"), Some(disk));
        }
        return Ok(PisotVerdict::Pisot(PisotCertificate {
            poly: poly.clone(),
            theta: Real::from_integer(&theta, prec),
            conjugates: Vec::new(),
            r: 0,
            gamma: Real::from_int(0, prec),
            precision: prec,
        }));
    }
    let sum: Integer = poly.coeffs.iter().sum();
    let alt: Integer = poly.coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 0 { c.clone() } else { Integer::from(-c) }).sum();
    if sum == 0 || alt == 0 {
        return reject(format!("{poly} has a root at 1 or -1"), None);
    }
    // roots closed under z -> 1/z: a third root pairs up with its inverse,
    // and a quadratic x^2 + c x + 1 with |c| < 2 has both roots on the circle
    if poly.is_reciprocal() && (d > 2 || Integer::from(&poly.coeffs[1] * &poly.coeffs[1]) < 4) {
        return reject(format!("{poly} is reciprocal, so some conjugate has modulus at least 1"), None);
    }
    let mut prec = prec;
    loop {
        let disks = match isolate_roots(poly, prec) {
            Ok(d) => d,
            Err(Error::Precondition(msg)) => return reject(msg, None),
            Err(e) => return Err(e),
        };
        let moduli: Vec<Real> = disks.iter().map(RootDisk::modulus).collect();
        let undecided = moduli.iter().any(|m| !(*m.hi() < 1) && !(*m.lo() > 1));
        if !undecided {
            let big: Vec<usize> = (0..d).filter(|&i| *moduli[i].lo() > 1).collect();
            if big.is_empty() {
                let i = (0..d).max_by(|&i, &j| moduli[i].hi().partial_cmp(moduli[j].hi()).unwrap()).unwrap();
                return reject("every root lies inside the unit disk", Some(disks[i].clone()));
            }
            if big.len() > 1 {
                return reject("more than one root lies outside the unit disk", Some(disks[big[1]].clone()));
            }
            let top = &disks[big[0]];
            if !top.is_real() || !(top.real_enclosure().lo() > &1) {
                return reject("the root outside the unit disk is not a real number greater than 1", Some(top.clone()));
            }
            let conjugates: Vec<RootDisk> = (0..d).filter(|&i| i != big[0]).map(|i| disks[i].clone()).collect();
            let mut gamma: Option<Real> = None;
            for i in (0..d).filter(|&i| i != big[0]) {
                let m = &moduli[i];
                gamma = Some(match gamma {
                    None => m.clone(),
                    Some(g) => {
                        let lo = if g.lo() > m.lo() { g.lo().clone() } else { m.lo().clone() };
                        let hi = if g.hi() > m.hi() { g.hi().clone() } else { m.hi().clone() };
                        Real::new(lo, hi)
                    }
                });
            }
            return Ok(PisotVerdict::Pisot(PisotCertificate {
                poly: poly.clone(),
                theta: top.real_enclosure(),
                r: conjugates.len(),
                conjugates,
                gamma: gamma.expect("degree at least 2"),
                precision: prec,
            }));
        }
        if prec >= MAX_PREC {
            return Err(Error::PrecisionCap { cap: MAX_PREC, context: format!("separating the roots of {poly} from the unit circle") });
        }
        prec = (prec * 2).min(MAX_PREC);
    }
}

/// `dist(theta^n, Z)` computed two ways.
#[derive(Clone, Debug)]
pub struct PowerDistance {
    pub n: u32,
    /// `s_n = theta^n + sum_i theta_i^n`, exact.
    pub power_sum: Integer,
    /// Direct enclosure of `dist(theta^n, Z)`.
    pub dist: Real,
    /// Enclosure of `|theta^n - s_n|`, bounded by `sum_i |theta_i|^n`.
    pub conjugate_sum: Real,
    /// `r gamma^n`.
    pub bound: Real,
}

impl PowerDistance {
    /// Whether the certified enclosures are consistent with `dist <= r gamma^n`.
    /// When the bound is attained (a single conjugate) the two sides share
    /// their value, so this is the strongest statement enclosures can make.
    pub fn bound_holds(&self) -> bool {
        self.dist.lo() <= self.bound.hi() && self.dist.lo() <= self.conjugate_sum.hi()
    }
}

pub fn power_distance(cert: &PisotCertificate, n: u32) -> Result<PowerDistance> {
    let prec = cert.precision.max(64);
    let sums = cert.poly.power_sums(n as usize);
    let s_n = sums[n as usize].clone();
    let work = (prec + 2 * n * 4).min(MAX_PREC);
    let mut theta = cert.theta.clone();
    if theta.prec() < work {
        theta = refine_theta(cert, work)?;
    }
    let tn = theta.pow_u(n);
    let dist = match tn.nearest_integer_certain() {
        Some(k) => tn.sub(&Real::from_integer(&k, tn.prec())).abs(),
        None => {
            return Err(Error::Unresolved(format!("nearest integer to theta^{n}")));
        }
    };
    let p = tn.prec();
    let direct = tn.sub(&Real::from_integer(&s_n, p)).abs();
    let mut conj = Real::from_int(0, p);
    for c in &cert.conjugates {
        let m = c.modulus();
        conj = conj.add(&Real::new(Float::with_val(p, 0), m.pow_u(n).hi().clone()));
    }
    let conjugate_sum = direct.intersect(&conj).unwrap_or(direct);
    let bound = if cert.r == 0 { Real::from_int(0, p) } else { Real::from_int(cert.r as i64, p).mul(&cert.gamma.pow_u(n)) };
    Ok(PowerDistance { n, power_sum: s_n, dist, conjugate_sum, bound })
}

fn refine_theta(cert: &PisotCertificate, prec: u32) -> Result<Real> {
    if cert.theta.is_point() {
        return Ok(cert.theta.round_to(prec));
    }
    // bisection on the sign change inside the certified enclosure
    let mut lo = Float::with_val(prec, cert.theta.lo());
    let mut hi = Float::with_val(prec, cert.theta.hi());
    let sign_at = |x: &Float| {
        let v = cert.poly.eval(&Real::point(x.clone()));
        if v.is_positive() {
            Some(true)
        } else if v.is_negative() {
            Some(false)
        } else {
            None
        }
    };
    let s_lo = sign_at(&lo);
    let s_hi = sign_at(&hi);
    if s_lo.is_none() || s_hi.is_none() || s_lo == s_hi {
        return Ok(cert.theta.clone());
    }
    for _ in 0..(prec + 8) {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        match sign_at(&mid) {
            Some(s) if s == s_lo.unwrap() => lo = mid,
            Some(_) => hi = mid,
            None => return Ok(Real::new(lo, hi)),
        }
    }
    Ok(Real::new(lo, hi))
}

/// `eps = 1/2 dist({theta^n : n >= 1}, Z + 1/2)` for `theta = 1/b`.
pub fn epsilon_constant(cert: &PisotCertificate) -> Result<Real> {
    let prec = cert.precision.max(64);
    let half = Real::from_rational(&Rational::from((1, 2)), prec);
    if cert.r == 0 {
        // integer theta: every power sits at distance 1/2
        return Ok(half.mul(&half));
    }
    if !(*cert.gamma.hi() < 1) {
        return precondition("degenerate certificate: conjugate modulus bound not below 1");
    }
    let r = Real::from_int(cert.r as i64, prec);
    let mut best: Option<Real> = None;
    let mut n = 1u32;
    loop {
        let tail = half.sub(&r.mul(&cert.gamma.pow_u(n)));
        if let Some(b) = &best {
            if tail.lo() >= b.hi() {
                break;
            }
        }
        if n > 10_000 {
            return Err(Error::Unresolved("tail bound for epsilon".into()));
        }
        let pd = power_distance(cert, n)?;
        let to_half = half.sub(&pd.dist).abs();
        best = Some(match best {
            None => to_half,
            Some(b) => {
                let lo = if b.lo() < to_half.lo() { b.lo().clone() } else { to_half.lo().clone() };
                let hi = if b.hi() < to_half.hi() { b.hi().clone() } else { to_half.hi().clone() };
                Real::new(lo, hi)
            }
        });
        n += 1;
    }
    Ok(best.unwrap().mul(&half))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(c: &[i64]) -> PisotCertificate {
        certify_pisot(&IntPolynomial::from_i64(c).unwrap(), 128).unwrap().certificate().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let p = IntPolynomial::parse("-1, -1, 1").unwrap();
        assert_eq!(p.to_string(), "x^2 - x - 1");
        assert!(IntPolynomial::parse("1,-1,-1").is_err());
        match IntPolynomial::parse("1,x,1") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn irreducibility() {
        let r = |c: &[i64]| IntPolynomial::from_i64(c).unwrap().irreducibility().clone();
        assert_eq!(r(&[-1, -1, 1]), Irreducibility::Irreducible);
        assert!(matches!(r(&[2, -3, 1]), Irreducibility::Reducible(_)));
        // (x^2 + 1)(x^2 - 2)
        assert!(matches!(r(&[-2, 0, -1, 0, 1]), Irreducibility::Reducible(_)));
        assert_eq!(r(&[-1, -1, 0, 1]), Irreducibility::Irreducible);
    }

    #[test]
    fn newton_identities() {
        let p = IntPolynomial::from_i64(&[-1, -1, 1]).unwrap();
        let s = p.power_sums(10);
        // Lucas numbers
        let lucas = [2, 1, 3, 4, 7, 11, 18, 29, 47, 76, 123];
        for (k, l) in lucas.iter().enumerate() {
            assert_eq!(s[k], *l);
        }
        let three = IntPolynomial::from_i64(&[-3, 1]).unwrap();
        assert_eq!(three.power_sums(7)[7], 2187);
    }

    #[test]
    fn golden_ratio() {
        let c = cert(&[-1, -1, 1]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((c.theta.mid_f64() - phi).abs() < 1e-15);
        assert!((c.gamma.mid_f64() - (phi - 1.0)).abs() < 1e-15);
        assert_eq!(c.r, 1);
        let pd = power_distance(&c, 10).unwrap();
        assert_eq!(pd.power_sum, 123);
        assert!((pd.dist.mid_f64() - 0.008131).abs() < 1e-6);
        assert!(pd.bound_holds());
    }

    #[test]
    fn integer_pisot() {
        let c = cert(&[-3, 1]);
        assert_eq!(c.r, 0);
        assert!(c.gamma.is_point() && c.gamma.contains_f64(0.0));
        let pd = power_distance(&c, 7).unwrap();
        assert!(pd.dist.is_point() && pd.dist.contains_f64(0.0));
        let e = epsilon_constant(&c).unwrap();
        assert!(e.is_point() && e.contains_f64(0.25));
    }

    #[test]
    fn rejections() {
        let v = certify_pisot(&IntPolynomial::from_i64(&[-3, -1, 1]).unwrap(), 128).unwrap();
        match v {
            PisotVerdict::Rejected(r) => {
                let root = r.root.unwrap();
                assert!((root.re.to_f64() + 1.3028).abs() < 1e-3);
            }
            _ => panic!("x^2 - x - 3 is not Pisot"),
        }
        for c in [&[1, 0, 1][..], &[1, 1, 1], &[1, -3, 1, 0, 0, 1], &[-1, 1], &[1, -1, -1, 1]] {
            let p = IntPolynomial::from_i64(c).unwrap();
            assert!(matches!(certify_pisot(&p, 128).unwrap(), PisotVerdict::Rejected(_)), "{p}");
        }
        // x^2 - 3x + 1 is reciprocal yet Pisot
        let c = cert(&[1, -3, 1]);
        assert!((c.theta.mid_f64() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn plastic_number() {
        let c = cert(&[-1, -1, 0, 1]);
        assert!((c.theta.mid_f64() - 1.324_717_957_244_746).abs() < 1e-15);
        assert_eq!(c.r, 2);
        for disk in &c.conjugates {
            let (re, im) = c.poly.eval_complex(&disk.box_re(), &disk.box_im());
            assert!(re.contains_zero() && im.contains_zero());
        }
    }

    #[test]
    fn golden_epsilon_positive() {
        let e = epsilon_constant(&cert(&[-1, -1, 1])).unwrap();
        assert!(e.is_positive());
        // attained at n = 1: phi - 3/2
        assert!((e.mid_f64() - (1.618_033_988_749_895 - 1.5) / 2.0).abs() < 1e-15);
    }
}
