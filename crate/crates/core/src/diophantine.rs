//! Continued fractions of log ratios and the nested-interval construction of
//! skews `lambda` with infinitely many near-resonances `lambda a^-n ~ b^-m`.

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::lattice::{PairParam, Skew};
use crate::real::{parse_rational, rpow, rpow_i, Real, DEFAULT_PREC, MAX_PREC};

/// Whether `log b / log a` is rational, decided exactly by factoring the
/// numerators and denominators over a common coprime base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RatioClass {
    /// `log b / log a = p / q` in lowest terms.
    Rational {
        p: i64,
        q: i64,
    },
    Irrational,
}

impl RatioClass {
    pub fn is_irrational(&self) -> bool {
        matches!(self, RatioClass::Irrational)
    }
}

fn coprime_base(nums: &[Integer]) -> Vec<Integer> {
    let mut base: Vec<Integer> = nums.iter().filter(|x| **x > 1).cloned().collect();
    loop {
        base.sort();
        base.dedup();
        let mut split = None;
        'search: for i in 0..base.len() {
            for j in i + 1..base.len() {
                let g = Integer::from(base[i].gcd_ref(&base[j]));
                if g > 1 {
                    split = Some((i, j, g));
                    break 'search;
                }
            }
        }
        let Some((i, j, g)) = split else { return base };
        let x = Integer::from(&base[i] / &g);
        let y = Integer::from(&base[j] / &g);
        base.remove(j);
        base.remove(i);
        base.extend([x, y, g].into_iter().filter(|v| *v > 1));
    }
}

fn exponents(x: &Integer, base: &[Integer]) -> Vec<i64> {
    let mut rest = x.clone();
    let v = base
        .iter()
        .map(|p| {
            let mut e = 0;
            while rest.is_divisible(p) {
                rest /= p;
                e += 1;
            }
            e
        })
        .collect();
    debug_assert_eq!(rest, 1);
    v
}

fn log_vector(r: &Rational, base: &[Integer]) -> Vec<i64> {
    let num = exponents(r.numer(), base);
    let den = exponents(r.denom(), base);
    num.iter().zip(&den).map(|(n, d)| n - d).collect()
}

/// `b = a^(p/q)` iff the exponent vectors over a coprime base are proportional.
pub fn ratio_class(a: &Rational, b: &Rational) -> RatioClass {
    assert!(*a > 0 && *b > 0 && *a != 1, "ratio class needs positive a != 1");
    let base = coprime_base(&[a.numer().clone(), a.denom().clone(), b.numer().clone(), b.denom().clone()]);
    let va = log_vector(a, &base);
    let vb = log_vector(b, &base);
    let i = va.iter().position(|&e| e != 0).expect("a != 1");
    let (p, q) = (vb[i], va[i]);
    if va.iter().zip(&vb).all(|(x, y)| y * q == x * p) {
        let g = Integer::from(p).gcd(&Integer::from(q)).to_i64().unwrap().max(1);
        let (p, q) = if q < 0 { (-p / g, -q / g) } else { (p / g, q / g) };
        RatioClass::Rational { p, q }
    } else {
        RatioClass::Irrational
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    pub target: Real,
    pub quotients: Vec<Integer>,
    pub convergents: Vec<(Integer, Integer)>,
    /// Fewer quotients than requested could be certified.
    pub truncated: bool,
}

/// First `k` partial quotients that the enclosure certifies.
pub fn contfrac(x: &Real, k: usize) -> ContinuedFraction {
    let mut quotients = Vec::with_capacity(k);
    let mut convergents = Vec::with_capacity(k);
    let (mut p2, mut p1) = (Integer::from(0), Integer::from(1));
    let (mut q2, mut q1) = (Integer::from(1), Integer::from(0));
    let mut y = x.clone();
    let mut truncated = false;
    while quotients.len() < k {
        let Some(a) = y.floor_certain() else {
            truncated = true;
            break;
        };
        let p = Integer::from(&a * &p1) + &p2;
        let q = Integer::from(&a * &q1) + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        quotients.push(a.clone());
        convergents.push((p, q));
        let rest = y.sub(&Real::from_integer(&a, y.prec()));
        if rest.is_point() && rest.contains_zero() {
            break;
        }
        if rest.contains_zero() {
            truncated = quotients.len() < k;
            break;
        }
        y = rest.recip();
    }
    ContinuedFraction { target: x.clone(), quotients, convergents, truncated }
}

/// `contfrac` of a quantity that can be evaluated at any precision, doubling
/// the precision until `k` quotients are certified or the cap is reached.
pub fn contfrac_escalating(eval: impl Fn(u32) -> Real, k: usize) -> ContinuedFraction {
    let mut prec = DEFAULT_PREC;
    loop {
        let cf = contfrac(&eval(prec), k);
        if !cf.truncated || prec >= MAX_PREC {
            return cf;
        }
        prec *= 2;
    }
}

/// `log b / log a` for the pair.
pub fn log_ratio(a: &Rational, b: &Rational, prec: u32) -> Real {
    Real::ln_rational(b, prec + 16).div(&Real::ln_rational(a, prec + 16)).round_to(prec)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessCheck {
    pub n: u32,
    pub m: u32,
    /// `|lambda a^-n - b^-m|`.
    pub residual: Real,
    pub residual_exact: Option<Rational>,
    pub pass: bool,
}

/// Certified `|lambda a^-n - b^-m|` compared with `eps`.
pub fn verify_witness(pp: &PairParam, lambda: &Skew, eps: &Rational, n: u32, m: u32) -> WitnessCheck {
    let an = rpow_i(pp.a(), -(n as i64));
    let bm = rpow_i(pp.b(), -(m as i64));
    if let Some(l) = lambda.exact() {
        let r = (Rational::from(l * &an) - &bm).abs();
        let pass = r < *eps;
        return WitnessCheck { n, m, residual: Real::from_rational(&r, DEFAULT_PREC), residual_exact: Some(r), pass };
    }
    let mut prec = DEFAULT_PREC;
    loop {
        let r = lambda.lambda(prec).mul(&Real::from_rational(&an, prec)).sub(&Real::from_rational(&bm, prec)).abs();
        if r.lt_rational(eps) || r.gt_rational(eps) || prec >= MAX_PREC {
            let pass = r.lt_rational(eps);
            return WitnessCheck { n, m, residual: r, residual_exact: None, pass };
        }
        prec *= 2;
    }
}

#[derive(Clone, Debug)]
pub struct FindConfig {
    /// Smallest exponent allowed for the first pair.
    pub min_index: u32,
    /// Largest step in `n` searched at each nesting stage.
    pub search_bound: u32,
}

impl Default for FindConfig {
    fn default() -> Self {
        FindConfig { min_index: 0, search_bound: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPair {
    pub n: u32,
    pub m: u32,
    pub residual: Real,
    pub residual_exact: Option<Rational>,
}

#[derive(Clone, Debug)]
pub struct WitnessList {
    pub lambda: Skew,
    pub epsilon: Rational,
    pub pairs: Vec<WitnessPair>,
    /// The nested open intervals, outermost first.
    pub intervals: Vec<(Rational, Rational)>,
    /// False when fewer pairs than requested were found within the bound.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessPairRecord {
    pub n: u32,
    pub m: u32,
    pub residual_hi: f64,
}

/// Serialized form of a `WitnessList`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_exact: Option<String>,
    pub epsilon: String,
    pub pairs: Vec<WitnessPairRecord>,
    #[serde(default = "yes")]
    pub complete: bool,
}

fn yes() -> bool {
    true
}

impl WitnessList {
    pub fn to_record(&self) -> WitnessRecord {
        let l = self.lambda.lambda(DEFAULT_PREC);
        WitnessRecord {
            lambda_lo: l.lo_f64(),
            lambda_hi: l.hi_f64(),
            lambda_exact: self.lambda.exact().map(|r| r.to_string()),
            epsilon: self.epsilon.to_string(),
            pairs: self.pairs.iter().map(|p| WitnessPairRecord { n: p.n, m: p.m, residual_hi: p.residual.hi_f64() }).collect(),
            complete: self.complete,
        }
    }

    /// Rebuilds a list from its record and re-verifies every pair.
    pub fn from_record(pp: &PairParam, rec: &WitnessRecord) -> Result<WitnessList> {
        let epsilon = parse_rational(&rec.epsilon)?;
        let lambda = match &rec.lambda_exact {
            Some(s) => Skew::from_lambda(parse_rational(s)?)?,
            None => Skew::from_enclosure(Real::new(rug::Float::with_val(64, rec.lambda_lo), rug::Float::with_val(64, rec.lambda_hi)))?,
        };
        let mut pairs = Vec::new();
        for p in &rec.pairs {
            let c = verify_witness(pp, &lambda, &epsilon, p.n, p.m);
            if !c.pass {
                return precondition(format!("witness ({}, {}) fails: residual {}", p.n, p.m, c.residual));
            }
            pairs.push(WitnessPair { n: p.n, m: p.m, residual: c.residual, residual_exact: c.residual_exact });
        }
        Ok(WitnessList { lambda, epsilon, pairs, intervals: Vec::new(), complete: rec.complete })
    }
}

// smallest m >= m_min with a^n b^-m in (lo, hi), if any
fn anchor_exponent(pp: &PairParam, n: u32, m_min: u32, lo: &Rational, hi: &Rational, ln_a: f64, ln_b: f64) -> Option<u32> {
    let ln_lo = Real::ln_rational(lo, 96).mid_f64();
    let ln_hi = Real::ln_rational(hi, 96).mid_f64();
    // a^n b^-m = exp(n ln a - m ln b) lies in (lo, hi) iff m is in (x_lo, x_hi)
    let x_lo = (n as f64 * ln_a - ln_lo) / ln_b;
    let x_hi = (n as f64 * ln_a - ln_hi) / ln_b;
    let slack = 1e-7 * (1.0 + x_hi.abs());
    let first = ((x_lo - slack).ceil().max(m_min as f64)) as u32;
    let last = (x_hi + slack).floor();
    if (first as f64) > last {
        return None;
    }
    let an = rpow(pp.a(), n);
    (first..=last as u32).find(|&m| {
        let v = Rational::from(&an * rpow_i(pp.b(), -(m as i64)));
        v > *lo && v < *hi
    })
}

/// Nested-interval construction of `lambda` with `k` witness pairs inside the
/// open `target` interval. Each stage takes the smallest admissible `n`, then
/// the smallest `m`, with the anchor `a^n b^-m` in the current interval, and
/// shrinks the interval to `|lambda a^-n - b^-m| < eps / 2`. The returned
/// lambda is the last anchor, an exact rational.
pub fn find_lambda(pp: &PairParam, eps: &Rational, target: (&Rational, &Rational), k: usize, cfg: &FindConfig) -> Result<WitnessList> {
    if !pp.ratio_class().is_irrational() {
        return precondition(format!("log b / log a is rational for {pp}; no such lambda construction applies"));
    }
    if *eps <= 0 || k == 0 {
        return precondition("need eps > 0 and at least one witness");
    }
    let (mut lo, mut hi) = (target.0.clone(), target.1.clone());
    if lo <= 0 || hi <= lo {
        return precondition(format!("target interval ({lo}, {hi}) must be a nonempty positive interval"));
    }
    let ln_a = pp.pa().a_f64().ln();
    let ln_b = pp.pb().a_f64().ln();
    let half = Rational::from(eps / 2u32);
    let mut intervals = vec![(lo.clone(), hi.clone())];
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut anchor: Option<Rational> = None;
    while pairs.len() < k {
        let (n0, m0) = match pairs.last() {
            Some(&(n, m)) => (n + 1, m + 1),
            None => (cfg.min_index, cfg.min_index),
        };
        let found =
            (n0..=n0.saturating_add(cfg.search_bound)).find_map(|n| anchor_exponent(pp, n, m0, &lo, &hi, ln_a, ln_b).map(|m| (n, m)));
        let Some((n, m)) = found else { break };
        let an = rpow(pp.a(), n);
        let bm = rpow_i(pp.b(), -(m as i64));
        let new_lo = Rational::from(&an * Rational::from(&bm - &half));
        let new_hi = Rational::from(&an * Rational::from(&bm + &half));
        if new_lo > lo {
            lo = new_lo;
        }
        if new_hi < hi {
            hi = new_hi;
        }
        intervals.push((lo.clone(), hi.clone()));
        anchor = Some(Rational::from(&an * &bm));
        pairs.push((n, m));
    }
    let Some(anchor) = anchor else {
        return Err(Error::Unresolved(format!("no pair (n, m) with a^n b^-m in the target within {} steps", cfg.search_bound)));
    };
    let lambda = Skew::from_lambda(anchor)?;
    let checked = pairs
        .iter()
        .map(|&(n, m)| {
            let c = verify_witness(pp, &lambda, eps, n, m);
            assert!(c.pass, "construction produced a failing witness ({n}, {m})");
            WitnessPair { n, m, residual: c.residual, residual_exact: c.residual_exact }
        })
        .collect();
    Ok(WitnessList { lambda, epsilon: eps.clone(), pairs: checked, intervals, complete: pairs.len() == k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    #[test]
    fn ratio_classes() {
        assert_eq!(ratio_class(&rat(1, 4), &rat(1, 2)), RatioClass::Rational { p: 1, q: 2 });
        assert_eq!(ratio_class(&rat(1, 9), &rat(1, 3)), RatioClass::Rational { p: 1, q: 2 });
        assert_eq!(ratio_class(&rat(1, 4), &rat(1, 3)), RatioClass::Irrational);
        assert_eq!(ratio_class(&rat(4, 9), &rat(8, 27)), RatioClass::Rational { p: 3, q: 2 });
        assert_eq!(ratio_class(&rat(1, 6), &rat(1, 12)), RatioClass::Irrational);
        assert_eq!(ratio_class(&rat(1, 36), &rat(1, 216)), RatioClass::Rational { p: 3, q: 2 });
    }

    #[test]
    fn sqrt2_expansion() {
        let x = Real::from_int(2, 256).sqrt();
        let cf = contfrac(&x, 12);
        assert!(!cf.truncated);
        assert_eq!(cf.quotients[0], 1);
        assert!(cf.quotients[1..].iter().all(|q| *q == 2));
    }

    #[test]
    fn log_three_over_log_four() {
        let cf = contfrac(&log_ratio(&rat(1, 4), &rat(1, 3), 256), 5);
        let q: Vec<i64> = cf.quotients.iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(q, vec![0, 1, 3, 1, 4]);
    }

    #[test]
    fn rational_target_terminates() {
        let cf = contfrac(&Real::from_rational(&rat(9, 4), 128), 5);
        let q: Vec<i64> = cf.quotients.iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(q, vec![2, 4]);
        assert!(!cf.truncated);
    }

    #[test]
    fn witness_checks() {
        let pp = PairParam::from_ratios(rat(1, 4), rat(1, 3)).unwrap();
        let l = Skew::from_lambda(rat(81, 64)).unwrap();
        let c = verify_witness(&pp, &l, &rat(1, 4), 3, 4);
        assert!(c.pass);
        assert_eq!(c.residual_exact, Some(rat(0, 1)));
        let one = Skew::from_lambda(rat(1, 1)).unwrap();
        let c = verify_witness(&pp, &one, &rat(1, 4), 3, 4);
        assert!(!c.pass);
        assert_eq!(c.residual_exact, Some(rat(17, 1)));
        let s = Skew::parse("s=1/5").unwrap();
        let c = verify_witness(&pp, &s, &rat(1, 4), 0, 0);
        assert!(c.pass);
        assert!(c.residual.contains_f64(0.2f64.exp() - 1.0) || (c.residual.mid_f64() - (0.2f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_witness_examples() {
        let pp = PairParam::from_ratios(rat(1, 4), rat(1, 3)).unwrap();
        let cfg = FindConfig { min_index: 3, ..FindConfig::default() };
        let w = find_lambda(&pp, &rat(1, 4), (&rat(1, 1), &rat(2, 1)), 1, &cfg).unwrap();
        assert_eq!(w.lambda.exact(), Some(&rat(81, 64)));
        assert_eq!((w.pairs[0].n, w.pairs[0].m), (3, 4));
        assert_eq!(w.pairs[0].residual_exact, Some(rat(0, 1)));
        let w0 = find_lambda(&pp, &rat(1, 4), (&rat(1, 1), &rat(2, 1)), 1, &FindConfig::default()).unwrap();
        assert_eq!((w0.pairs[0].n, w0.pairs[0].m), (2, 3));
    }

    #[test]
    fn refuses_rational_ratio() {
        let pp = PairParam::from_ratios(rat(1, 9), rat(1, 3)).unwrap();
        assert!(find_lambda(&pp, &rat(1, 4), (&rat(1, 2), &rat(2, 1)), 1, &FindConfig::default()).is_err());
    }
}
