//! Central Cantor sets `C_a` and their natural measures `mu_a`.

use std::fmt;

use rand::RngCore;
use rug::Rational;

use crate::error::{precondition, Error, Result};
use crate::real::{parse_rational, rpow, MassBound, Real, DEFAULT_PREC};

#[derive(Clone, Debug)]
pub struct CantorParam {
    a: Rational,
    dim: Real,
    dim_exact: Option<Rational>,
}

impl CantorParam {
    pub fn new(a: Rational) -> Result<Self> {
        if a <= 0 || a >= 1 {
            return precondition(format!("contraction ratio {a} must lie in (0,1)"));
        }
        let (dim, dim_exact) = dimension_of(&a, DEFAULT_PREC);
        Ok(CantorParam { a, dim, dim_exact })
    }

    pub fn parse(s: &str) -> Result<Self> {
        CantorParam::new(parse_rational(s)?)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn a_f64(&self) -> f64 {
        self.a.to_f64()
    }

    /// `a < 1/2`, the regime in which the IFS pieces are disjoint.
    pub fn is_strict(&self) -> bool {
        self.a < Rational::from((1, 2))
    }

    pub fn dimension(&self) -> &Real {
        &self.dim
    }

    pub fn dimension_exact(&self) -> Option<&Rational> {
        self.dim_exact.as_ref()
    }

    pub(crate) fn require_strict(&self) -> Result<()> {
        if self.is_strict() {
            Ok(())
        } else {
            precondition(format!("a = {} must be below 1/2 here", self.a))
        }
    }
}

impl fmt::Display for CantorParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.a)
    }
}

// log 2 / log(1/a) is rational only for a = 2^-k; for a >= 1/2 the attractor is [0,1].
fn dimension_of(a: &Rational, prec: u32) -> (Real, Option<Rational>) {
    if *a >= Rational::from((1, 2)) {
        let one = Rational::from(1);
        return (Real::from_rational(&one, prec), Some(one));
    }
    let inv = Rational::from(a.recip_ref());
    if inv.denom() == &1u32 && inv.numer().is_power_of_two() {
        let k = inv.numer().significant_bits() - 1;
        let d = Rational::from((1, k));
        return (Real::from_rational(&d, prec), Some(d));
    }
    let d = Real::ln2(prec + 16).div(&Real::ln_rational(&inv, prec + 16)).round_to(prec);
    (d, None)
}

/// `log 2 / log(1/a)`, exact when it is rational.
pub fn similarity_dimension(p: &CantorParam) -> Real {
    p.dim.clone()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitWord(Vec<u8>);

impl BitWord {
    pub fn new(symbols: Vec<u8>) -> Self {
        assert!(symbols.iter().all(|&s| s < 2), "symbols must be 0 or 1");
        BitWord(symbols)
    }

    pub fn empty() -> Self {
        BitWord(Vec::new())
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.bytes()
            .enumerate()
            .map(|(i, c)| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(Error::Parse { input: s.to_string(), position: i, message: "expected 0 or 1".into() }),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitWord)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, s: u8) {
        assert!(s < 2);
        self.0.push(s);
    }

    pub fn concat(&self, other: &BitWord) -> BitWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitWord(v)
    }

    pub fn prefix(&self, len: usize) -> BitWord {
        BitWord(self.0[..len].to_vec())
    }

    pub fn is_prefix_of(&self, bits: &[u8]) -> bool {
        bits.len() >= self.0.len() && bits[..self.0.len()] == self.0[..]
    }

    /// `sum_t u_t r^(t-1)`, exact.
    pub fn weighted_sum(&self, r: &Rational) -> Rational {
        let mut acc = Rational::new();
        for &s in self.0.iter().rev() {
            acc *= r;
            if s == 1 {
                acc += 1u32;
            }
        }
        acc
    }

    /// All words of the given length in lexicographic order.
    pub fn all(len: usize) -> Vec<BitWord> {
        (0..1usize << len).map(|k| BitWord((0..len).map(|t| ((k >> (len - 1 - t)) & 1) as u8).collect())).collect()
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// `[f_u(0), f_u(1)]` for the composed similarity `f_u = f_{u_1} o ... o f_{u_k}`.
pub fn cylinder_interval(p: &CantorParam, u: &BitWord) -> Result<(Rational, Rational)> {
    p.require_strict()?;
    let left = Rational::from(1 - p.a.clone()) * u.weighted_sum(&p.a);
    let right = Rational::from(&left + rpow(&p.a, u.len() as u32));
    Ok((left, right))
}

/// Enclosure of `mu_a([lo, hi))` of width at most `tol`.
pub fn mu_mass(p: &CantorParam, lo: &Rational, hi: &Rational, tol: &Rational) -> Result<MassBound> {
    p.require_strict()?;
    if *tol <= 0 {
        return precondition("tolerance must be positive");
    }
    if hi <= lo {
        return Ok(MassBound::new(Rational::new(), Rational::new()));
    }
    // at most two cylinders per depth straddle an endpoint
    let mut cap = 0u32;
    while Rational::from((2u32, 1u32)) / Rational::from(rug::Integer::from(1) << cap) > *tol {
        cap += 1;
    }
    let a = &p.a;
    let gap = Rational::from(1 - a.clone());
    let mut lengths = vec![Rational::from(1)];
    for k in 0..cap as usize {
        lengths.push(Rational::from(&lengths[k] * a));
    }
    let mut inside = rug::Integer::new();
    let mut straddle = rug::Integer::new();
    let mut stack = vec![(Rational::new(), 0u32)];
    while let Some((left, k)) = stack.pop() {
        let right = Rational::from(&left + &lengths[k as usize]);
        if right <= *lo || left >= *hi {
            continue;
        }
        if left >= *lo && right <= *hi {
            inside += rug::Integer::from(1) << (cap - k);
            continue;
        }
        if k == cap {
            straddle += 1;
            continue;
        }
        let step = Rational::from(&gap * &lengths[k as usize]);
        stack.push((Rational::from(&left + &step), k + 1));
        stack.push((left, k + 1));
    }
    let unit = rug::Integer::from(1) << cap;
    let lo_m = Rational::from((inside.clone(), unit.clone()));
    let hi_m = Rational::from((inside + straddle, unit));
    Ok(MassBound::new(lo_m, hi_m))
}

/// Truncation depth `ceil(log tol / log a)` giving sample error at most `tol`.
pub fn sample_depth(p: &CantorParam, tol: f64) -> usize {
    assert!(tol > 0.0 && tol < 1.0);
    (tol.ln() / p.a_f64().ln()).ceil().max(1.0) as usize
}

/// `(1-a) sum_{j<depth} w_j a^j` with fair bits drawn from `rng`.
pub fn sample<R: RngCore + ?Sized>(p: &CantorParam, depth: usize, rng: &mut R) -> f64 {
    assert!(depth >= 1, "depth must be at least 1");
    let a = p.a_f64();
    let mut acc = 0.0;
    let mut w = 1.0;
    let mut bits = 0u64;
    for j in 0..depth {
        if j % 64 == 0 {
            bits = rng.next_u64();
        }
        if bits & 1 == 1 {
            acc += w;
        }
        bits >>= 1;
        w *= a;
    }
    (1.0 - a) * acc
}

/// The finite random sum for a prescribed bit string, exact.
pub fn sample_exact(p: &CantorParam, bits: &BitWord) -> Rational {
    Rational::from(1 - p.a.clone()) * bits.weighted_sum(&p.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    fn third() -> CantorParam {
        CantorParam::new(rat(1, 3)).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(CantorParam::new(rat(0, 1)).is_err());
        assert!(CantorParam::new(rat(1, 1)).is_err());
        assert!(CantorParam::new(rat(3, 2)).is_err());
        assert!(!CantorParam::new(rat(1, 2)).unwrap().is_strict());
    }

    #[test]
    fn cylinders() {
        let p = third();
        assert_eq!(cylinder_interval(&p, &BitWord::parse("0").unwrap()).unwrap(), (rat(0, 1), rat(1, 3)));
        assert_eq!(cylinder_interval(&p, &BitWord::parse("1").unwrap()).unwrap(), (rat(2, 3), rat(1, 1)));
        let q = CantorParam::new(rat(1, 4)).unwrap();
        assert_eq!(cylinder_interval(&q, &BitWord::parse("01").unwrap()).unwrap(), (rat(3, 16), rat(4, 16)));
        let half = CantorParam::new(rat(1, 2)).unwrap();
        assert!(cylinder_interval(&half, &BitWord::empty()).is_err());
    }

    #[test]
    fn dimensions() {
        let q = CantorParam::new(rat(1, 4)).unwrap();
        assert_eq!(q.dimension_exact(), Some(&rat(1, 2)));
        let h = CantorParam::new(rat(1, 2)).unwrap();
        assert_eq!(h.dimension_exact(), Some(&rat(1, 1)));
        let d = similarity_dimension(&third());
        assert!(d.contains_f64(0.630_929_753_571_457_4) || (d.mid_f64() - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert!(d.width_f64() < 1e-30);
        assert!(third().dimension_exact().is_none());
    }

    #[test]
    fn masses() {
        let p = third();
        let tol = rat(1, 1_000_000);
        let m = mu_mass(&p, &rat(0, 1), &rat(1, 9), &tol).unwrap();
        assert!(m.contains(&rat(1, 4)));
        assert!(m.width() <= tol);
        let all = mu_mass(&p, &rat(0, 1), &rat(1, 1), &tol).unwrap();
        assert!(all.contains(&rat(1, 1)));
        let gap = mu_mass(&p, &rat(1, 3), &rat(2, 3), &tol).unwrap();
        assert!(gap.contains(&rat(0, 1)));
        assert_eq!(gap.lo, 0);
        assert!(mu_mass(&p, &rat(0, 1), &rat(1, 1), &rat(0, 1)).is_err());
    }

    #[test]
    fn sample_values() {
        let p = third();
        assert_eq!(sample_exact(&p, &BitWord::parse("10").unwrap()), rat(2, 3));
        let mut zeros = rand::rngs::mock::StepRng::new(0, 0);
        assert_eq!(sample(&p, 40, &mut zeros), 0.0);
        let mut ones = rand::rngs::mock::StepRng::new(u64::MAX, 0);
        assert!((sample(&p, 60, &mut ones) - 1.0).abs() < 1e-15);
        assert_eq!(sample_depth(&p, 1e-6), 13);
    }
}
