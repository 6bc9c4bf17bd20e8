use std::sync::RwLock;

use rug::Rational;

use super::{PairParam, Skew};
use crate::error::{precondition, Result};
use crate::real::{rpow, Real, DEFAULT_PREC};

/// The rotation `x -> x + alpha mod beta` on `[0, beta)` with
/// `alpha = log(b/a)` and `beta = l log(1/b)`.
///
/// Every orbit point has the form `R^k(0) = k log(1/a) - m_k log(1/b)`, so the
/// branch decisions reduce to exact comparisons of rational powers and the
/// orbit is stored as the integer sequence `m_k` (the y-depth of generation k).
#[derive(Debug)]
pub struct RotationScheme {
    a: Rational,
    b: Rational,
    ell: u32,
    alpha: Real,
    beta: Real,
    ln_inv_a: Real,
    ln_inv_b: Real,
    // (m_k, b^{m_k} / a^k)
    orbit: RwLock<Vec<(u32, Rational)>>,
}

/// Scheme for the pair; `ell = None` picks the least admissible `l`.
pub fn build_rotation(pp: &PairParam, ell: Option<u32>) -> Result<RotationScheme> {
    let (a, b) = (pp.a().clone(), pp.b().clone());
    let admissible = |l: u32| rpow(&b, l + 1) < a;
    let ell = match ell {
        Some(l) if l == 0 || !admissible(l) => {
            return precondition(format!("l = {l} violates b/a < b^-l for {pp}"));
        }
        Some(l) => l,
        None => (1..).find(|&l| admissible(l)).expect("b < 1"),
    };
    let prec = DEFAULT_PREC;
    let ln_inv_a = Real::ln_rational(&Rational::from(a.recip_ref()), prec);
    let ln_inv_b = Real::ln_rational(&Rational::from(b.recip_ref()), prec);
    let alpha = ln_inv_a.sub(&ln_inv_b);
    let beta = ln_inv_b.mul(&Real::from_int(ell as i64, prec));
    Ok(RotationScheme { a, b, ell, alpha, beta, ln_inv_a, ln_inv_b, orbit: RwLock::new(vec![(0, Rational::from(1))]) })
}

impl RotationScheme {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn alpha(&self) -> &Real {
        &self.alpha
    }

    pub fn beta(&self) -> &Real {
        &self.beta
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// `e^beta = b^-l`.
    pub fn exp_beta(&self) -> Rational {
        rpow(&Rational::from(self.b.recip_ref()), self.ell)
    }

    fn extend_to(&self, k: usize) {
        if self.orbit.read().unwrap().len() > k {
            return;
        }
        let mut orbit = self.orbit.write().unwrap();
        let step_in = Rational::from(&self.b / &self.a);
        let step_out = Rational::from(&step_in * rpow(&self.b, self.ell));
        let threshold = self.exp_beta();
        while orbit.len() <= k {
            let (m, e) = orbit.last().unwrap().clone();
            let next_in = Rational::from(&e * &step_in);
            // a tie (only possible for rational log b / log a) wraps
            orbit.push(if next_in < threshold { (m + 1, next_in) } else { (m + self.ell + 1, Rational::from(&e * &step_out)) });
        }
    }

    /// `m_k`, the number of `b`-levels used by generation `k` of the x-family.
    pub fn y_depth(&self, k: usize) -> u32 {
        self.extend_to(k);
        self.orbit.read().unwrap()[k].0
    }

    pub fn y_depths(&self, upto: usize) -> Vec<u32> {
        self.extend_to(upto);
        self.orbit.read().unwrap()[..=upto].iter().map(|(m, _)| *m).collect()
    }

    /// Whether `R^k(0) + alpha < beta`.
    pub fn branch(&self, k: usize) -> bool {
        self.y_depth(k + 1) - self.y_depth(k) == 1
    }

    /// `e^{R^k(0)} = b^{m_k} / a^k`, exact and in `[1, e^beta)`.
    pub fn eccentricity(&self, k: usize) -> Rational {
        self.extend_to(k);
        self.orbit.read().unwrap()[k].1.clone()
    }

    /// Enclosure of `R^k(0)`.
    pub fn orbit(&self, k: usize) -> Real {
        let m = self.y_depth(k);
        self.ln_inv_a.mul(&Real::from_int(k as i64, DEFAULT_PREC)).sub(&self.ln_inv_b.mul(&Real::from_int(m as i64, DEFAULT_PREC)))
    }

    /// Whether the skew's log lies in `[0, beta)`, i.e. `1 <= lambda < b^-l`.
    pub fn in_fundamental_domain(&self, s: &Skew) -> Result<bool> {
        use std::cmp::Ordering::*;
        let lower = s.cmp_rational(&Rational::from(1))?;
        let upper = s.cmp_rational(&self.exp_beta())?;
        Ok(lower != Less && upper == Less)
    }

    /// `R^n(s)` for `s` in `[0, beta)`, with a flag telling whether the
    /// second case `R^n(0) + s >= beta` occurred.
    pub fn rotate(&self, s: &Skew, n: usize) -> Result<(Skew, bool)> {
        if !self.in_fundamental_domain(s)? {
            return precondition(format!("log lambda for lambda = {s} is outside [0, beta)"));
        }
        let moved = s.scaled(&self.eccentricity(n));
        if moved.cmp_rational(&self.exp_beta())? == std::cmp::Ordering::Less {
            Ok((moved, false))
        } else {
            Ok((moved.scaled(&rpow(&self.b, self.ell)), true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::rat;

    fn pair() -> PairParam {
        PairParam::from_ratios(rat(1, 4), rat(1, 3)).unwrap()
    }

    #[test]
    fn least_ell() {
        let s = build_rotation(&pair(), None).unwrap();
        assert_eq!(s.ell(), 1);
        assert!(s.alpha().contains_f64((4.0f64 / 3.0).ln()) || (s.alpha().mid_f64() - 0.287_682_072_451_780_9).abs() < 1e-15);
        assert!(build_rotation(&pair(), Some(0)).is_err());
        assert_eq!(build_rotation(&pair(), Some(3)).unwrap().ell(), 3);
        let p = PairParam::from_ratios(rat(1, 10), rat(2, 5)).unwrap();
        // (2/5)^2 = 4/25 > 1/10, (2/5)^3 = 8/125 < 1/10
        assert_eq!(build_rotation(&p, None).unwrap().ell(), 2);
        assert!(build_rotation(&p, Some(1)).is_err());
    }

    #[test]
    fn orbit_matches_float_rotation() {
        let s = build_rotation(&pair(), None).unwrap();
        let (alpha, beta) = (s.alpha().mid_f64(), s.beta().mid_f64());
        let mut x = 0.0f64;
        for k in 0..200 {
            let r = s.orbit(k);
            assert!(r.lo_f64() >= -1e-30 && r.hi_f64() < beta);
            assert!((r.mid_f64() - x).abs() < 1e-9, "k={k}");
            let e = s.eccentricity(k);
            assert!(e >= 1 && e < s.exp_beta());
            x = (x + alpha) % beta;
            assert_eq!(s.branch(k), r.mid_f64() + alpha < beta);
        }
    }

    #[test]
    fn rotation_of_skew() {
        let s = build_rotation(&pair(), None).unwrap();
        let one = Skew::from_lambda(rat(1, 1)).unwrap();
        for n in 0..30 {
            let (t, wrapped) = s.rotate(&one, n).unwrap();
            let e = s.eccentricity(n);
            assert_eq!(t.exact().unwrap(), &e);
            assert!(!wrapped);
        }
        let big = Skew::from_lambda(rat(5, 2)).unwrap();
        let (t, wrapped) = s.rotate(&big, 1).unwrap();
        // 5/2 * 4/3 = 10/3 >= 3, so it wraps to 10/9
        assert!(wrapped);
        assert_eq!(t.exact().unwrap(), &rat(10, 9));
        assert!(s.rotate(&Skew::from_lambda(rat(1, 2)).unwrap(), 1).is_err());
    }
}
