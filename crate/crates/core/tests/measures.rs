use cantor_core::measures::{cylinder_interval, mu_mass, sample, sample_depth, BitWord, CantorParam};
use cantor_core::real::rat;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::Rational;

fn param(q: i64) -> CantorParam {
    CantorParam::new(rat(1, q)).unwrap()
}

fn point(num: i64) -> Rational {
    rat(num, 1 << 20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn additive_over_adjacent_intervals(q in 3i64..8, mut cuts in proptest::collection::vec(0i64..(1 << 20), 3)) {
        cuts.sort_unstable();
        let p = param(q);
        let tol = rat(1, 1 << 12);
        let (x, y, z) = (point(cuts[0]), point(cuts[1]), point(cuts[2]));
        let left = mu_mass(&p, &x, &y, &tol).unwrap();
        let right = mu_mass(&p, &y, &z, &tol).unwrap();
        let whole = mu_mass(&p, &x, &z, &tol).unwrap();
        let lo = Rational::from(&left.lo + &right.lo);
        let hi = Rational::from(&left.hi + &right.hi);
        prop_assert!(lo <= whole.hi && whole.lo <= hi);
    }

    #[test]
    fn self_similar_under_both_maps(q in 3i64..8, mut cuts in proptest::collection::vec(0i64..(1 << 20), 2)) {
        cuts.sort_unstable();
        let p = param(q);
        let a = p.a().clone();
        let tol = rat(1, 1 << 12);
        let (x, y) = (point(cuts[0]), point(cuts[1]));
        let base = mu_mass(&p, &x, &y, &tol).unwrap();
        let shift = Rational::from(1 - a.clone());
        for off in [Rational::new(), shift] {
            let sx = Rational::from(&a * &x) + &off;
            let sy = Rational::from(&a * &y) + &off;
            let img = mu_mass(&p, &sx, &sy, &tol).unwrap();
            let lo = Rational::from(&base.lo / 2u32);
            let hi = Rational::from(&base.hi / 2u32);
            prop_assert!(lo <= img.hi && img.lo <= hi, "q={} [{}, {})", q, x, y);
        }
    }

    #[test]
    fn cylinders_carry_dyadic_mass(q in 3i64..8, bits in proptest::collection::vec(0u8..2, 1..8)) {
        let p = param(q);
        let u = BitWord::new(bits.clone());
        let (l, r) = cylinder_interval(&p, &u).unwrap();
        // half-open: the right endpoint of a cylinder is never an atom
        let m = mu_mass(&p, &l, &r, &rat(1, 1 << 16)).unwrap();
        let want = rat(1, 1 << bits.len());
        prop_assert!(m.contains(&want));
    }
}

#[test]
fn samples_match_mean_and_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for q in [3i64, 4, 5] {
        let p = param(q);
        let a = 1.0 / q as f64;
        let depth = sample_depth(&p, 1e-12);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| sample(&p, depth, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var_true = (1.0 - a) / (4.0 * (1.0 + a));
        let se = (var_true / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= 4.0 * se, "q={q} mean {mean}");
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - var_true).abs() <= 0.05 * var_true, "q={q} var {var} vs {var_true}");
        // every sample lies in a depth-8 cylinder of the Cantor set
        for &x in xs.iter().take(200) {
            let mut y = x;
            for _ in 0..8 {
                assert!(y <= a + 1e-9 || y >= 1.0 - a - 1e-9, "q={q} x={x}");
                y = if y <= a + 1e-9 { y / a } else { (y - (1.0 - a)) / a };
                y = y.clamp(0.0, 1.0);
            }
        }
    }
}

#[test]
fn whole_interval_is_probability() {
    let p = param(3);
    let m = mu_mass(&p, &rat(0, 1), &rat(2, 1), &rat(1, 1000)).unwrap();
    assert!(m.contains(&rat(1, 1)));
    assert_eq!(m.lo, m.hi);
}
