use cantor_core::algebraic::{certify_pisot, epsilon_constant, isolate_roots, power_distance, IntPolynomial, PisotVerdict};
use cantor_core::real::Real;
use rug::Integer;

fn poly(c: &[i64]) -> IntPolynomial {
    IntPolynomial::from_i64(c).unwrap()
}

// constant-first
const PISOT: [&[i64]; 6] = [&[-3, 1], &[-4, 1], &[-1, -1, 1], &[-1, -1, 0, 1], &[1, -3, 1], &[-1, 0, -1, 1]];

fn cpow(re: &Real, im: &Real, n: u32) -> (Real, Real) {
    let prec = re.prec();
    let (mut pr, mut pi) = (Real::from_int(1, prec), Real::from_int(0, prec));
    for _ in 0..n {
        let nr = pr.mul(re).sub(&pi.mul(im));
        let ni = pr.mul(im).add(&pi.mul(re));
        pr = nr;
        pi = ni;
    }
    (pr, pi)
}

#[test]
fn root_boxes_contain_zeros() {
    for c in PISOT.iter().chain([&[1i64, 1, 1][..], &[-2, 0, 1], &[1, 0, 0, 1, 1]].iter()) {
        let p = poly(c);
        for r in isolate_roots(&p, 128).unwrap() {
            let (vr, vi) = p.eval_complex(&r.box_re(), &r.box_im());
            assert!(vr.contains_zero() && vi.contains_zero(), "{p}: root {:?}", r);
        }
    }
}

#[test]
fn power_sums_round_the_root_powers() {
    for c in PISOT {
        let p = poly(c);
        let roots = isolate_roots(&p, 512).unwrap();
        let sums = p.power_sums(40);
        for n in 0..=40u32 {
            let mut total = Real::from_int(0, 512);
            for r in &roots {
                let (re, _) = cpow(&r.box_re(), &r.box_im(), n);
                total = total.add(&re);
            }
            let k: Integer = total.nearest_integer_certain().expect("certified rounding");
            assert_eq!(k, sums[n as usize], "{p} n={n}");
        }
    }
}

#[test]
fn distances_obey_the_geometric_bound() {
    for c in PISOT {
        let p = poly(c);
        let cert = certify_pisot(&p, 128).unwrap().certificate().unwrap();
        let g = cert.gamma.hi_f64();
        let mut prev: Option<f64> = None;
        for n in 1..=40 {
            let pd = power_distance(&cert, n).unwrap();
            assert!(pd.bound_holds(), "{p} n={n}");
            assert!(pd.conjugate_sum.lo() <= pd.bound.hi());
            let b = pd.bound.hi_f64();
            if let Some(q) = prev {
                assert!(b <= g * q * (1.0 + 1e-12) + 1e-300, "{p} n={n}");
            }
            prev = Some(b);
        }
        let eps = epsilon_constant(&cert).unwrap();
        assert!(eps.is_positive(), "{p}: {eps}");
    }
}

#[test]
fn rejects_non_pisot() {
    // sqrt 2 has conjugate -sqrt 2; x^2 - 2x - 2 has conjugate 1 - sqrt 3 inside, so it is Pisot
    for c in [&[-2i64, 0, 1][..], &[1, -1, 0, 0, 1], &[-1, 0, 0, 0, 1]] {
        match certify_pisot(&poly(c), 128) {
            Ok(PisotVerdict::Rejected(_)) => {}
            Ok(PisotVerdict::Pisot(cert)) => panic!("{} accepted with theta {}", poly(c), cert.theta),
            Err(_) => {}
        }
    }
    let cert = certify_pisot(&poly(&[-2, -2, 1]), 128).unwrap().certificate().unwrap();
    assert!(cert.theta.contains_f64(1.0 + 3f64.sqrt()) || (cert.theta.mid_f64() - (1.0 + 3f64.sqrt())).abs() < 1e-12);
}
