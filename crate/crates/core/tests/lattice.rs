use cantor_core::lattice::{
    build_rotation, cover_tau, enumerate_x, partition_check, tau_rel, total_mass, NodeKind, PairParam, Skew, TauOptions,
};
use cantor_core::measures::{mu_mass, sample, sample_depth};
use cantor_core::real::{rat, rpow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

fn pair(p: i64, q: i64) -> PairParam {
    PairParam::from_ratios(rat(1, p), rat(1, q)).unwrap()
}

#[test]
fn partitions_hold_for_both_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for pp in [pair(4, 3), pair(5, 4), pair(6, 3)] {
        let sc = build_rotation(&pp, None).unwrap();
        for n in [1, 4, 7] {
            let rep = partition_check(&pp, &sc, n, 150, &mut rng).unwrap();
            assert!(rep.passed(), "{pp} n={n}: {:?}", rep.violations);
        }
    }
}

#[test]
fn x_family_sizes_follow_the_orbit() {
    for pp in [pair(4, 3), pair(5, 4)] {
        let sc = build_rotation(&pp, None).unwrap();
        let e_beta = sc.beta().exp();
        for n in 0..=6 {
            for node in enumerate_x(&pp, &sc, n).unwrap() {
                assert_eq!(node.kind, NodeKind::X);
                let (w, h) = node.size_from_orbit(&sc);
                assert_eq!(w, rpow(pp.a(), n as u32));
                assert!(h.contains_rational(&node.height), "{pp} n={n} {}", node.xi);
                let ecc = Rational::from(&node.height / &node.width);
                assert!(ecc >= 1 && e_beta.gt_rational(&ecc), "eccentricity {ecc}");
            }
        }
    }
}

fn rect_mass(pp: &PairParam, x: (&Rational, &Rational), y: (&Rational, &Rational), tol: &Rational) -> (Rational, Rational) {
    let mx = mu_mass(pp.pa(), x.0, x.1, tol).unwrap();
    let my = mu_mass(pp.pb(), y.0, y.1, tol).unwrap();
    (Rational::from(&mx.lo * &my.lo), Rational::from(&mx.hi * &my.hi))
}

#[test]
fn eta_decomposes_over_the_x_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pp = pair(4, 3);
    let sc = build_rotation(&pp, None).unwrap();
    let n = 3;
    let nodes = enumerate_x(&pp, &sc, n).unwrap();
    let tol = rat(1, 1 << 14);
    for _ in 0..6 {
        let mut c: Vec<Rational> = (0..4).map(|_| rat(rng.gen_range(0..1 << 16), 1 << 16)).collect();
        if c[0] > c[1] {
            c.swap(0, 1);
        }
        if c[2] > c[3] {
            c.swap(2, 3);
        }
        let (lo, hi) = rect_mass(&pp, (&c[0], &c[1]), (&c[2], &c[3]), &tol);
        let (mut slo, mut shi) = (Rational::new(), Rational::new());
        for node in &nodes {
            let pull = |v: &Rational, t: &Rational, s: &Rational| Rational::from(v - t) / s;
            let (tx, ty) = &node.translation;
            let x0 = pull(&c[0], tx, &node.width);
            let x1 = pull(&c[1], tx, &node.width);
            let y0 = pull(&c[2], ty, &node.height);
            let y1 = pull(&c[3], ty, &node.height);
            let (l, h) = rect_mass(&pp, (&x0, &x1), (&y0, &y1), &tol);
            slo += l;
            shi += h;
        }
        let count = Rational::from(nodes.len() as u64);
        slo /= &count;
        shi /= &count;
        assert!(slo <= hi && lo <= shi, "[{lo}, {hi}] vs [{slo}, {shi}]");
    }
}

#[test]
fn covering_lemma_at_random_offsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for pp in [pair(4, 3), pair(5, 4)] {
        let sc = build_rotation(&pp, None).unwrap();
        let beta = sc.beta().lo_f64();
        for _ in 0..50 {
            let n = rng.gen_range(0..=6u32);
            let s = Rational::from_f64(rng.gen_range(0.0..beta)).unwrap();
            let skew = Skew::from_log(s);
            let offset = rpow(pp.a(), n) * rat(rng.gen_range(0..1 << 20), 1 << 20);
            let t = tau_rel(&pp, &sc, n, &skew, 2.0, 0.05).unwrap().value;
            let opts = TauOptions { rel: Some(0.05), tol: 0.0, ..TauOptions::default() };
            let c = cover_tau(&pp, &sc, n, &skew, &offset, &opts).unwrap().value;
            assert!(c.lo >= t.hi / 4.0 && c.hi <= 4.0 * t.lo, "{pp} n={n} tau {t} cover {c}");
        }
    }
}

#[test]
fn tau_encloses_sampled_collision_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pp = pair(4, 3);
    let sc = build_rotation(&pp, None).unwrap();
    let lam = rat(7, 5);
    let skew = Skew::from_lambda(lam.clone()).unwrap();
    let l = lam.to_f64();
    let n = 3;
    let h = rpow(pp.a(), n).to_f64();
    let t = tau_rel(&pp, &sc, n, &skew, 2.0, 1e-3).unwrap().value;
    let da = sample_depth(pp.pa(), 1e-12);
    let db = sample_depth(pp.pb(), 1e-12);
    let samples = 200_000;
    let mut cells: Vec<i64> =
        (0..samples).map(|_| ((sample(pp.pa(), da, &mut rng) + l * sample(pp.pb(), db, &mut rng)) / h).floor() as i64).collect();
    cells.sort_unstable();
    // p = sum_I eta(I)^2 estimated by matched disjoint pairs
    let half = samples / 2;
    let mut rng2 = ChaCha8Rng::seed_from_u64(100);
    let hits = (0..half)
        .filter(|_| {
            let i = rng2.gen_range(0..samples);
            let j = rng2.gen_range(0..samples);
            i != j && cells[i] == cells[j]
        })
        .count();
    let p = hits as f64 / half as f64;
    let se = (p * (1.0 - p) / half as f64).sqrt();
    assert!(p + 4.0 * se >= t.lo && p - 4.0 * se <= t.hi, "p={p} se={se} tau={t}");
}

#[test]
fn total_mass_is_one() {
    for pp in [pair(4, 3), pair(4, 4), pair(5, 4)] {
        let sc = build_rotation(&pp, None).unwrap();
        for lam in [rat(1, 1), rat(13, 10)] {
            let m = total_mass(&pp, &sc, 4, &Skew::from_lambda(lam).unwrap(), 6).unwrap();
            assert!(m.contains(1.0), "{pp}: {m}");
        }
    }
}
