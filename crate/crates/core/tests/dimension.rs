use cantor_core::dimension::{correlation_integral, dim_slope, furman_average, CorrelationMethod};
use cantor_core::lattice::{build_rotation, cover_tau, PairParam, Skew, TauOptions};
use cantor_core::real::{rat, rpow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(p: i64, q: i64) -> PairParam {
    PairParam::from_ratios(rat(1, p), rat(1, q)).unwrap()
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pp = pair(4, 3);
    let s = Skew::from_lambda(rat(1, 1)).unwrap();
    let exact = correlation_integral(&pp, &s, 4, CorrelationMethod::Exact { tol: 1e-3 }, &mut rng).unwrap();
    let mc = correlation_integral(&pp, &s, 4, CorrelationMethod::MonteCarlo { samples: 100_000 }, &mut rng).unwrap();
    let e = exact.bound;
    let gap = (e.lo - mc.estimate).max(mc.estimate - e.hi).max(0.0);
    assert!(gap <= 4.0 * mc.stderr, "exact {e} mc {} +- {}", mc.estimate, mc.stderr);
}

#[test]
fn correlation_is_comparable_to_tau() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pp = pair(4, 3);
    let sc = build_rotation(&pp, None).unwrap();
    let s = Skew::from_lambda(rat(6, 5)).unwrap();
    let mut ratios = Vec::new();
    for n in 1..=5 {
        let c = correlation_integral(&pp, &s, n, CorrelationMethod::Exact { tol: 1e-2 }, &mut rng).unwrap().bound;
        let t = cantor_core::lattice::tau_rel(&pp, &sc, n, &s, 2.0, 1e-2).unwrap().value;
        ratios.push(c.mid() / t.mid());
    }
    // a ball of radius a^n meets at most three cells and contains the cell of its center
    for r in &ratios {
        assert!(*r >= 0.9 && *r <= 3.5, "{ratios:?}");
    }
}

#[test]
fn slope_respects_the_lipschitz_bound() {
    let pp = pair(5, 4);
    let sc = build_rotation(&pp, None).unwrap();
    let dsum = pp.dim_sum().hi_f64();
    for lam in [rat(1, 1), rat(3, 2), rat(17, 10)] {
        let est = dim_slope(&pp, &sc, &Skew::from_lambda(lam).unwrap(), 2.0, (3, 8), 0.1).unwrap();
        assert!(est.slope <= dsum + 3.0 * est.stderr.unwrap() + est.enclosure_slack, "{}", est.slope);
    }
}

#[test]
fn slope_is_grid_independent() {
    let pp = pair(4, 3);
    let sc = build_rotation(&pp, None).unwrap();
    let s = Skew::from_lambda(rat(1, 1)).unwrap();
    let range = (3, 8);
    let est = dim_slope(&pp, &sc, &s, 2.0, range, 0.05).unwrap();
    let ln_a = pp.a().to_f64().ln();
    let opts = TauOptions { rel: Some(0.05), tol: 0.0, ..TauOptions::default() };
    for frac in [rat(1, 3), rat(5, 7)] {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for n in range.0..=range.1 {
            let off = rpow(pp.a(), n) * frac.clone();
            let t = cover_tau(&pp, &sc, n, &s, &off, &opts).unwrap().value;
            x.push(n as f64 * ln_a);
            y.push(t.log_mid());
        }
        let k = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(u, v)| (u - mx) * (v - my)).sum();
        let slope = sxy / sxx;
        let se = est.stderr.unwrap().max(1e-3);
        assert!((slope - est.slope).abs() <= 2.0 * se + 2.0 * est.enclosure_slack, "offset slope {slope} vs {}", est.slope);
    }
}

#[test]
fn furman_average_trends_with_n() {
    let pp = pair(4, 3);
    let sc = build_rotation(&pp, None).unwrap();
    let values: Vec<f64> = (1..=4).map(|n| furman_average(&pp, &sc, n, 6, 0.1).unwrap().value.unwrap()).collect();
    // the average of log tau_n / (n log a) lies below min(d_a + d_b, 1) plus
    // the O(1/n) constant, and the constant's effect shrinks with n
    let gaps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(gaps.windows(2).all(|g| g[1] <= g[0] + 1e-3), "{values:?}");
}
