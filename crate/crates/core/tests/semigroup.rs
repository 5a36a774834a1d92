mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdblow::similarity::*;

#[test]
fn oracle_agrees_with_closed_form() {
    for (a, b) in [(-0.1, 0.1), (-1.0, 2.0), (0.5, 3.0)] {
        for sigma in [0.1, 1.0, 5.0] {
            for th in [-2.0, 0.0, 1.0] {
                let x = oracle_indicator_flow(a, b, 1.0, sigma, th);
                let y = erf_indicator_flow(a, b, 1.0, sigma, th);
                assert!((x - y).abs() < 1e-12, "{a} {b} {sigma} {th}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn indicator_flow_matches_erf() {
    for (a, b) in [(-0.1, 0.1), (-1.0, 2.0), (0.5, 3.0), (-0.001, 0.001)] {
        let phi = Indicator { a, b };
        for delta in [0.5, 1.0, 4.0] {
            for sigma in [0.01, 1.0, 5.0] {
                for th in [-3.0, -0.2, 0.0, 0.7, 6.0] {
                    let got = ou_semigroup_apply(&phi, delta, sigma, th).unwrap();
                    let want = erf_indicator_flow(a, b, delta, sigma, th);
                    assert!((got - want).abs() <= 1e-10, "{a} {b} {delta} {sigma} {th}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn smoothing_ratio_example_at_sigma_two() {
    let got = smoothing_ratio(&Indicator { a: -0.1, b: 0.1 }, 1.0, 2.0, 1.0, 2.0, 1.0).unwrap();
    let want = oracle_indicator_ratio(0.1, 1.0, 1.0, 2.0, 1.0, 2.0);
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}

#[test]
fn smoothing_needs_a_delay() {
    let mut last = 0.0;
    for a in [0.1, 0.01, 0.001] {
        let r = smoothing_ratio(&Indicator { a: -a, b: a }, 1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
        let exact = 1.0 / libm::erf(a / 2.0).sqrt();
        assert!((r - exact).abs() <= 1e-8 * exact);
        assert!(r > 3.0 * last);
        last = r;
    }
}

#[test]
fn delayed_smoothing_constant_is_uniform() {
    // Sup over the shrinking family at σ = 1, δ = λ = 1, k = 1, m = 2.
    let family = [1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 0.0003];
    let mut sup: f64 = 0.0;
    for a in family {
        let r = smoothing_ratio(&Indicator { a: -a, b: a }, 1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        let o = oracle_indicator_ratio(a, 1.0, 1.0, 1.0, 1.0, 2.0);
        assert!((r - o).abs() <= 1e-4 * o, "a = {a}: {r} vs {o}");
        sup = sup.max(r);
    }
    // Limit of the family: the transition density of a point mass, computed by
    // the oracle at a vanishing half-width.
    let limit = oracle_indicator_ratio(1e-6, 1.0, 1.0, 1.0, 1.0, 2.0);
    assert!(sup <= limit * (1.0 + 1e-4), "{sup} vs {limit}");
    assert!((sup - limit).abs() <= 1e-3 * limit);
}

#[test]
fn positivity_is_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let xs: Vec<f64> = (0..6).map(|k| -5.0 + 2.0 * k as f64 + rng.gen_range(0.0..1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|_| rng.gen_range(0.0..3.0)).collect();
        let sup = ys.iter().copied().fold(0.0, f64::max);
        let phi = PiecewiseLinear::new(xs, ys).unwrap();
        for sigma in [0.1, 1.0, 5.0] {
            for k in 0..=20 {
                let th = -10.0 + k as f64;
                assert!(ou_semigroup_apply(&phi, 1.0, sigma, th).unwrap() >= -1e-12 * sup);
            }
        }
    }
}

#[test]
fn cross_weight_bound_for_point_like_data() {
    // Narrow indicators push the ratio towards its extreme.
    for (d, l) in [(0.5, 1.0), (1.0, 4.0)] {
        for sigma in [0.1, 1.0, 5.0] {
            let r = smoothing_ratio(&Indicator { a: 2.0, b: 2.01 }, d, sigma, 1.0, 1.0, l).unwrap();
            assert!(r <= (l / d as f64).sqrt() + 1e-8, "{d} {l} {sigma}: {r}");
        }
    }
}
