//! Solver outputs against independent numerical oracles: adaptive Simpson
//! for Gaussian expectations, discretised Bayes for the posterior, dense
//! grids for maximisers and bracketing for the fixed point.

use approx::assert_relative_eq;
use proptest::prelude::*;

use infoval::agents::{
    f0_by_bracketing, g1, posterior_of_jump, q_bar_signal, solve_signal_insider,
    solve_timing_insider, solve_uninformed, SignalSolveOptions,
};
use infoval::model::Psi;
use infoval::optimize::maximize_bounded;
use infoval::quadrature::{
    adaptive_simpson, expect_gaussian, g_of_q, gauss_hermite, phi2, psi_double_integral,
    QuadratureRule,
};
use infoval::{Error, ModelParams};

fn pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn simpson_expectation(f: impl Fn(f64) -> f64, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    adaptive_simpson(&|x: f64| f(x) * pdf(x, mean, var), mean - 14.0 * sd, mean + 14.0 * sd, 1e-14)
}

fn grid_argmax(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| i as f64 / n as f64)
        .map(|x| (f(x), x))
        .fold((f64::NEG_INFINITY, 0.0), |best, c| if c.0 > best.0 { c } else { best })
        .1
}

#[test]
fn hermite_rule_integrates_gaussian_moments() {
    let rule = gauss_hermite(40).unwrap();
    let mean = expect_gaussian(|x| x, 0.3, 0.5, &rule).unwrap();
    let second = expect_gaussian(|x| x * x, 0.3, 0.5, &rule).unwrap();
    let fourth = expect_gaussian(|x| (x - 0.3).powi(4), 0.3, 0.5, &rule).unwrap();
    assert_relative_eq!(mean, 0.3, max_relative = 1e-13);
    assert_relative_eq!(second, 0.5 + 0.09, max_relative = 1e-13);
    assert_relative_eq!(fourth, 3.0 * 0.25, max_relative = 1e-13);
    let lognormal = expect_gaussian(f64::exp, -0.05, 0.01, &rule).unwrap();
    assert_relative_eq!(lognormal, (-0.05f64 + 0.005).exp(), max_relative = 1e-14);
}

#[test]
fn order_outside_range_is_rejected() {
    assert!(matches!(gauss_hermite(0), Err(Error::QuadratureOrder(0))));
    assert!(matches!(gauss_hermite(201), Err(Error::QuadratureOrder(201))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn g_matches_simpson(q in 0.0..1.0f64, m in -0.3..0.2f64, v in 0.001..0.1f64, big_r in 1.2..5.0f64) {
        let p = ModelParams { m, v, risk_aversion: big_r, ..ModelParams::CANON };
        let value = g_of_q(q, &p, &QuadratureRule::default()).unwrap();
        let oracle = simpson_expectation(|x| (1.0 + q * x.exp_m1()).powf(1.0 - big_r), m, v);
        prop_assert!((value - oracle).abs() <= 1e-9 * oracle.abs(), "{value} vs {oracle}");
    }

    #[test]
    fn phi2_matches_simpson(q in 0.0..1.0f64, m in -0.3..0.2f64, v in 0.001..0.1f64) {
        let p = ModelParams { risk_aversion: 3.0, ..ModelParams::CANON };
        let value = phi2(q, m, v, &p, &QuadratureRule::default()).unwrap();
        let oracle = simpson_expectation(|x| p.utility(1.0 + q * x.exp_m1()), m, v);
        prop_assert!((value - oracle).abs() <= 1e-9 * oracle.abs(), "{value} vs {oracle}");
    }

    #[test]
    fn posterior_matches_discretised_bayes(eta in -1.0..1.0f64, v in 0.002..0.05f64, v_eps in 0.002..0.1f64) {
        let p = ModelParams { v, v_eps, ..ModelParams::CANON };
        let (mean, var) = posterior_of_jump(eta, &p).unwrap();
        let sd = v.sqrt();
        let n = 4001;
        let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x = p.m - 12.0 * sd + 24.0 * sd * i as f64 / (n - 1) as f64;
            let w = pdf(x, p.m, v) * pdf(eta, x, v_eps);
            w0 += w;
            w1 += w * x;
            w2 += w * x * x;
        }
        let oracle_mean = w1 / w0;
        prop_assert!((mean - oracle_mean).abs() < 1e-6);
        prop_assert!((var - (w2 / w0 - oracle_mean * oracle_mean)).abs() < 1e-6);
    }

    #[test]
    fn uninformed_fraction_is_the_grid_argmax(mu in 0.07..0.14f64, lambda in 0.1..2.0f64, m in -0.15..0.0f64) {
        let p = ModelParams { mu, lambda, m, ..ModelParams::CANON };
        let rule = QuadratureRule::default();
        let sol = solve_uninformed(&p, &rule);
        prop_assume!(sol.is_ok());
        let grid = grid_argmax(|q| g1(q, &p, &rule).unwrap(), 20_000);
        prop_assert!((sol.unwrap().q_bar1 - grid).abs() < 1e-4);
    }

    #[test]
    fn timing_fixed_point_matches_bracketing(big_r in 1.2..4.0f64, lambda in 0.1..2.0f64) {
        let p = ModelParams { risk_aversion: big_r, lambda, ..ModelParams::CANON };
        let sol = solve_timing_insider(&p, &QuadratureRule::default());
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        let bracketed = f0_by_bracketing(&sol).unwrap();
        prop_assert!((bracketed - sol.f0).abs() <= 1e-9 * sol.f0);
        prop_assert!((sol.phi(sol.f0) - sol.f0).abs() < 1e-10 * sol.f0.max(1.0));
    }
}

#[test]
fn double_integral_matches_nested_simpson() {
    let rule = QuadratureRule::default();
    for (q, m, v) in [(0.0, -0.05, 0.01), (0.4, -0.1, 0.03), (0.9, 0.1, 0.002)] {
        let p = ModelParams {
            m,
            v,
            ..ModelParams::CANON
        };
        let value = psi_double_integral(&Psi::Tanh, q, &p, &rule).unwrap();
        let oracle = simpson_expectation(
            |x1| {
                simpson_expectation(|x2| (x1 + x2).tanh(), 0.0, p.v_eps)
                    * (1.0 + q * x1.exp_m1()).powf(-p.risk_aversion)
            },
            m,
            v,
        );
        assert_relative_eq!(value, oracle, max_relative = 1e-7);
    }
}

#[test]
fn maximize_bounded_matches_dense_grid_for_both_policies() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let n = 200_000;
    let obj = |q: f64| g1(q, &p, &rule).unwrap();
    let found = maximize_bounded(obj, 0.0, 1.0, 1e-12).unwrap().argument;
    assert!((found - grid_argmax(obj, n)).abs() < 1e-5);

    let sol = solve_signal_insider(&p, &rule, &SignalSolveOptions::default()).unwrap();
    for eta in [-0.3, -0.05, 0.1, 0.25, 0.5] {
        let obj = |q: f64| sol.policy_objective(eta, q).unwrap();
        let grid = grid_argmax(obj, n);
        let found = maximize_bounded(obj, 0.0, 1.0, 1e-12).unwrap().argument;
        assert!((found - grid).abs() < 1e-5, "η = {eta}: {found} vs {grid}");
        let q = q_bar_signal(&sol, &p, eta, &rule).unwrap();
        assert!((q - grid).abs() < 1e-5, "η = {eta}: {q} vs {grid}");
    }
}

#[test]
fn signal_fraction_increases_with_the_signal() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let sol = solve_signal_insider(&p, &rule, &SignalSolveOptions::default()).unwrap();
    let mut prev = -1.0;
    for k in 0..=60 {
        let eta = -0.6 + 0.02 * k as f64;
        let q = q_bar_signal(&sol, &p, eta, &rule).unwrap();
        assert!(q >= prev - 1e-9, "q̄ decreased at η = {eta}");
        prev = q;
    }
}
