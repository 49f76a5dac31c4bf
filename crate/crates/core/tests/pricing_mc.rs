//! Monte Carlo pricing against exact identities at reduced path counts.

use infoval::agents::{solve_regime, AgentSolution, Regime};
use infoval::model::Psi;
use infoval::pricing::{
    beta_coef, closed_form_price, mean_and_se, price_mc, price_mc_with_wealth, truncation_bound,
};
use infoval::quadrature::QuadratureRule;
use infoval::simulate::{simulate_path, Conditioning, SimConfig};
use infoval::{IncomeStream, ModelParams};

fn solve(r: Regime) -> AgentSolution {
    solve_regime(r, &ModelParams::CANON, &QuadratureRule::default()).unwrap()
}

fn cfg(horizon: f64, n_paths: usize) -> SimConfig {
    SimConfig {
        horizon,
        dt: 0.02,
        n_paths,
        seed: 11,
    }
}

#[test]
fn deterministic_stream_identity() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let horizon = 20.0;
    let target = 2.0 * (1.0 - (-p.r * horizon).exp()) / p.r;
    for r in Regime::ALL {
        let est = price_mc(
            &IncomeStream::constant(2.0),
            &solve(r),
            &p,
            &cfg(horizon, 4000),
            &Conditioning::none(),
            &rule,
        )
        .unwrap();
        assert!(
            (est.mean - target).abs() <= 3.0 * est.std_error,
            "{r}: {} ± {} vs {target}",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn price_does_not_depend_on_initial_wealth() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let e = IncomeStream::post_first_jump_signal(Psi::Tanh);
    for r in Regime::ALL {
        let sol = solve(r);
        let c = cfg(10.0, 200);
        let base = price_mc(&e, &sol, &p, &c, &Conditioning::none(), &rule).unwrap();
        let scaled =
            price_mc_with_wealth(&e, &sol, &p, &c, &Conditioning::none(), &rule, 10.0).unwrap();
        let rel = (scaled.mean - base.mean).abs() / base.mean.abs();
        assert!(rel < 1e-12, "{r}: relative change {rel}");
    }
}

#[test]
fn timing_price_given_first_jump_is_the_jump_time() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let sol = solve(Regime::Timing);
    for t1 in [0.3, 1.7] {
        let cond = Conditioning::on_first_jump(t1);
        let est = price_mc(
            &IncomeStream::exp_until_first_jump(),
            &sol,
            &p,
            &cfg(t1, 4000),
            &cond,
            &rule,
        )
        .unwrap();
        assert_eq!(est.truncation_bound, 0.0);
        assert!((est.mean - t1).abs() <= 3.0 * est.std_error, "{} vs {t1}", est.mean);
    }
}

#[test]
fn common_random_numbers_respect_beta_ordering() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let sol = solve(Regime::Signal);
    let sd = p.signal_sd();
    let (adverse, favourable) = (p.m - 2.0 * sd, p.m + 2.0 * sd);
    let e = IncomeStream::exp_until_first_jump();
    let price = |eta: f64| {
        price_mc(&e, &sol, &p, &cfg(25.0, 4000), &Conditioning::on_first_signal(eta), &rule)
            .unwrap()
            .mean
    };
    let s = match &sol {
        AgentSolution::Signal(s) => s,
        _ => unreachable!(),
    };
    let beta_gap = beta_coef(favourable, s, &p, &rule).unwrap() - beta_coef(adverse, s, &p, &rule).unwrap();
    let mc_gap = price(favourable) - price(adverse);
    assert!(beta_gap != 0.0);
    assert_eq!(mc_gap.signum(), beta_gap.signum(), "MC gap {mc_gap}, β gap {beta_gap}");
}

#[test]
fn uninformed_stream_until_jump_matches_closed_form() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let sol = solve(Regime::Uninformed);
    let e = IncomeStream::exp_until_first_jump();
    let none = Conditioning::none();
    let target = closed_form_price(&e, &sol, &p, &none, &rule).unwrap().unwrap();
    let est = price_mc(&e, &sol, &p, &cfg(20.0, 20_000), &none, &rule).unwrap();
    let tol = 3.0 * est.std_error + truncation_bound(&e, &sol, &p, &none, 20.0, &rule).unwrap();
    assert!((est.mean - target).abs() <= tol, "{} vs {target}", est.mean);
}

#[test]
fn estimates_are_reproducible_and_seed_dependent() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let sol = solve(Regime::Signal);
    let e = IncomeStream::constant(1.0);
    let run = |seed| {
        let c = SimConfig { seed, ..cfg(10.0, 300) };
        price_mc(&e, &sol, &p, &c, &Conditioning::none(), &rule).unwrap()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).mean, run(6).mean);
}

#[test]
fn growth_guard_and_config_errors() {
    let p = ModelParams::CANON;
    let rule = QuadratureRule::default();
    let sol = solve(Regime::Uninformed);
    let bad = SimConfig { n_paths: 0, ..cfg(10.0, 1) };
    let err = price_mc(&IncomeStream::constant(1.0), &sol, &p, &bad, &Conditioning::none(), &rule);
    assert!(matches!(err, Err(infoval::Error::SimConfig(_))));
    let big = IncomeStream::constant(f64::INFINITY);
    let err = price_mc(&big, &sol, &p, &cfg(10.0, 1), &Conditioning::none(), &rule);
    assert!(matches!(err, Err(infoval::Error::GrowthGuard(_))));
}

#[test]
fn simulated_paths_hit_pinned_first_jump() {
    let p = ModelParams::CANON;
    let sol = solve(Regime::Timing);
    let rec = simulate_path(&sol, &p, &cfg(5.0, 1), 3, &Conditioning::on_first_jump(1.25)).unwrap();
    let i = rec.grid.iter().position(|&t| t == 1.25).expect("T₁ on the grid");
    assert!(rec.is_jump[i]);
    let (m, se) = mean_and_se(&rec.deflator);
    assert!(m.is_finite() && se.is_finite());
}
