//! Monte Carlo and closed-form indifference prices `E[∫₀^∞ Ŷ_t e_t dt]`, and
//! the comparison of prices across information regimes.

use rayon::prelude::*;
use serde::Serialize;

use crate::agents::{
    q_bar_signal, AgentSolution, Regime, SignalInsiderSolution, UninformedSolution,
};
use crate::error::{Error, Result};
use crate::model::{stream_growth_guard, IncomeStream, ModelParams, Psi, StreamKind};
use crate::quadrature::{psi_double_integral, QuadratureRule};
use crate::simulate::{draw_scenario, walk_path, Conditioning, Dynamics, Node, SimConfig};

/// Monte Carlo price of one stream under one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub horizon: f64,
    pub truncation_bound: f64,
    pub regime: Regime,
    pub conditioning: Conditioning,
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    xs.for_each(|x| acc.add(x));
    acc.total()
}

/// Sample mean and `sd/√n` with compensated two-pass sums.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

/// `α = r − ρ + R(−r − q̄₁(μ−r) + A₁^{−1/R} + ½(R+1)σ²q̄₁²)`.
pub fn alpha_coef(sol: &UninformedSolution, p: &ModelParams) -> f64 {
    crate::agents::growth_coefficient(sol.q_bar1, sol.a1, p)
}

/// `β(η₀) = r − ρ + R(−r − q̄(η₀)(μ−r) + h(η₀)^{−1/R} + ½(R+1)σ²q̄(η₀)²)`.
pub fn beta_coef(
    eta0: f64,
    sol: &SignalInsiderSolution,
    p: &ModelParams,
    rule: &QuadratureRule,
) -> Result<f64> {
    let q = q_bar_signal(sol, p, eta0, rule)?;
    Ok(crate::agents::growth_coefficient(q, sol.h(eta0), p))
}

fn positive_rate(name: &str, rate: f64) -> Result<f64> {
    if rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::Discount(format!("{name} = {rate} must be positive")))
    }
}

/// `E[Ψ(η)(1 + a(e^ξ − 1))^{−R}]`, with `E[Ψ(η)]` when `v_eps = 0`.
fn double_integral(psi: &Psi, a: f64, p: &ModelParams, rule: &QuadratureRule) -> Result<f64> {
    psi_double_integral(psi, a, p, rule)
}

/// Expectation over `η₀ ~ N(m, v + v_eps)` of a fallible function.
fn signal_average(
    p: &ModelParams,
    rule: &QuadratureRule,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let nodes = rule.gaussian_nodes(p.m, p.v + p.v_eps);
    let mut acc = Neumaier::default();
    for (&eta, &w) in nodes.points.iter().zip(&nodes.weights) {
        acc.add(w * f(eta)?);
    }
    Ok(acc.total())
}

/// Closed-form price where one is known, `None` otherwise.
///
/// Every regime prices `Constant(c)` at `c/r`. `ExpUntilFirstJump` and
/// `PostFirstJumpSignal` have closed forms for all regimes, unconditionally,
/// given `T₁` (uninformed, timing, Merton) and given `η₀` (signal, Merton).
pub fn closed_form_price(
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cond: &Conditioning,
    rule: &QuadratureRule,
) -> Result<Option<f64>> {
    if cond.first_jump_time.is_some() && cond.first_signal.is_some() {
        return Ok(None);
    }
    let t1 = cond.first_jump_time;
    let eta0 = cond.first_signal;
    if let Some(t1) = t1 {
        if !(t1 >= 0.0) {
            return Err(Error::SimConfig(format!("T₁ = {t1} must be non-negative")));
        }
    }
    let lambda = p.lambda;
    match &e.kind {
        StreamKind::Constant(c) => Ok(match (sol, t1, eta0) {
            (_, None, None) => Some(c / p.r),
            _ => None,
        }),
        StreamKind::ExpUntilFirstJump => match sol {
            AgentSolution::Uninformed(s) => {
                let alpha = alpha_coef(s, p);
                match (t1, eta0) {
                    (None, None) => Ok(Some(1.0 / positive_rate("λ − α", lambda - alpha)?)),
                    (Some(t1), None) => Ok(Some(if alpha == 0.0 {
                        t1
                    } else {
                        (alpha * t1).exp_m1() / alpha
                    })),
                    _ => Ok(None),
                }
            }
            AgentSolution::Timing(_) | AgentSolution::Merton(_) => Ok(match (t1, eta0) {
                (Some(t1), None) => Some(t1),
                (None, _) if lambda > 0.0 => Some(1.0 / lambda),
                _ => None,
            }),
            AgentSolution::Signal(s) => {
                let price = |eta: f64| -> Result<f64> {
                    let beta = beta_coef(eta, s, p, rule)?;
                    Ok(1.0 / positive_rate("λ − β(η₀)", lambda - beta)?)
                };
                match (t1, eta0) {
                    (None, Some(eta)) => price(eta).map(Some),
                    (None, None) => signal_average(p, rule, price).map(Some),
                    _ => Ok(None),
                }
            }
        },
        StreamKind::PostFirstJumpSignal(psi) => {
            if matches!(psi, Psi::Zero) {
                return Ok(Some(0.0));
            }
            let tail = lambda / (lambda + 1.0);
            match sol {
                AgentSolution::Uninformed(s) => {
                    let alpha = alpha_coef(s, p);
                    let di = || double_integral(psi, s.q_bar1, p, rule);
                    match (t1, eta0) {
                        (None, None) => {
                            let rate = positive_rate("λ + 1 − α", lambda + 1.0 - alpha)?;
                            Ok(Some(lambda / rate * di()?))
                        }
                        (Some(t1), None) => Ok(Some(((alpha - 1.0) * t1).exp() * di()?)),
                        _ => Ok(None),
                    }
                }
                AgentSolution::Timing(s) => {
                    let renewal = s.a2 / s.f0 * double_integral(psi, s.a_star, p, rule)?;
                    Ok(match (t1, eta0) {
                        (Some(t1), None) => Some((-t1).exp() * renewal),
                        (None, None) => Some(tail * renewal),
                        _ => None,
                    })
                }
                AgentSolution::Merton(_) => {
                    Ok(match (t1, eta0) {
                        (Some(t1), None) => Some((-t1).exp() * double_integral(psi, 0.0, p, rule)?),
                        (None, Some(eta)) => Some(tail * psi.eval(eta)),
                        (None, None) => Some(tail * double_integral(psi, 0.0, p, rule)?),
                        _ => None,
                    })
                }
                AgentSolution::Signal(s) => {
                    let price = |eta: f64| -> Result<f64> {
                        let beta = beta_coef(eta, s, p, rule)?;
                        let rate = positive_rate("λ + 1 − β(η₀)", lambda + 1.0 - beta)?;
                        let q = q_bar_signal(s, p, eta, rule)?;
                        let moment = s.posterior_jump_moment(eta, q)?;
                        Ok(psi.eval(eta) * lambda / rate * s.a3 / s.h(eta) * moment)
                    };
                    match (t1, eta0) {
                        (None, Some(eta)) => price(eta).map(Some),
                        (None, None) => signal_average(p, rule, price).map(Some),
                        _ => Ok(None),
                    }
                }
            }
        }
        StreamKind::Custom(_) => Ok(None),
    }
}

/// Analytic bound on `E[∫_H^∞ |Ŷ_t e_t| dt]`, the part of the price beyond the
/// simulation horizon.
pub fn truncation_bound(
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cond: &Conditioning,
    horizon: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let h = horizon;
    let lambda = p.lambda;
    match &e.kind {
        StreamKind::Constant(c) => Ok((-p.r * h).exp() * c.abs() / p.r),
        StreamKind::ExpUntilFirstJump => {
            if let Some(t1) = cond.first_jump_time {
                let rate = match sol {
                    AgentSolution::Uninformed(s) => alpha_coef(s, p),
                    _ => 0.0,
                };
                return Ok(if t1 <= h {
                    0.0
                } else if rate == 0.0 {
                    t1 - h
                } else {
                    ((rate * t1).exp() - (rate * h).exp()) / rate
                });
            }
            let decay = |growth: f64| -> Result<f64> {
                let rate = positive_rate("tail decay rate", lambda - growth)?;
                Ok((-rate * h).exp() / rate)
            };
            match sol {
                AgentSolution::Uninformed(s) => decay(alpha_coef(s, p)),
                AgentSolution::Timing(_) | AgentSolution::Merton(_) => decay(0.0),
                AgentSolution::Signal(s) => match cond.first_signal {
                    Some(eta) => decay(beta_coef(eta, s, p, rule)?),
                    None => signal_average(p, rule, |eta| decay(beta_coef(eta, s, p, rule)?)),
                },
            }
        }
        StreamKind::PostFirstJumpSignal(psi) => {
            let bound = psi.bound();
            let start = cond.first_jump_time.map_or(h, |t1| t1.max(h));
            let factor = match (sol, cond.first_jump_time, cond.first_signal) {
                (AgentSolution::Timing(s), Some(_), _) => {
                    s.a2 / s.f0 * double_integral(&Psi::One, s.a_star, p, rule)?
                }
                (AgentSolution::Signal(s), _, Some(eta)) => {
                    let q = q_bar_signal(s, p, eta, rule)?;
                    (s.a3 / s.h(eta) * s.posterior_jump_moment(eta, q)?).max(1.0)
                }
                (AgentSolution::Uninformed(s), Some(t1), _) => {
                    (alpha_coef(s, p) * t1).exp()
                        * double_integral(&Psi::One, s.q_bar1, p, rule)?
                }
                _ => 1.0,
            };
            Ok(bound * (-start).exp() * factor)
        }
        StreamKind::Custom(c) => {
            let rate = positive_rate("r − r′", p.r - c.growth_rate)?;
            Ok(c.growth_constant * (-rate * h).exp() / rate)
        }
    }
}

/// Shortest horizon (to 1e-3 relative) whose truncation bound is below `tol`.
pub fn default_horizon(
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cond: &Conditioning,
    tol: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let bound = |h: f64| truncation_bound(e, sol, p, cond, h, rule);
    let mut hi = 1.0;
    while bound(hi)? >= tol {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Discount(format!(
                "truncation bound stays above {tol} for every horizon up to 1e6"
            )));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if bound(mid)? >= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `∫₀^H Ŷ_t e_t dt` along one path by the trapezoid rule, using left and
/// right limits at jump nodes.
fn path_integral(
    e: &IncomeStream,
    p: &ModelParams,
    dynamics: &Dynamics<'_>,
    cfg: &SimConfig,
    index: u64,
    cond: &Conditioning,
) -> Result<f64> {
    let scenario = draw_scenario(p, cfg, index, cond)?;
    let stops_at_jump = e.ends_at_first_jump();
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    walk_path(dynamics, &scenario, cfg, index, &[], |node: &Node<'_>| {
        let left = node.left.deflator * e.eval(p, &node.left_context());
        if let Some((t_prev, v_prev)) = prev {
            acc += 0.5 * (node.t - t_prev) * (v_prev + left);
        }
        let right = if node.is_jump {
            node.right.deflator * e.eval(p, &node.right_context())
        } else {
            left
        };
        prev = Some((node.t, right));
        !(stops_at_jump && node.is_jump)
    })?;
    Ok(acc)
}

/// Monte Carlo price over `cfg.n_paths` paths, reduced in path order so the
/// result does not depend on the number of worker threads.
pub fn price_mc(
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cfg: &SimConfig,
    cond: &Conditioning,
    rule: &QuadratureRule,
) -> Result<PriceEstimate> {
    price_mc_with_wealth(e, sol, p, cfg, cond, rule, 1.0)
}

/// [`price_mc`] with every path started from `wealth_scale` times the
/// normalising wealth.
pub fn price_mc_with_wealth(
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cfg: &SimConfig,
    cond: &Conditioning,
    rule: &QuadratureRule,
    wealth_scale: f64,
) -> Result<PriceEstimate> {
    cfg.validate()?;
    if !stream_growth_guard(e, p) {
        return Err(Error::GrowthGuard(e.describe()));
    }
    if !(wealth_scale > 0.0 && wealth_scale.is_finite()) {
        return Err(Error::NonPositiveWealth(wealth_scale));
    }
    let truncation = truncation_bound(e, sol, p, cond, cfg.horizon, rule)?;
    let regime = sol.regime();
    if e.is_zero() {
        return Ok(PriceEstimate {
            mean: 0.0,
            std_error: 0.0,
            n_paths: cfg.n_paths,
            horizon: cfg.horizon,
            truncation_bound: 0.0,
            regime,
            conditioning: *cond,
        });
    }
    let dynamics = Dynamics::new(sol, p).with_wealth_scale(wealth_scale);
    let samples: Vec<f64> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|index| path_integral(e, p, &dynamics, cfg, index, cond))
        .collect::<Result<_>>()?;
    let (mean, std_error) = mean_and_se(&samples);
    Ok(PriceEstimate {
        mean,
        std_error,
        n_paths: cfg.n_paths,
        horizon: cfg.horizon,
        truncation_bound: truncation,
        regime,
        conditioning: *cond,
    })
}

/// Closed form and Monte Carlo price of one regime; `price` prefers the
/// closed form.
#[derive(Debug, Clone, Serialize)]
pub struct RegimePrice {
    pub regime: Regime,
    pub closed_form: Option<f64>,
    pub mc: Option<PriceEstimate>,
    pub price: f64,
}

/// Signal-insider price at one `η₀` and its premium over the uninformed price.
#[derive(Debug, Clone, Serialize)]
pub struct SignalGridPoint {
    pub eta0: f64,
    pub closed_form: Option<f64>,
    pub mc: Option<PriceEstimate>,
    pub price: f64,
    pub signal_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfoValueReport {
    pub stream: String,
    pub regimes: Vec<RegimePrice>,
    /// Timing-insider price minus uninformed price.
    pub timing_value: Option<f64>,
    /// Signal-insider price averaged over `η₀` minus uninformed price.
    pub signal_value: Option<f64>,
    pub signal_grid: Vec<SignalGridPoint>,
}

impl InfoValueReport {
    pub fn price(&self, regime: Regime) -> Option<f64> {
        self.regimes.iter().find(|r| r.regime == regime).map(|r| r.price)
    }
}

/// How [`info_value_report`] obtains prices.
#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub sim: SimConfig,
    /// Run Monte Carlo also where a closed form exists.
    pub mc_with_closed_form: bool,
    /// `η₀` values at which to report the signal insider's conditional price.
    pub eta_grid: Vec<f64>,
}

fn price_entry(
    e: &IncomeStream,
    sol: &AgentSolution,
    p: &ModelParams,
    cond: &Conditioning,
    opts: &ReportOptions,
    rule: &QuadratureRule,
) -> Result<(Option<f64>, Option<PriceEstimate>, f64)> {
    let closed = closed_form_price(e, sol, p, cond, rule)?;
    let mc = if closed.is_none() || opts.mc_with_closed_form {
        Some(price_mc(e, sol, p, &opts.sim, cond, rule)?)
    } else {
        None
    };
    let price = closed.or(mc.map(|m| m.mean)).unwrap_or(f64::NAN);
    Ok((closed, mc, price))
}

/// Prices of `e` under each solved regime and the resulting values of
/// information.
pub fn info_value_report(
    e: &IncomeStream,
    p: &ModelParams,
    sols: &[AgentSolution],
    opts: &ReportOptions,
    rule: &QuadratureRule,
) -> Result<InfoValueReport> {
    let none = Conditioning::none();
    let mut regimes = Vec::with_capacity(sols.len());
    let mut signal_sol = None;
    for sol in sols {
        let (closed_form, mc, price) = price_entry(e, sol, p, &none, opts, rule)?;
        regimes.push(RegimePrice {
            regime: sol.regime(),
            closed_form,
            mc,
            price,
        });
        if matches!(sol, AgentSolution::Signal(_)) {
            signal_sol = Some(sol);
        }
    }
    let price_of = |r: Regime| regimes.iter().find(|x| x.regime == r).map(|x| x.price);
    let uninformed = price_of(Regime::Uninformed);
    let timing_value = price_of(Regime::Timing).zip(uninformed).map(|(a, b)| a - b);
    let signal_value = price_of(Regime::Signal).zip(uninformed).map(|(a, b)| a - b);
    let mut signal_grid = Vec::new();
    if let (Some(sol), Some(base)) = (signal_sol, uninformed) {
        for &eta0 in &opts.eta_grid {
            let cond = Conditioning::on_first_signal(eta0);
            let (closed_form, mc, price) = price_entry(e, sol, p, &cond, opts, rule)?;
            signal_grid.push(SignalGridPoint {
                eta0,
                closed_form,
                mc,
                price,
                signal_value: price - base,
            });
        }
    }
    Ok(InfoValueReport {
        stream: e.describe(),
        regimes,
        timing_value,
        signal_value,
        signal_grid,
    })
}
