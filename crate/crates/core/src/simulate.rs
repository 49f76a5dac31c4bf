//! Scenario generation and exact between-jump wealth evolution for each
//! regime, with the regime's deflator evaluated along a composite time grid.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, path_index)`: the
//! jump scenario uses stream `2·path_index` and the Brownian increments use
//! stream `2·path_index + 1`. Paths are therefore reproducible, independent of
//! scheduling, and share common random numbers across regimes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::agents::{posterior_of_jump, AgentSolution};
use crate::error::{Error, Result};
use crate::model::{ModelParams, PathContext};

/// Two grid times closer than this are the same node.
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::SimConfig(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(Error::SimConfig(format!(
                "dt must lie in (0, horizon], got {}",
                self.dt
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::SimConfig("n_paths must be at least 1".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        let n = (self.horizon / self.dt).ceil();
        let n = n as usize;
        if (self.horizon - (n - 1) as f64 * self.dt).abs() <= MERGE_TOL {
            n - 1
        } else {
            n
        }
    }

    /// Uniform grid node `k`; the last node is the horizon itself.
    #[inline]
    fn node(&self, k: usize, steps: usize) -> f64 {
        if k >= steps {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }
}

/// Values pinned on the first jump to compute conditional prices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// Time of the first jump `T₁`.
    pub first_jump_time: Option<f64>,
    /// Signal `η₀` about the first jump; the first jump size is then drawn
    /// from its posterior.
    pub first_signal: Option<f64>,
}

impl Conditioning {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn on_first_jump(t1: f64) -> Self {
        Self {
            first_jump_time: Some(t1),
            first_signal: None,
        }
    }

    pub fn on_first_signal(eta0: f64) -> Self {
        Self {
            first_jump_time: None,
            first_signal: Some(eta0),
        }
    }

    pub fn is_none(&self) -> bool {
        self.first_jump_time.is_none() && self.first_signal.is_none()
    }
}

/// Jump times, sizes and signals of one path.
///
/// `jump_times` lists every jump up to the horizon followed by the first jump
/// after it (`+∞` when `λ = 0`). `jump_sizes[i]` and `signals[i]` belong to
/// `jump_times[i]`, so `signals[0]` is `η₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    pub signals: Vec<f64>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn draw_scenario(
    p: &ModelParams,
    cfg: &SimConfig,
    path_index: u64,
    cond: &Conditioning,
) -> Result<Scenario> {
    let mut rng = stream_rng(cfg.seed, 2 * path_index);
    let sd_jump = p.v.sqrt();
    let sd_eps = p.v_eps.max(0.0).sqrt();
    let mut s = Scenario {
        jump_times: Vec::new(),
        jump_sizes: Vec::new(),
        signals: Vec::new(),
    };
    let mut t = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        let z_xi: f64 = rng.sample(StandardNormal);
        let z_eps: f64 = rng.sample(StandardNormal);
        let first = s.jump_times.is_empty();
        t = match (first, cond.first_jump_time) {
            (true, Some(t1)) => t1,
            _ if p.lambda > 0.0 => t + e / p.lambda,
            _ => f64::INFINITY,
        };
        let (xi, eta) = match (first, cond.first_signal) {
            (true, Some(eta0)) => {
                let (mean, var) = posterior_of_jump(eta0, p)?;
                (mean + var.sqrt() * z_xi, eta0)
            }
            _ => {
                let xi = p.m + sd_jump * z_xi;
                (xi, xi + sd_eps * z_eps)
            }
        };
        s.jump_times.push(t);
        s.jump_sizes.push(xi);
        s.signals.push(eta);
        if t > cfg.horizon {
            break;
        }
    }
    Ok(s)
}

/// `w · exp((r + π(μ−r) − ½π²σ²)Δt − ∫γ + πσΔW)`.
pub fn wealth_step_exact(
    w: f64,
    pi: f64,
    consumption_rate_integral: f64,
    dt_step: f64,
    dw: f64,
    p: &ModelParams,
) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::NonPositiveWealth(w));
    }
    Ok(w * log_growth(pi, consumption_rate_integral, dt_step, dw, p).exp())
}

fn log_growth(pi: f64, consumption: f64, dt: f64, dw: f64, p: &ModelParams) -> f64 {
    (p.r + pi * (p.mu - p.r) - 0.5 * pi * pi * p.sigma * p.sigma) * dt - consumption
        + pi * p.sigma * dw
}

/// `w (1 + π(e^ξ − 1))`.
pub fn apply_jump(w: f64, pi_at_jump: f64, xi: f64) -> f64 {
    w * (1.0 + pi_at_jump * xi.exp_m1())
}

/// Policy and deflator of one regime, in the form the path walker needs.
pub(crate) struct Dynamics<'a> {
    sol: &'a AgentSolution,
    p: ModelParams,
    merton_fraction: f64,
    log_const: f64,
    consumption_rate: f64,
    log_wealth_scale: f64,
    timing: Option<TimingCurve>,
}

/// `F(s) = 1/γ_M + e^{−γ_M s}(F(0) − 1/γ_M)` of the timing insider.
#[derive(Clone, Copy)]
struct TimingCurve {
    gamma: f64,
    inv_gamma: f64,
    log_inv_gamma: f64,
    lead: f64,
}

impl TimingCurve {
    #[inline]
    fn log_f_root(&self, s: f64) -> f64 {
        if self.lead == 0.0 {
            self.log_inv_gamma
        } else {
            (self.inv_gamma + (-self.gamma * s).exp() * self.lead).ln()
        }
    }
}

impl<'a> Dynamics<'a> {
    pub(crate) fn new(sol: &'a AgentSolution, p: &ModelParams) -> Self {
        let (log_const, consumption_rate) = match sol {
            AgentSolution::Uninformed(s) => (s.a1.ln(), s.consumption_rate(p)),
            AgentSolution::Merton(s) => (s.a_m.ln(), s.gamma_m),
            AgentSolution::Timing(s) => (0.0, s.gamma_m),
            AgentSolution::Signal(_) => (0.0, 0.0),
        };
        let timing = match sol {
            AgentSolution::Timing(s) => Some(TimingCurve {
                gamma: s.gamma_m,
                inv_gamma: 1.0 / s.gamma_m,
                log_inv_gamma: -s.gamma_m.ln(),
                lead: s.f_root(0.0) - 1.0 / s.gamma_m,
            }),
            _ => None,
        };
        Self {
            sol,
            p: *p,
            merton_fraction: p.merton_fraction(),
            log_const,
            consumption_rate,
            log_wealth_scale: 0.0,
            timing,
        }
    }

    /// Start every path from `scale` times the normalising wealth, with the
    /// deflator rescaled so that it still starts at 1.
    pub(crate) fn with_wealth_scale(mut self, scale: f64) -> Self {
        self.log_wealth_scale = scale.ln();
        self
    }

    fn feels_jumps(&self) -> bool {
        !matches!(self.sol, AgentSolution::Merton(_))
    }

    fn segment(&self, eta: f64) -> Segment {
        let (pi, pi_jump, log_factor, consumption_rate) = match self.sol {
            AgentSolution::Uninformed(s) => {
                (s.q_bar1, s.q_bar1, self.log_const, self.consumption_rate)
            }
            AgentSolution::Merton(_) => {
                (self.merton_fraction, 0.0, self.log_const, self.consumption_rate)
            }
            AgentSolution::Timing(s) => {
                (self.merton_fraction, s.a_star, f64::NAN, self.consumption_rate)
            }
            AgentSolution::Signal(s) => {
                let h = s.h(eta);
                let q = s.q_bar_table(eta);
                (q, q, h.ln(), h.powf(-1.0 / self.p.risk_aversion))
            }
        };
        let p = &self.p;
        Segment {
            pi_jump,
            drift: p.r + pi * (p.mu - p.r) - 0.5 * pi * pi * p.sigma * p.sigma - consumption_rate,
            vol: pi * p.sigma,
            log_factor,
        }
    }

    /// `ln F(s)` for the timing insider, 0 otherwise.
    #[inline]
    fn log_f_root(&self, s: f64) -> f64 {
        self.timing.map_or(0.0, |c| c.log_f_root(s))
    }

    #[inline]
    fn log_deflator(&self, seg: &Segment, t: f64, log_w: f64, log_f_root: f64) -> f64 {
        let big_r = self.p.risk_aversion;
        let log_factor = if self.timing.is_some() {
            big_r * log_f_root
        } else {
            seg.log_factor
        };
        log_factor - self.p.rho * t - big_r * (log_w - self.log_wealth_scale)
    }

    /// Log of the wealth at which the deflator starts at 1.
    fn initial_log_wealth(&self, scenario: &Scenario) -> f64 {
        let big_r = self.p.risk_aversion;
        let log_w = match self.sol {
            AgentSolution::Uninformed(s) => s.a1.ln() / big_r,
            AgentSolution::Merton(s) => s.a_m.ln() / big_r,
            AgentSolution::Timing(_) => self.log_f_root(scenario.jump_times[0]),
            AgentSolution::Signal(s) => s.h(scenario.signals[0]).ln() / big_r,
        };
        self.log_wealth_scale + log_w
    }
}

struct Segment {
    pi_jump: f64,
    /// `r + π(μ−r) − ½π²σ² − c`, with the time-varying part of the timing
    /// insider's consumption handled through `ln F`.
    drift: f64,
    vol: f64,
    log_factor: f64,
}

/// Wealth and deflator at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub log_wealth: f64,
    pub deflator: f64,
}

/// One node of the composite grid as seen by a path visitor.
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    pub t: f64,
    pub is_jump: bool,
    /// Number of jumps strictly before `t`.
    pub jumps_before: usize,
    pub left: NodeState,
    pub right: NodeState,
    pub scenario: &'a Scenario,
}

impl<'a> Node<'a> {
    /// Path context for the left limit at `t`.
    pub fn left_context(&self) -> PathContext<'a> {
        self.context(self.jumps_before)
    }

    /// Path context for the right limit at `t`.
    pub fn right_context(&self) -> PathContext<'a> {
        self.context(self.jumps_before + usize::from(self.is_jump))
    }

    fn context(&self, k: usize) -> PathContext<'a> {
        let s = self.scenario;
        PathContext {
            t: self.t,
            jump_times: &s.jump_times[..k],
            jump_sizes: &s.jump_sizes[..k],
            signal: s.signals[k],
            first_signal: s.signals[0],
        }
    }
}

/// Walk one path over `uniform grid ∪ jump times ∪ extra_times`, calling
/// `visit` at every node in increasing time order until it returns `false`.
/// `extra_times` must be sorted.
pub(crate) fn walk_path(
    dynamics: &Dynamics<'_>,
    scenario: &Scenario,
    cfg: &SimConfig,
    path_index: u64,
    extra_times: &[f64],
    mut visit: impl FnMut(&Node<'_>) -> bool,
) -> Result<()> {
    let mut rng = stream_rng(cfg.seed, 2 * path_index + 1);
    let steps = cfg.steps();
    let feels_jumps = dynamics.feels_jumps();
    if !(scenario.jump_times[0] > MERGE_TOL) {
        return Err(Error::SimConfig(format!(
            "first jump time must be positive, got {}",
            scenario.jump_times[0]
        )));
    }

    let mut jumps_before = 0usize;
    let mut seg = dynamics.segment(scenario.signals[0]);
    let mut log_w = dynamics.initial_log_wealth(scenario);
    let mut log_f = dynamics.log_f_root(scenario.jump_times[0]);
    let start = NodeState {
        log_wealth: log_w,
        deflator: dynamics.log_deflator(&seg, 0.0, log_w, log_f).exp(),
    };
    if !visit(&Node {
        t: 0.0,
        is_jump: false,
        jumps_before: 0,
        left: start,
        right: start,
        scenario,
    }) {
        return Ok(());
    }

    let sqrt_dt = cfg.dt.sqrt();
    let mut k = 1usize;
    let mut extra = extra_times.partition_point(|&x| x <= MERGE_TOL);
    let mut t_prev = 0.0;
    loop {
        let t_uniform = if k <= steps { cfg.node(k, steps) } else { f64::INFINITY };
        let t_extra = extra_times.get(extra).copied().unwrap_or(f64::INFINITY);
        let t_jump = scenario.jump_times[jumps_before];
        let t_min = t_uniform.min(t_extra).min(t_jump);
        if t_min > cfg.horizon + MERGE_TOL {
            break;
        }
        let is_jump = t_jump - t_min <= MERGE_TOL;
        let t = if is_jump { t_jump } else { t_min };
        if t_uniform - t <= MERGE_TOL {
            k += 1;
        }
        while extra < extra_times.len() && extra_times[extra] - t <= MERGE_TOL {
            extra += 1;
        }

        let dt = t - t_prev;
        if dt > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            let root = if dt == cfg.dt { sqrt_dt } else { dt.sqrt() };
            let log_f_next = dynamics.log_f_root(t_jump - t);
            log_w += seg.drift * dt + seg.vol * root * z + (log_f_next - log_f);
            log_f = log_f_next;
        }
        let left = NodeState {
            log_wealth: log_w,
            deflator: dynamics.log_deflator(&seg, t, log_w, log_f).exp(),
        };
        let right = if is_jump {
            if feels_jumps {
                let factor = 1.0 + seg.pi_jump * scenario.jump_sizes[jumps_before].exp_m1();
                if !(factor > 0.0) {
                    return Err(Error::NonPositiveWealth(factor * log_w.exp()));
                }
                log_w += factor.ln();
            }
            seg = dynamics.segment(scenario.signals[jumps_before + 1]);
            log_f = dynamics.log_f_root(scenario.jump_times[jumps_before + 1] - t);
            NodeState {
                log_wealth: log_w,
                deflator: dynamics.log_deflator(&seg, t, log_w, log_f).exp(),
            }
        } else {
            left
        };
        if !right.log_wealth.is_finite() || !right.deflator.is_finite() {
            return Err(Error::NonFiniteWealth(t));
        }
        if !visit(&Node {
            t,
            is_jump,
            jumps_before,
            left,
            right,
            scenario,
        }) {
            break;
        }
        if is_jump {
            jumps_before += 1;
        }
        t_prev = t;
    }
    Ok(())
}

/// One simulated path: node times with right-continuous wealth and deflator.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub grid: Vec<f64>,
    pub wealth: Vec<f64>,
    pub deflator: Vec<f64>,
    pub is_jump: Vec<bool>,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    pub signals: Vec<f64>,
}

pub fn simulate_path(
    sol: &AgentSolution,
    p: &ModelParams,
    cfg: &SimConfig,
    path_index: u64,
    cond: &Conditioning,
) -> Result<PathRecord> {
    cfg.validate()?;
    let scenario = draw_scenario(p, cfg, path_index, cond)?;
    let dynamics = Dynamics::new(sol, p);
    let mut rec = PathRecord {
        grid: Vec::new(),
        wealth: Vec::new(),
        deflator: Vec::new(),
        is_jump: Vec::new(),
        jump_times: Vec::new(),
        jump_sizes: Vec::new(),
        signals: Vec::new(),
    };
    walk_path(&dynamics, &scenario, cfg, path_index, &[], |node| {
        rec.grid.push(node.t);
        rec.wealth.push(node.right.log_wealth.exp());
        rec.deflator.push(node.right.deflator);
        rec.is_jump.push(node.is_jump);
        true
    })?;
    rec.jump_times = scenario.jump_times;
    rec.jump_sizes = scenario.jump_sizes;
    rec.signals = scenario.signals;
    Ok(rec)
}

/// Write paths as CSV rows `path,t,wealth,deflator,is_jump`.
pub fn write_paths_csv(out: &mut impl Write, paths: &[(u64, PathRecord)]) -> std::io::Result<()> {
    writeln!(out, "path,t,wealth,deflator,is_jump")?;
    for (index, rec) in paths {
        for i in 0..rec.grid.len() {
            writeln!(
                out,
                "{index},{},{},{},{}",
                rec.grid[i],
                rec.wealth[i],
                rec.deflator[i],
                u8::from(rec.is_jump[i])
            )?;
        }
    }
    Ok(())
}

/// Sample mean and standard error of `e^{rt} Ŷ_t` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingalePoint {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `E[e^{rt} Ŷ_t]` at each of `times`, which should
/// stay at 1 for a martingale deflator.
pub fn martingale_check(
    sol: &AgentSolution,
    p: &ModelParams,
    cfg: &SimConfig,
    times: &[f64],
) -> Result<Vec<MartingalePoint>> {
    use rayon::prelude::*;

    cfg.validate()?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.iter().any(|&t| !(0.0..=cfg.horizon).contains(&t)) {
        return Err(Error::SimConfig("check times must lie in [0, horizon]".into()));
    }
    let dynamics = Dynamics::new(sol, p);
    let cond = Conditioning::none();
    let samples: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|index| -> Result<Vec<f64>> {
            let scenario = draw_scenario(p, cfg, index, &cond)?;
            let mut values = vec![f64::NAN; sorted.len()];
            let mut next = 0;
            walk_path(&dynamics, &scenario, cfg, index, &sorted, |node| {
                while next < sorted.len() && (sorted[next] - node.t).abs() <= MERGE_TOL {
                    values[next] = (p.r * node.t).exp() * node.right.deflator;
                    next += 1;
                }
                next < sorted.len()
            })?;
            Ok(values)
        })
        .collect::<Result<_>>()?;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let column: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let (mean, std_error) = crate::pricing::mean_and_se(&column);
            MartingalePoint { t, mean, std_error }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{solve_regime, Regime};
    use crate::quadrature::QuadratureRule;

    fn cfg() -> SimConfig {
        SimConfig {
            horizon: 20.0,
            dt: 0.05,
            n_paths: 10,
            seed: 7,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        for bad in [
            SimConfig { horizon: 0.0, ..cfg() },
            SimConfig { dt: -1.0, ..cfg() },
            SimConfig { dt: 50.0, ..cfg() },
            SimConfig { n_paths: 0, ..cfg() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::SimConfig(_))));
        }
    }

    #[test]
    fn scenario_is_reproducible_and_ends_past_horizon() {
        let p = ModelParams::CANON;
        let a = draw_scenario(&p, &cfg(), 3, &Conditioning::none()).unwrap();
        let b = draw_scenario(&p, &cfg(), 3, &Conditioning::none()).unwrap();
        assert_eq!(a, b);
        assert!(*a.jump_times.last().unwrap() > 20.0);
        assert!(a.jump_times[..a.jump_times.len() - 1].iter().all(|&t| t <= 20.0));
        assert!(a.jump_times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a.jump_sizes.len(), a.jump_times.len());
        assert_eq!(a.signals.len(), a.jump_times.len());
        let c = draw_scenario(&p, &cfg(), 4, &Conditioning::none()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn no_jumps_gives_infinite_sentinel() {
        let p = ModelParams {
            lambda: 0.0,
            ..ModelParams::CANON
        };
        let s = draw_scenario(&p, &cfg(), 0, &Conditioning::none()).unwrap();
        assert_eq!(s.jump_times, vec![f64::INFINITY]);
    }

    #[test]
    fn pinning_first_jump() {
        let p = ModelParams::CANON;
        let s = draw_scenario(&p, &cfg(), 1, &Conditioning::on_first_jump(2.0)).unwrap();
        assert_eq!(s.jump_times[0], 2.0);
        let s = draw_scenario(&p, &cfg(), 1, &Conditioning::on_first_signal(0.3)).unwrap();
        assert_eq!(s.signals[0], 0.3);
    }

    #[test]
    fn exact_step_matches_formula() {
        let p = ModelParams::CANON;
        let w = wealth_step_exact(2.0, 0.5, 0.01, 0.1, 0.2, &p).unwrap();
        let expected = 2.0 * ((0.05f64 + 0.5 * 0.05 - 0.5 * 0.25 * 0.04) * 0.1 - 0.01 + 0.5 * 0.2 * 0.2).exp();
        assert!((w - expected).abs() < 1e-14);
        assert!(wealth_step_exact(-1.0, 0.5, 0.0, 0.1, 0.0, &p).is_err());
        assert!((apply_jump(1.0, 0.5, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn path_starts_with_unit_deflator_and_contains_jumps() {
        let p = ModelParams::CANON;
        let rule = QuadratureRule::default();
        for regime in [Regime::Uninformed, Regime::Timing, Regime::Merton] {
            let sol = solve_regime(regime, &p, &rule).unwrap();
            let rec = simulate_path(&sol, &p, &cfg(), 5, &Conditioning::none()).unwrap();
            assert!((rec.deflator[0] - 1.0).abs() < 1e-12, "{regime}");
            assert_eq!(*rec.grid.last().unwrap(), 20.0);
            let n_jumps = rec.jump_times.len() - 1;
            assert_eq!(rec.is_jump.iter().filter(|&&j| j).count(), n_jumps);
            for &tj in &rec.jump_times[..n_jumps] {
                assert!(rec.grid.contains(&tj));
            }
            assert!(rec.wealth.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn merton_path_is_jump_free() {
        let p = ModelParams::CANON;
        let sol = solve_regime(Regime::Merton, &p, &QuadratureRule::default()).unwrap();
        let rec = simulate_path(&sol, &p, &cfg(), 2, &Conditioning::none()).unwrap();
        let m = match &sol {
            AgentSolution::Merton(m) => *m,
            _ => unreachable!(),
        };
        for (i, &t) in rec.grid.iter().enumerate() {
            let y = m.a_m * (-p.rho * t).exp() * rec.wealth[i].powf(-p.risk_aversion);
            assert!((y - rec.deflator[i]).abs() < 1e-10 * y);
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = ModelParams::CANON;
        let sol = solve_regime(Regime::Uninformed, &p, &QuadratureRule::default()).unwrap();
        let rec = simulate_path(&sol, &p, &cfg(), 0, &Conditioning::none()).unwrap();
        let rows = rec.grid.len();
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &[(0, rec)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path,t,wealth,deflator,is_jump\n"));
        assert_eq!(text.lines().count(), rows + 1);
    }
}
