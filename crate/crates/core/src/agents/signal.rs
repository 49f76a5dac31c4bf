use serde::Serialize;

use super::uninformed::uninformed_core;
use super::{check_wealth, maximize_unit_concave, JumpKernel};
use crate::defaults;
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::model::{validate_params, ModelParams};
use crate::optimize::{argmax_concave, find_root};
use crate::quadrature::QuadratureRule;

/// Numerical settings of [`solve_signal_insider`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalSolveOptions {
    pub grid_size: usize,
    pub grid_halfwidth_sd: f64,
    /// Stop once the sup-norm change of `h` between passes is below `tol · A₁`.
    pub tol: f64,
    pub max_outer: usize,
    /// Nodes of the finer `q̄(η)` table used by the simulator.
    pub table_size: usize,
}

impl Default for SignalSolveOptions {
    fn default() -> Self {
        Self {
            grid_size: defaults::SIGNAL_GRID_SIZE,
            grid_halfwidth_sd: defaults::SIGNAL_GRID_HALFWIDTH_SD,
            tol: defaults::SIGNAL_TOL,
            max_outer: defaults::SIGNAL_MAX_OUTER,
            table_size: defaults::SIGNAL_TABLE_SIZE,
        }
    }
}

/// Value factor `h(η)`, its average `A₃` and the policy `q̄(η)` of the agent
/// who sees a noisy signal of the next jump size.
#[derive(Debug, Clone, Serialize)]
pub struct SignalInsiderSolution {
    pub eta_grid: Vec<f64>,
    pub h_values: Vec<f64>,
    pub q_bar_values: Vec<f64>,
    pub a3: f64,
    pub a1: f64,
    /// `A₃` after each outer pass, starting from `A₁`.
    pub a3_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub damped: bool,
    pub posterior_var: f64,
    #[serde(skip)]
    h_interp: Pchip,
    #[serde(skip)]
    q_table: Pchip,
    #[serde(skip)]
    params: ModelParams,
    #[serde(skip)]
    rule: QuadratureRule,
}

/// Law of the jump `ξ` given the signal `η = ξ + ε`.
pub fn posterior_of_jump(eta: f64, p: &ModelParams) -> Result<(f64, f64)> {
    if !(p.v_eps > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    let total = p.v + p.v_eps;
    Ok(((p.v * eta + p.v_eps * p.m) / total, p.v * p.v_eps / total))
}

/// Pointwise pieces of the `(h, A₃)` system at one signal value.
struct PointProblem<'a> {
    p: &'a ModelParams,
    kernel: JumpKernel,
}

impl<'a> PointProblem<'a> {
    fn new(p: &'a ModelParams, eta: f64, rule: &QuadratureRule) -> Result<Self> {
        let (mean, var) = posterior_of_jump(eta, p)?;
        Ok(Self {
            p,
            kernel: JumpKernel::new(&rule.gaussian_nodes(mean, var)),
        })
    }

    fn phi1(&self, q: f64) -> f64 {
        let p = self.p;
        p.r + q * (p.mu - p.r) - 0.5 * p.sigma * p.sigma * q * q * p.risk_aversion
            - (p.rho + p.lambda) / (1.0 - p.risk_aversion)
    }

    fn phi2(&self, q: f64) -> f64 {
        let e = 1.0 - self.p.risk_aversion;
        self.kernel.moment(q, e) / e
    }

    /// Derivative of `φ₁(q) + c φ₂(q)`.
    fn slope(&self, q: f64, c: f64) -> f64 {
        let p = self.p;
        (p.mu - p.r) - p.sigma * p.sigma * p.risk_aversion * q
            + c * self.kernel.tilted_moment(q, -p.risk_aversion)
    }

    /// Maximiser and maximum of the concave map `q ↦ φ₁(q) + c φ₂(q)`.
    fn sup(&self, c: f64) -> Result<(f64, f64)> {
        let q = argmax_concave(|q| self.slope(q, c), 0.0, 1.0, 1e-15)?;
        Ok((q, self.phi1(q) + c * self.phi2(q)))
    }

    /// Solve the first equation of the system for `h` given `A₃`.
    ///
    /// In `t = h^{−1/R}` it reads `tR/(R−1) = sup_q(φ₁(q) + t^R λA₃ φ₂(q))`,
    /// whose left side increases and right side decreases in `t`.
    fn solve_h(&self, a3: f64, t_guess: f64) -> Result<(f64, f64)> {
        let big_r = self.p.risk_aversion;
        let la3 = self.p.lambda * a3;
        let gap = |t: f64| -> f64 {
            let (_, s) = self.sup(t.powf(big_r) * la3).unwrap_or((f64::NAN, f64::NAN));
            t * big_r / (big_r - 1.0) - s
        };
        let mut hi = 2.0 * t_guess;
        let mut tries = 0;
        while gap(hi) <= 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::RootNotBracketed { lo: 0.0, hi });
            }
        }
        let t = find_root(gap, 0.0, hi, 1e-16 * hi)?.argument;
        let h = t.powf(-big_r);
        let (q, _) = self.sup(la3 / h)?;
        Ok((h, q))
    }

    /// `|h^{1−1/R}/(1−1/R) − sup_q(h φ₁(q) + λA₃ φ₂(q))|` with a scanned supremum.
    fn residual(&self, h: f64, a3: f64) -> Result<f64> {
        let big_r = self.p.risk_aversion;
        let c = self.p.lambda * a3 / h;
        let q = maximize_unit_concave(|q| self.phi1(q) + c * self.phi2(q), |q| self.slope(q, c))?;
        let rhs = h * self.phi1(q) + self.p.lambda * a3 * self.phi2(q);
        let k = 1.0 - 1.0 / big_r;
        Ok((h.powf(k) / k - rhs).abs())
    }
}

fn check_gate(p: &ModelParams) -> Result<()> {
    let frac = p.merton_fraction();
    if !(p.risk_aversion > 1.0 && frac > 0.0 && frac < 1.0) {
        return Err(Error::SignalGate {
            risk_aversion: p.risk_aversion,
            merton_fraction: frac,
        });
    }
    if !(p.v_eps > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok(())
}

fn uniform_grid(center: f64, halfwidth: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| center - halfwidth + 2.0 * halfwidth * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn solve_signal_insider(
    p: &ModelParams,
    rule: &QuadratureRule,
    opts: &SignalSolveOptions,
) -> Result<SignalInsiderSolution> {
    validate_params(p).into_result()?;
    check_gate(p)?;
    if opts.grid_size < 3 || opts.table_size < 3 || !(opts.grid_halfwidth_sd > 0.0) {
        return Err(Error::InvalidParams(
            "signal grid needs ≥ 3 nodes and a positive half-width".into(),
        ));
    }
    let (_, _, a1) = uninformed_core(p, rule)?;
    let sd = p.signal_sd();
    let halfwidth = opts.grid_halfwidth_sd * sd;
    let eta_grid = uniform_grid(p.m, halfwidth, opts.grid_size);
    let problems = eta_grid
        .iter()
        .map(|&eta| PointProblem::new(p, eta, rule))
        .collect::<Result<Vec<_>>>()?;
    let prior = rule.gaussian_nodes(p.m, sd * sd);

    let mut a3 = a1;
    let mut a3_trace = vec![a1];
    let mut damping = 1.0;
    let mut t_guess = vec![a1.powf(-1.0 / p.risk_aversion); eta_grid.len()];
    let mut previous: Option<Vec<f64>> = None;
    let mut outcome = None;
    for pass in 0..opts.max_outer {
        let mut h_values = Vec::with_capacity(eta_grid.len());
        let mut q_values = Vec::with_capacity(eta_grid.len());
        for (prob, guess) in problems.iter().zip(t_guess.iter_mut()) {
            let (h, q) = prob.solve_h(a3, *guess)?;
            *guess = h.powf(-1.0 / p.risk_aversion);
            h_values.push(h);
            q_values.push(q);
        }
        let interp = Pchip::new(eta_grid.clone(), h_values.clone());
        let a3_next = prior.expect(|y| interp.eval(y));
        let change = previous.as_ref().map(|prev| {
            prev.iter()
                .zip(&h_values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        if a3_next > a3 * (1.0 + 1e-12) {
            if damping < 1.0 {
                return Err(Error::NonMonotone { step: pass });
            }
            damping = 0.5;
        }
        if matches!(change, Some(c) if c < opts.tol * a1) {
            outcome = Some((pass + 1, a3, h_values, q_values, interp));
            break;
        }
        previous = Some(h_values);
        a3 = (1.0 - damping) * a3 + damping * a3_next;
        a3_trace.push(a3);
    }
    let Some((outer_iterations, a3, h_values, q_bar_values, h_interp)) = outcome else {
        let residual = a3_trace
            .windows(2)
            .last()
            .map(|w| (w[1] - w[0]).abs())
            .unwrap_or(f64::NAN);
        return Err(Error::NotConverged {
            iterations: opts.max_outer,
            residual,
        });
    };
    if a3 > a1 * (1.0 + 1e-8) {
        return Err(Error::MaximalSelection { a3, a1 });
    }

    let table_eta = uniform_grid(p.m, halfwidth, opts.table_size);
    let table_q = table_eta
        .iter()
        .map(|&eta| {
            let prob = PointProblem::new(p, eta, rule)?;
            Ok(prob.sup(p.lambda * a3 / h_interp.eval(eta))?.0)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SignalInsiderSolution {
        eta_grid,
        h_values,
        q_bar_values,
        a3,
        a1,
        a3_trace,
        outer_iterations,
        damped: damping < 1.0,
        posterior_var: p.v * p.v_eps / (p.v + p.v_eps),
        h_interp,
        q_table: Pchip::new(table_eta, table_q),
        params: *p,
        rule: rule.clone(),
    })
}

impl SignalInsiderSolution {
    /// Monotone-cubic interpolant of `h` on the grid, flat beyond it.
    pub fn h(&self, eta: f64) -> f64 {
        self.h_interp.eval(eta)
    }

    /// Tabulated `q̄(η)` on the finer simulation grid.
    pub fn q_bar_table(&self, eta: f64) -> f64 {
        self.q_table.eval(eta).clamp(0.0, 1.0)
    }

    /// `A₃` recomputed from the stored grid values.
    pub fn recomputed_a3(&self) -> f64 {
        let p = &self.params;
        self.rule
            .gaussian_nodes(p.m, p.v + p.v_eps)
            .expect(|y| self.h_interp.eval(y))
    }

    /// Residual of the first equation of the system at every grid node.
    pub fn pointwise_residuals(&self) -> Result<Vec<f64>> {
        self.eta_grid
            .iter()
            .zip(&self.h_values)
            .map(|(&eta, &h)| PointProblem::new(&self.params, eta, &self.rule)?.residual(h, self.a3))
            .collect()
    }

    /// `E[(1 + q(e^ξ − 1))^{−R} | η]`.
    pub fn posterior_jump_moment(&self, eta: f64, q: f64) -> Result<f64> {
        let prob = PointProblem::new(&self.params, eta, &self.rule)?;
        Ok(prob.kernel.moment(q, -self.params.risk_aversion))
    }

    /// Objective maximised by `q̄(η)`: `h(η)φ₁(q) + λA₃φ₂(q; posterior(η))`.
    pub fn policy_objective(&self, eta: f64, q: f64) -> Result<f64> {
        let prob = PointProblem::new(&self.params, eta, &self.rule)?;
        Ok(self.h(eta) * prob.phi1(q) + self.params.lambda * self.a3 * prob.phi2(q))
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

/// `q̄(η)`: maximiser of `h(η)φ₁(q) + λA₃φ₂(q; posterior(η))` over `[0, 1]`.
pub fn q_bar_signal(
    sol: &SignalInsiderSolution,
    p: &ModelParams,
    eta: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let prob = PointProblem::new(p, eta, rule)?;
    let c = p.lambda * sol.a3 / sol.h(eta);
    maximize_unit_concave(|q| prob.phi1(q) + c * prob.phi2(q), |q| prob.slope(q, c))
}

/// `Ŷᵇ_t = e^{−ρt} h(η_t) w^{−R}`.
pub fn signal_deflator(
    sol: &SignalInsiderSolution,
    p: &ModelParams,
    t: f64,
    w: f64,
    eta_t: f64,
) -> Result<f64> {
    check_wealth(w)?;
    Ok((-p.rho * t).exp() * sol.h(eta_t) * w.powf(-p.risk_aversion))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon() -> SignalInsiderSolution {
        solve_signal_insider(
            &ModelParams::CANON,
            &QuadratureRule::default(),
            &SignalSolveOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn posterior_limits() {
        let p = ModelParams::CANON;
        let (mean, var) = posterior_of_jump(p.m, &p).unwrap();
        assert_eq!(mean, p.m);
        assert!((var - p.v * p.v_eps / (p.v + p.v_eps)).abs() < 1e-18);
        let loose = ModelParams { v_eps: 1e8, ..p };
        let (mean, var) = posterior_of_jump(0.3, &loose).unwrap();
        assert!((mean - p.m).abs() < 1e-6 && (var - p.v).abs() < 1e-6);
        let sharp = ModelParams { v_eps: 1e-12, ..p };
        let (mean, var) = posterior_of_jump(0.3, &sharp).unwrap();
        assert!((mean - 0.3).abs() < 1e-6 && var < 1e-6);
        let exact = ModelParams { v_eps: 0.0, ..p };
        assert!(matches!(posterior_of_jump(0.3, &exact), Err(Error::DegenerateSignal)));
    }

    #[test]
    fn gate_rejects_low_risk_aversion() {
        let p = ModelParams {
            risk_aversion: 0.8,
            ..ModelParams::CANON
        };
        assert!(matches!(
            solve_signal_insider(&p, &QuadratureRule::default(), &SignalSolveOptions::default()),
            Err(Error::SignalGate { .. })
        ));
    }

    #[test]
    fn canon_system_residuals() {
        let s = canon();
        let worst = s.pointwise_residuals().unwrap().into_iter().fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst residual {worst}");
        assert!((s.recomputed_a3() - s.a3).abs() < 1e-8 * s.a3);
        assert!(s.a3 <= s.a1 * (1.0 + 1e-8));
        assert!(s.a3_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn policy_is_exact_maximiser_and_table_agrees() {
        let p = ModelParams::CANON;
        let rule = QuadratureRule::default();
        let s = canon();
        for &eta in &[p.m - 0.3, p.m, p.m + 0.15, p.m + 0.4] {
            let q = q_bar_signal(&s, &p, eta, &rule).unwrap();
            assert!((q - s.q_bar_table(eta)).abs() < 1e-5, "η = {eta}");
            let best = s.policy_objective(eta, q).unwrap();
            for k in 0..=100 {
                let other = s.policy_objective(eta, k as f64 / 100.0).unwrap();
                assert!(other <= best + 1e-12);
            }
        }
    }

    #[test]
    fn deflator_normalisation() {
        let p = ModelParams::CANON;
        let s = canon();
        let eta = 0.07;
        let w0 = s.h(eta).powf(1.0 / p.risk_aversion);
        assert!((signal_deflator(&s, &p, 0.0, w0, eta).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(signal_deflator(&s, &p, 0.0, 1.0, eta).unwrap(), s.h(eta));
        let y = signal_deflator(&s, &p, 1.0, 1.0, p.m).unwrap();
        assert!((y - (-0.1f64).exp() * s.h(p.m)).abs() < 1e-12 * y);
    }
}
