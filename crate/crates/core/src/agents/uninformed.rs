use serde::Serialize;

use super::{check_wealth, maximize_unit_concave, reject_boundary, JumpKernel};
use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::quadrature::{g_of_q, QuadratureRule};

/// Constants of the agent without jump information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UninformedSolution {
    pub q_bar1: f64,
    pub a1: f64,
    pub alpha: f64,
    pub g1_at_opt: f64,
}

impl UninformedSolution {
    /// Consumption-to-wealth ratio `A₁^{−1/R}`.
    pub fn consumption_rate(&self, p: &ModelParams) -> f64 {
        self.a1.powf(-1.0 / p.risk_aversion)
    }

    /// Wealth at which the deflator starts at 1, `A₁^{1/R}`.
    pub fn initial_wealth(&self, p: &ModelParams) -> f64 {
        self.a1.powf(1.0 / p.risk_aversion)
    }
}

/// `g₁(q) = r + q(μ−r) − ½σ²Rq² + λ(g(q) − 1)/(1−R)`.
pub fn g1(q: f64, p: &ModelParams, rule: &QuadratureRule) -> Result<f64> {
    let g = g_of_q(q, p, rule)?;
    Ok(p.r + q * (p.mu - p.r) - 0.5 * p.sigma * p.sigma * p.risk_aversion * q * q
        + p.lambda * (g - 1.0) / (1.0 - p.risk_aversion))
}

/// Maximiser of `g₁`, its value and `A₁`, without the interiority check.
pub(crate) fn uninformed_core(p: &ModelParams, rule: &QuadratureRule) -> Result<(f64, f64, f64)> {
    let big_r = p.risk_aversion;
    let kernel = JumpKernel::new(&rule.gaussian_nodes(p.m, p.v));
    let objective = |q: f64| {
        p.r + q * (p.mu - p.r) - 0.5 * p.sigma * p.sigma * big_r * q * q
            + p.lambda * (kernel.moment(q, 1.0 - big_r) - 1.0) / (1.0 - big_r)
    };
    let slope = |q: f64| {
        (p.mu - p.r) - p.sigma * p.sigma * big_r * q + p.lambda * kernel.tilted_moment(q, -big_r)
    };
    let q = maximize_unit_concave(objective, slope)?;
    let g1_opt = g1(q, p, rule)?;
    let denom = p.rho + (big_r - 1.0) * g1_opt;
    if !(denom > 0.0) {
        return Err(Error::UndefinedValue(format!(
            "ρ + (R−1)g₁(q̄₁) = {denom} ≤ 0"
        )));
    }
    Ok((q, g1_opt, (big_r / denom).powf(big_r)))
}

/// `α = r − ρ + R{−r − q̄₁(μ−r) + A₁^{−1/R} + ½(R+1)σ²q̄₁²}`.
pub(crate) fn growth_coefficient(q: f64, a: f64, p: &ModelParams) -> f64 {
    let big_r = p.risk_aversion;
    p.r - p.rho
        + big_r
            * (-p.r - q * (p.mu - p.r)
                + a.powf(-1.0 / big_r)
                + 0.5 * (big_r + 1.0) * p.sigma * p.sigma * q * q)
}

pub fn solve_uninformed(p: &ModelParams, rule: &QuadratureRule) -> Result<UninformedSolution> {
    validate_params(p).into_result()?;
    let (q_bar1, g1_at_opt, a1) = uninformed_core(p, rule)?;
    reject_boundary("q̄₁", q_bar1, true, true)?;
    Ok(UninformedSolution {
        q_bar1,
        a1,
        alpha: growth_coefficient(q_bar1, a1, p),
        g1_at_opt,
    })
}

/// `Ŷ_t = A₁ e^{−ρt} w^{−R}`.
pub fn uninformed_deflator(
    sol: &UninformedSolution,
    p: &ModelParams,
    t: f64,
    w: f64,
) -> Result<f64> {
    check_wealth(w)?;
    Ok(sol.a1 * (-p.rho * t).exp() * w.powf(-p.risk_aversion))
}
