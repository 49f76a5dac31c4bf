use serde::Serialize;

use super::check_wealth;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Constants of the jump-free benchmark market with the same `μ`, `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MertonSolution {
    pub a_m: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub merton_fraction: f64,
}

impl MertonSolution {
    /// Wealth at which the deflator starts at 1, `1/γ_M`.
    pub fn initial_wealth(&self) -> f64 {
        1.0 / self.gamma_m
    }
}

/// `ρ + (R−1)(r + (μ−r)²/(2σ²R))`, shared with the timing insider.
pub(crate) fn merton_denominator(p: &ModelParams) -> f64 {
    let excess = p.mu - p.r;
    p.rho
        + (p.risk_aversion - 1.0)
            * (p.r + excess * excess / (2.0 * p.sigma * p.sigma * p.risk_aversion))
}

pub fn solve_merton(p: &ModelParams) -> Result<MertonSolution> {
    let denom = merton_denominator(p);
    if !(denom > 0.0) || !(p.sigma > 0.0) {
        return Err(Error::UndefinedValue(format!(
            "ρ + (R−1)(r + (μ−r)²/(2σ²R)) = {denom} must be positive"
        )));
    }
    let big_r = p.risk_aversion;
    let a_m = (big_r / denom).powf(big_r);
    Ok(MertonSolution {
        a_m,
        kappa: (p.mu - p.r) / p.sigma,
        gamma_m: a_m.powf(-1.0 / big_r),
        merton_fraction: p.merton_fraction(),
    })
}

/// `Ŷ^M_t = A_M e^{−ρt} w^{−R}`, which equals 1 at `w = 1/γ_M`.
pub fn merton_deflator(sol: &MertonSolution, p: &ModelParams, t: f64, w: f64) -> Result<f64> {
    check_wealth(w)?;
    Ok(sol.a_m * (-p.rho * t).exp() * w.powf(-p.risk_aversion))
}
