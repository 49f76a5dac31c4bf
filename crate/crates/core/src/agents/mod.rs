//! Per-regime solvers and their dual-optimal state-price densities.
//!
//! Every deflator is normalised so that it equals 1 at time 0 when the agent
//! starts from the regime's own normalising wealth.

mod merton;
mod signal;
mod timing;
mod uninformed;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use merton::{merton_deflator, solve_merton, MertonSolution};
pub use signal::{
    posterior_of_jump, q_bar_signal, signal_deflator, solve_signal_insider, SignalInsiderSolution,
    SignalSolveOptions,
};
pub use timing::{f0_by_bracketing, solve_timing_insider, timing_deflator, TimingInsiderSolution};
pub use uninformed::{g1, solve_uninformed, uninformed_deflator, UninformedSolution};
pub(crate) use uninformed::growth_coefficient;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::optimize::{argmax_concave, maximize_bounded};
use crate::quadrature::GaussianNodes;

/// Distance to `{0, 1}` below which a maximiser counts as a boundary point.
pub const INTERIOR_TOL: f64 = 1e-6;

/// Information regime of the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Uninformed,
    Timing,
    Signal,
    Merton,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::Uninformed,
        Regime::Timing,
        Regime::Signal,
        Regime::Merton,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Uninformed => "uninformed",
            Regime::Timing => "timing",
            Regime::Signal => "signal",
            Regime::Merton => "merton",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uninformed" => Ok(Regime::Uninformed),
            "timing" => Ok(Regime::Timing),
            "signal" => Ok(Regime::Signal),
            "merton" => Ok(Regime::Merton),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

/// A solved regime.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum AgentSolution {
    Uninformed(UninformedSolution),
    Timing(TimingInsiderSolution),
    Signal(SignalInsiderSolution),
    Merton(MertonSolution),
}

impl AgentSolution {
    pub fn regime(&self) -> Regime {
        match self {
            AgentSolution::Uninformed(_) => Regime::Uninformed,
            AgentSolution::Timing(_) => Regime::Timing,
            AgentSolution::Signal(_) => Regime::Signal,
            AgentSolution::Merton(_) => Regime::Merton,
        }
    }
}

/// Solve one regime with default numerical settings.
pub fn solve_regime(
    regime: Regime,
    p: &ModelParams,
    rule: &crate::quadrature::QuadratureRule,
) -> Result<AgentSolution> {
    Ok(match regime {
        Regime::Uninformed => AgentSolution::Uninformed(solve_uninformed(p, rule)?),
        Regime::Timing => AgentSolution::Timing(solve_timing_insider(p, rule)?),
        Regime::Signal => AgentSolution::Signal(solve_signal_insider(
            p,
            rule,
            &SignalSolveOptions::default(),
        )?),
        Regime::Merton => AgentSolution::Merton(solve_merton(p)?),
    })
}

pub(crate) fn check_wealth(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveWealth(w))
    }
}

/// Gaussian jump law pre-mapped to `e^x − 1` for the portfolio-jump moments
/// `E[(1 + q(e^X − 1))^k]` and `E[(1 + q(e^X − 1))^k (e^X − 1)]`.
#[derive(Debug, Clone)]
pub(crate) struct JumpKernel {
    em1: Vec<f64>,
    weights: Vec<f64>,
}

impl JumpKernel {
    pub(crate) fn new(nodes: &GaussianNodes) -> Self {
        Self {
            em1: nodes.points.iter().map(|x| x.exp_m1()).collect(),
            weights: nodes.weights.clone(),
        }
    }

    #[inline]
    pub(crate) fn moment(&self, q: f64, k: f64) -> f64 {
        self.em1
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * (1.0 + q * e).powf(k))
            .sum()
    }

    #[inline]
    pub(crate) fn tilted_moment(&self, q: f64, k: f64) -> f64 {
        self.em1
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * (1.0 + q * e).powf(k) * e)
            .sum()
    }
}

/// Scan-and-refine maximisation of a concave objective on `[0, 1]`, polished
/// to the root of its derivative.
pub(crate) fn maximize_unit_concave(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Result<f64> {
    let coarse = maximize_bounded(&f, 0.0, 1.0, 1e-10)?;
    let cell = 2.0 / (crate::optimize::SCAN_POINTS - 1) as f64;
    let lo = (coarse.argument - cell).max(0.0);
    let hi = (coarse.argument + cell).min(1.0);
    let x = argmax_concave(&df, lo, hi, 1e-15)?;
    let slack = 1e-14 * coarse.value.abs().max(1.0);
    Ok(if f(x) >= coarse.value - slack { x } else { coarse.argument })
}

pub(crate) fn reject_boundary(name: &'static str, x: f64, lower: bool, upper: bool) -> Result<()> {
    if (lower && x < INTERIOR_TOL) || (upper && x > 1.0 - INTERIOR_TOL) {
        Err(Error::BoundaryMaximizer { name, value: x })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
        assert!("nobody".parse::<Regime>().is_err());
    }
}
