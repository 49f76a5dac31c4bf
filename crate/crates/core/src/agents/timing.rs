use serde::Serialize;

use super::merton::merton_denominator;
use super::{check_wealth, maximize_unit_concave, reject_boundary, JumpKernel};
use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::optimize::{find_root, fixed_point_scalar};
use crate::quadrature::{adaptive_simpson, g_of_q, QuadratureRule};

/// Absolute residual demanded of the fixed point `f(0) = φ(f(0))`.
pub const F0_TOLERANCE: f64 = 1e-11;

/// Constants of the agent who learns each jump time one jump ahead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingInsiderSolution {
    pub a_star: f64,
    pub gamma_m: f64,
    pub f0: f64,
    pub a2: f64,
    pub g_a_star: f64,
    pub f0_residual: f64,
    pub fixed_point_iterations: usize,
    pub lambda: f64,
    pub risk_aversion: f64,
}

impl TimingInsiderSolution {
    /// `F(s) = f(s)^{1/R} = (1 − e^{−γ_M s})/γ_M + e^{−γ_M s} f(0)^{1/R}`; `s = ∞` is allowed.
    #[inline]
    pub fn f_root(&self, s: f64) -> f64 {
        let inv = 1.0 / self.gamma_m;
        inv + (-self.gamma_m * s).exp() * (self.f0.powf(1.0 / self.risk_aversion) - inv)
    }

    /// `f(s)`, the value-function factor with time `s` left until the next jump.
    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        self.f_root(s).powf(self.risk_aversion)
    }

    /// `f(∞) = γ_M^{−R}`.
    pub fn f_infinity(&self) -> f64 {
        self.gamma_m.powf(-self.risk_aversion)
    }

    /// `∫_{t1}^{t2} f(T − u)^{−1/R} du` with next jump at `T` (possibly `∞`).
    ///
    /// Since `F′ = 1 − γ_M F`, the integrand `1/F` equals `γ_M + F′/F`.
    pub fn consumption_integral(&self, t1: f64, t2: f64, next_jump: f64) -> f64 {
        let base = self.gamma_m * (t2 - t1);
        if next_jump.is_infinite() {
            return base;
        }
        base + (self.f_root(next_jump - t1) / self.f_root(next_jump - t2)).ln()
    }

    /// `φ(x) = g(a*) ∫ λe^{−λs} (F_x(s))^R ds` with `F_x` built from `f(0) = x`.
    pub fn phi(&self, x: f64) -> f64 {
        phi_map(x, self.g_a_star, self.lambda, self.gamma_m, self.risk_aversion)
    }

    /// Normalising initial wealth `f(T₁)^{1/R}` for a first jump at `T₁`.
    pub fn initial_wealth(&self, first_jump: f64) -> f64 {
        self.f_root(first_jump)
    }
}

/// `∫₀^∞ λe^{−λs} F_x(s)^R ds` through `u = e^{−λs}`.
fn laplace_mean(x: f64, lambda: f64, gamma: f64, big_r: f64) -> f64 {
    let inv = 1.0 / gamma;
    let lead = x.powf(1.0 / big_r) - inv;
    let exponent = gamma / lambda;
    let integrand = |u: f64| (inv + u.powf(exponent) * lead).powf(big_r);
    let scale = inv.powf(big_r).max(x);
    adaptive_simpson(&integrand, 0.0, 1.0, 1e-15 * scale)
}

fn phi_map(x: f64, g: f64, lambda: f64, gamma: f64, big_r: f64) -> f64 {
    if lambda == 0.0 {
        return g * gamma.powf(-big_r);
    }
    g * laplace_mean(x, lambda, gamma, big_r)
}

/// Maximiser of `g(a)/(1−R)` on `[0, 1]`.
fn jump_exposure(p: &ModelParams, rule: &QuadratureRule) -> Result<f64> {
    let big_r = p.risk_aversion;
    let kernel = JumpKernel::new(&rule.gaussian_nodes(p.m, p.v));
    maximize_unit_concave(
        |a| kernel.moment(a, 1.0 - big_r) / (1.0 - big_r),
        |a| kernel.tilted_moment(a, -big_r),
    )
}

pub fn solve_timing_insider(
    p: &ModelParams,
    rule: &QuadratureRule,
) -> Result<TimingInsiderSolution> {
    validate_params(p).into_result()?;
    let big_r = p.risk_aversion;
    let gamma_m = merton_denominator(p) / big_r;
    if !(gamma_m > 0.0) {
        return Err(Error::UndefinedValue(format!("γ_M = {gamma_m} must be positive")));
    }
    let a_star = jump_exposure(p, rule)?;
    let g_a_star = g_of_q(a_star, p, rule)?;
    if big_r < 1.0 {
        let gate = p.lambda * g_a_star / (p.lambda + big_r * gamma_m);
        if gate >= 1.0 {
            return Err(Error::IllPosed(gate));
        }
    }
    // the lower end a* = 0 keeps the insider out of the jump and is admitted
    reject_boundary("a*", a_star, false, true)?;

    let map = |x: f64| phi_map(x, g_a_star, p.lambda, gamma_m, big_r);
    let x0 = gamma_m.powf(-big_r);
    let fp = fixed_point_scalar(map, x0, F0_TOLERANCE, 20_000, 1.0)
        .or_else(|_| fixed_point_scalar(map, x0, F0_TOLERANCE, 40_000, 0.5))?;
    let f0 = fp.argument;
    let a2 = if p.lambda == 0.0 {
        gamma_m.powf(-big_r)
    } else {
        laplace_mean(f0, p.lambda, gamma_m, big_r)
    };
    Ok(TimingInsiderSolution {
        a_star,
        gamma_m,
        f0,
        a2,
        g_a_star,
        f0_residual: fp.residual,
        fixed_point_iterations: fp.iterations,
        lambda: p.lambda,
        risk_aversion: big_r,
    })
}

/// Root of `x − φ(x)` by bracketing, an independent check of the fixed point.
pub fn f0_by_bracketing(sol: &TimingInsiderSolution) -> Result<f64> {
    let hi = sol.f0.max(sol.f_infinity()) * 4.0;
    let lo = sol.f0.min(sol.f_infinity()) * 0.25;
    Ok(find_root(|x| x - sol.phi(x), lo, hi, 1e-13)?.argument)
}

/// `Ŷᵃ_t = f(T_next − t) w^{−R} e^{−ρt}`.
pub fn timing_deflator(
    sol: &TimingInsiderSolution,
    p: &ModelParams,
    t: f64,
    w: f64,
    time_of_next_jump: f64,
) -> Result<f64> {
    check_wealth(w)?;
    if !(time_of_next_jump > t) {
        return Err(Error::InvalidParams(format!(
            "next jump time {time_of_next_jump} must exceed t = {t}"
        )));
    }
    Ok(sol.f(time_of_next_jump - t) * w.powf(-p.risk_aversion) * (-p.rho * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon() -> TimingInsiderSolution {
        solve_timing_insider(&ModelParams::CANON, &QuadratureRule::default()).unwrap()
    }

    #[test]
    fn canon_fixed_point_residual() {
        let s = canon();
        assert!((s.phi(s.f0) - s.f0).abs() < 1e-10);
        let bracketed = f0_by_bracketing(&s).unwrap();
        assert!((bracketed - s.f0).abs() < 1e-9 * s.f0);
    }

    #[test]
    fn canon_two_closed_form() {
        // for R = 2, φ(y²) is a quadratic in y
        let s = canon();
        let (l, g, ga) = (0.5, s.gamma_m, s.g_a_star);
        let d = |y: f64| y - 1.0 / g;
        let phi = |y: f64| {
            ga * (1.0 / (g * g) + 2.0 * l * d(y) / (g * (l + g)) + l * d(y) * d(y) / (l + 2.0 * g))
        };
        let y = s.f0.sqrt();
        assert!((phi(y) - s.f0).abs() < 1e-9 * s.f0);
    }

    #[test]
    fn a2_identity() {
        let s = canon();
        assert!((s.a2 * s.g_a_star - s.f0).abs() < 1e-10 * s.f0);
    }

    #[test]
    fn a2_matches_direct_quadrature() {
        let s = canon();
        let direct = adaptive_simpson(&|t: f64| 0.5 * (-0.5 * t).exp() * s.f(t), 0.0, 120.0, 1e-12);
        assert!((direct - s.a2).abs() < 1e-8 * s.a2, "{direct} vs {}", s.a2);
    }

    #[test]
    fn consumption_integral_matches_simpson() {
        let s = canon();
        let next = 3.0;
        let exact = s.consumption_integral(0.4, 2.5, next);
        let r = s.risk_aversion;
        let numeric = adaptive_simpson(&|u: f64| s.f(next - u).powf(-1.0 / r), 0.4, 2.5, 1e-14);
        assert!((exact - numeric).abs() < 1e-12);
        assert!((s.consumption_integral(0.0, 1.0, f64::INFINITY) - s.gamma_m).abs() < 1e-15);
    }

    #[test]
    fn no_jumps_limit() {
        let p = ModelParams {
            lambda: 0.0,
            ..ModelParams::CANON
        };
        let s = solve_timing_insider(&p, &QuadratureRule::default()).unwrap();
        let finf = s.gamma_m.powf(-2.0);
        assert!((s.a2 - finf).abs() < 1e-12 * finf);
        assert!((s.f(1e6) - finf).abs() < 1e-9 * finf);
        assert!((s.f(f64::INFINITY) - finf).abs() < 1e-12 * finf);
    }

    #[test]
    fn ill_posed_for_low_risk_aversion() {
        let p = ModelParams {
            risk_aversion: 0.5,
            lambda: 50.0,
            m: -0.01,
            v: 0.1,
            ..ModelParams::CANON
        };
        assert!(matches!(
            solve_timing_insider(&p, &QuadratureRule::default()),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn f_monotone_in_time() {
        let s = canon();
        let increasing = s.f0.powf(0.5) <= 1.0 / s.gamma_m;
        let mut prev = s.f(0.0);
        for i in 1..=1000 {
            let cur = s.f(i as f64 * 0.1);
            if increasing {
                assert!(cur >= prev);
            } else {
                assert!(cur <= prev);
            }
            prev = cur;
        }
    }

    #[test]
    fn deflator_cases() {
        let p = ModelParams::CANON;
        let s = canon();
        let w0 = s.initial_wealth(2.3);
        assert!((timing_deflator(&s, &p, 0.0, w0, 2.3).unwrap() - 1.0).abs() < 1e-14);
        let y = timing_deflator(&s, &p, 0.5, 1.0, 2.0).unwrap();
        assert!((y - s.f(1.5) * (-0.05f64).exp()).abs() < 1e-12 * y);
        assert!(timing_deflator(&s, &p, 1.0, 1.0, 0.5).is_err());
    }
}
