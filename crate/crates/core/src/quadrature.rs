//! Gauss–Hermite rules and the Gaussian-expectation kernels used by the solvers.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Psi};
use crate::optimize::find_root;

pub const MAX_ORDER: usize = 200;
pub const DEFAULT_ORDER: usize = crate::defaults::RULE_ORDER;

/// Gauss–Hermite rule for the weight `e^{−x²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Abscissae and normalised weights for `E[f(Z)]`, `Z ~ N(mean, var)`.
    pub fn gaussian_nodes(&self, mean: f64, var: f64) -> GaussianNodes {
        let scale = (2.0 * var).sqrt();
        let norm = 1.0 / PI.sqrt();
        GaussianNodes {
            points: self.nodes.iter().map(|x| mean + scale * x).collect(),
            weights: self.weights.iter().map(|w| w * norm).collect(),
        }
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        gauss_hermite(DEFAULT_ORDER).expect("default order is in range")
    }
}

/// A Gauss–Hermite rule mapped onto a particular normal law; weights sum to 1.
#[derive(Debug, Clone)]
pub struct GaussianNodes {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianNodes {
    #[inline]
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Order-`n` Gauss–Hermite rule. The positive roots of the orthonormal
/// Hermite recurrence are bracketed by a sign-change scan finer than the
/// smallest root spacing, then refined by Brent's method. Nodes are returned
/// in increasing order.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::QuadratureOrder(order));
    }
    let n = order;
    let nf = n as f64;
    let pim4 = PI.powf(-0.25);
    let half = n.div_ceil(2);
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let step = 0.02 * PI / (2.0 * nf + 1.0).sqrt();
    let value = |z: f64| hermite_orthonormal(n, z, pim4).0;

    // positive roots in decreasing order, then zero for odd n
    let mut roots = Vec::with_capacity(half);
    let mut hi = upper;
    let mut f_hi = value(hi);
    let floor = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    while roots.len() < n / 2 {
        let lo = (hi - step).max(floor);
        let f_lo = value(lo);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo.signum() != f_hi.signum() {
            roots.push(find_root(value, lo, hi, 1e-16 * hi.max(1.0))?.argument);
        }
        if lo <= floor {
            break;
        }
        hi = lo;
        f_hi = f_lo;
    }
    if roots.len() != n / 2 {
        return Err(Error::NotConverged {
            iterations: roots.len(),
            residual: f64::NAN,
        });
    }
    if n % 2 == 1 {
        roots.push(0.0);
    }

    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, &z) in roots.iter().enumerate() {
        let (_, p2) = hermite_orthonormal(n, z, pim4);
        let pp = (2.0 * nf).sqrt() * p2;
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Ok(QuadratureRule {
        nodes: x,
        weights: w,
    })
}

/// Values of the orthonormal Hermite functions `(p_n(z), p_{n−1}(z))`.
fn hermite_orthonormal(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Gauss–Hermite approximation of `E[f(Z)]`, `Z ~ N(mean, var)`.
pub fn expect_gaussian(
    f: impl Fn(f64) -> f64,
    mean: f64,
    var: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::InvalidParams(format!(
            "Gaussian variance must be positive, got {var}"
        )));
    }
    let scale = (2.0 * var).sqrt();
    let mut acc = 0.0;
    for (&xi, &wi) in rule.nodes.iter().zip(&rule.weights) {
        let x = mean + scale * xi;
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::NonFiniteIntegrand(x));
        }
        acc += wi * fx;
    }
    Ok(acc / PI.sqrt())
}

fn check_fraction(name: &'static str, q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::OutOfUnitInterval { name, value: q })
    }
}

/// `g(q) = E[(1 + q(e^X − 1))^{1−R}]`, `X ~ N(m, v)`.
pub fn g_of_q(q: f64, p: &ModelParams, rule: &QuadratureRule) -> Result<f64> {
    check_fraction("q", q)?;
    let e = 1.0 - p.risk_aversion;
    expect_gaussian(|x| (1.0 + q * x.exp_m1()).powf(e), p.m, p.v, rule)
}

/// `φ₂(q; m′, v′) = E[U(1 + q(e^X − 1))]`, `X ~ N(m′, v′)`.
pub fn phi2(
    q: f64,
    m_prime: f64,
    v_prime: f64,
    p: &ModelParams,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_fraction("q", q)?;
    expect_gaussian(|x| p.utility(1.0 + q * x.exp_m1()), m_prime, v_prime, rule)
}

/// Nested Gauss–Hermite evaluation of
/// `E[Ψ(X₁ + X₂)(1 + a(e^{X₁} − 1))^{−R}]`, `X₁ ~ N(m, v)`, `X₂ ~ N(0, v_eps)`.
pub fn psi_double_integral(
    psi: &Psi,
    a_coef: f64,
    p: &ModelParams,
    rule: &QuadratureRule,
) -> Result<f64> {
    if p.v_eps <= 0.0 {
        return Err(Error::DegenerateSignal);
    }
    check_fraction("a", a_coef)?;
    let inner = rule.gaussian_nodes(0.0, p.v_eps);
    expect_gaussian(
        |x1| {
            let inner_mean = inner.expect(|x2| psi.eval(x1 + x2));
            inner_mean * (1.0 + a_coef * x1.exp_m1()).powf(-p.risk_aversion)
        },
        p.m,
        p.v,
        rule,
    )
}

/// Adaptive Simpson with Richardson correction on `[a, b]`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // stop at the requested tolerance or once the correction is rounding noise
        if depth == 0 || delta.abs() <= 15.0 * eps || delta.abs() <= 1e-15 * (left + right).abs() {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, eps, 50)
}
