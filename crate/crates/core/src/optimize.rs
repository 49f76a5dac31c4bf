//! Scalar maximisation, root finding and fixed-point iteration.

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of points in the coarse scan of [`maximize_bounded`].
pub const SCAN_POINTS: usize = 257;

/// Upper end of the fixed-point safety bracket.
pub const X_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveResult {
    pub argument: f64,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn eval_finite(f: &impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteObjective(x))
    }
}

/// Maximise `f` on `[lo, hi]`: scan [`SCAN_POINTS`] equally spaced points, then
/// refine the best one by golden-section search on its neighbouring cells.
///
/// The result is never worse than the best scan point. Two separated scan
/// maxima whose values agree within `1e-9` are reported as
/// [`Error::AmbiguousMaximum`].
pub fn maximize_bounded(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<SolveResult> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let n = SCAN_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect();
    let values = grid
        .iter()
        .map(|&x| eval_finite(&f, x))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for i in 1..n {
        if values[i] > values[best] {
            best = i;
        }
    }
    let fbest = values[best];
    let near = |y: f64| (fbest - y).abs() <= 1e-9 * fbest.abs().max(1.0);
    // local maxima of the scan that tie with the best one
    for i in 0..n {
        let left_ok = i == 0 || values[i] >= values[i - 1];
        let right_ok = i == n - 1 || values[i] >= values[i + 1];
        if left_ok && right_ok && i.abs_diff(best) > 1 && near(values[i]) {
            let separated = (0..n)
                .filter(|&k| k > i.min(best) && k < i.max(best))
                .any(|k| !near(values[k]));
            if separated {
                return Err(Error::AmbiguousMaximum {
                    first: grid[best],
                    second: grid[i],
                });
            }
        }
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n - 1)];
    let mut iterations = 0;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval_finite(&f, c)?;
    let mut fd = eval_finite(&f, d)?;
    while (b - a) > tol && iterations < 200 {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval_finite(&f, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval_finite(&f, d)?;
        }
    }
    let (mut x, mut fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    if fbest >= fx {
        x = grid[best];
        fx = fbest;
    }
    Ok(SolveResult {
        argument: x,
        value: fx,
        iterations,
        residual: (b - a).max(0.0),
    })
}

/// Maximiser of a concave differentiable function on `[lo, hi]` from its
/// derivative: a boundary when the derivative does not change sign, otherwise
/// the root of the derivative.
pub fn argmax_concave(df: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let dlo = df(lo);
    if !dlo.is_finite() {
        return Err(Error::NonFiniteObjective(lo));
    }
    if dlo <= 0.0 {
        return Ok(lo);
    }
    let dhi = df(hi);
    if !dhi.is_finite() {
        return Err(Error::NonFiniteObjective(hi));
    }
    if dhi >= 0.0 {
        return Ok(hi);
    }
    Ok(find_root(df, lo, hi, tol)?.argument)
}

/// Brent's method for a root of `f` bracketed by `[lo, hi]`.
pub fn find_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<SolveResult> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(Error::NonFiniteObjective(a));
    }
    if !fb.is_finite() {
        return Err(Error::NonFiniteObjective(b));
    }
    if fa == 0.0 {
        return Ok(SolveResult { argument: a, value: 0.0, iterations: 0, residual: 0.0 });
    }
    if fb == 0.0 {
        return Ok(SolveResult { argument: b, value: 0.0, iterations: 0, residual: 0.0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(SolveResult {
                argument: b,
                value: fb,
                iterations: iter,
                residual: fb.abs(),
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFiniteObjective(b));
        }
    }
    Err(Error::NotConverged {
        iterations: 200,
        residual: fb.abs(),
    })
}

/// Damped fixed-point iteration `x ← (1−d)x + d·map(x)` until
/// `|map(x) − x| ≤ tol`; the returned argument is the iterate whose residual
/// is reported.
pub fn fixed_point_scalar(
    map: impl Fn(f64) -> f64,
    x0: f64,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<SolveResult> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "damping must lie in (0, 1], got {damping}"
        )));
    }
    let mut x = x0;
    for iterations in 0..=max_iter {
        if !(x > 0.0 && x < X_MAX) {
            return Err(Error::LeftBracket(x));
        }
        let mx = map(x);
        if !mx.is_finite() {
            return Err(Error::NonFiniteObjective(x));
        }
        let residual = (mx - x).abs();
        if residual <= tol {
            return Ok(SolveResult {
                argument: x,
                value: mx,
                iterations,
                residual,
            });
        }
        if iterations == max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
        x = (1.0 - damping) * x + damping * mx;
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_vertex() {
        let r = maximize_bounded(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10).unwrap();
        assert!((r.argument - 0.3).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn monotone_hits_boundary() {
        let r = maximize_bounded(|x| x, 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(r.argument, 1.0);
        let r = maximize_bounded(|x| -x, 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(r.argument, 0.0);
    }

    #[test]
    fn two_equal_peaks_are_ambiguous() {
        let f = |x: f64| -((x - 0.2) * (x - 0.8)).powi(2);
        assert!(matches!(
            maximize_bounded(f, 0.0, 1.0, 1e-10),
            Err(Error::AmbiguousMaximum { .. })
        ));
    }

    #[test]
    fn non_finite_objective() {
        assert!(matches!(
            maximize_bounded(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-8),
            Err(Error::NonFiniteObjective(_))
        ));
    }

    #[test]
    fn bad_interval() {
        assert!(maximize_bounded(|x| x, 1.0, 0.0, 1e-8).is_err());
    }

    #[test]
    fn babylonian_sqrt2() {
        let r = fixed_point_scalar(|x| 0.5 * (x + 2.0 / x), 1.0, 1e-14, 100, 1.0).unwrap();
        assert!((r.argument - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_map_returns_start() {
        let r = fixed_point_scalar(|x| x, 3.5, 1e-12, 10, 1.0).unwrap();
        assert_eq!(r.argument, 3.5);
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn fixed_point_failures() {
        assert!(matches!(
            fixed_point_scalar(|x| x + 1.0, 1.0, 1e-12, 5, 1.0),
            Err(Error::NotConverged { .. })
        ));
        assert!(matches!(
            fixed_point_scalar(|x| -x, 1.0, 1e-12, 5, 1.0),
            Err(Error::LeftBracket(_))
        ));
    }

    #[test]
    fn damping_converges_oscillating_map() {
        // x ↦ 2 − x oscillates without damping
        let r = fixed_point_scalar(|x| 2.0 - x, 0.5, 1e-12, 100, 0.5).unwrap();
        assert!((r.argument - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brent_root() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r.argument - 2f64.sqrt()).abs() < 1e-14);
        assert!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn concave_argmax() {
        assert_eq!(argmax_concave(|x| 1.0 - x, 0.0, 0.5, 1e-14).unwrap(), 0.5);
        assert_eq!(argmax_concave(|x| -1.0 - x, 0.0, 0.5, 1e-14).unwrap(), 0.0);
        let x = argmax_concave(|x| 0.3 - x, 0.0, 1.0, 1e-15).unwrap();
        assert!((x - 0.3).abs() < 1e-14);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn maximizer_stays_in_interval(c in -2.0f64..3.0, lo in -1.0f64..0.5, w in 0.01f64..2.0) {
                let hi = lo + w;
                let r = maximize_bounded(|x| -(x - c).powi(2), lo, hi, 1e-10).unwrap();
                prop_assert!(r.argument >= lo && r.argument <= hi);
                let clamped = c.clamp(lo, hi);
                prop_assert!((r.argument - clamped).abs() < 1e-6);
            }

            #[test]
            fn residual_is_reproducible(a in 0.5f64..5.0) {
                let map = |x: f64| 0.5 * (x + a / x);
                let r = fixed_point_scalar(map, 1.0, 1e-12, 200, 1.0).unwrap();
                prop_assert!(((map(r.argument) - r.argument).abs() - r.residual).abs() <= 1e-14);
                let again = fixed_point_scalar(map, 1.0, 1e-12, 200, 1.0).unwrap();
                prop_assert_eq!(r.argument.to_bits(), again.argument.to_bits());
            }
        }
    }
}
