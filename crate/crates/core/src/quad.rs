//! Quadrature for integrands with a possible endpoint singularity at zero.
//!
//! The integral over (0, r] is split into geometrically graded panels
//! [r/2^{j+1}, r/2^j]. Each panel is handled by adaptive Simpson. For an
//! integrable power singularity d^{-alpha}, alpha in (0,1), successive
//! panels shrink by the constant factor 2^{alpha-1}, so the unresolved
//! tail over (0, r/2^{J+1}] is a geometric series; we estimate it from
//! the observed panel ratio and stop once successive cumulative
//! estimates agree to the requested relative tolerance. Non-integrable
//! data produce non-decaying panels and exhaust the level budget.

use crate::{Error, Result};

/// Default relative tolerance for graded integration.
pub const DEFAULT_RTOL: f64 = 1e-10;
/// Default maximum number of grading levels toward zero.
pub const DEFAULT_MAX_LEVELS: usize = 40;

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
fn panel_integral<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Integrate `f` over (0, r] with geometric grading (ratio 1/2) toward 0.
///
/// Returns `Error::Divergence` when cumulative estimates fail to settle
/// within `max_levels` halvings, which signals non-integrable data.
pub fn graded_integral<F: Fn(f64) -> f64>(
    f: F,
    r: f64,
    rtol: f64,
    max_levels: usize,
) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "integration endpoint must be positive and finite, got {r}"
        )));
    }
    let mut partial = 0.0f64;
    let mut prev_panel: Option<f64> = None;
    let mut prev_estimate: Option<f64> = None;
    let mut b = r;
    let mut last_increment = f64::INFINITY;
    for level in 0..max_levels {
        let a = 0.5 * b;
        let scale = partial.abs().max(f64::MIN_POSITIVE);
        let panel = panel_integral(&f, a, b, 0.01 * rtol * scale);
        partial += panel;
        b = a;
        // Geometric tail estimate from the observed panel ratio; exact for
        // pure power-law integrands (constant dyadic panel ratio).
        let tail = match prev_panel {
            Some(p) if p.abs() > 0.0 => {
                let ratio = panel / p;
                if ratio > 0.0 && ratio < 0.999 {
                    Some(panel * ratio / (1.0 - ratio))
                } else {
                    None
                }
            }
            _ => None,
        };
        prev_panel = Some(panel);
        if let Some(tail) = tail {
            let estimate = partial + tail;
            if let Some(prev) = prev_estimate {
                last_increment = (estimate - prev).abs();
                if level >= 3 && last_increment < rtol * estimate.abs().max(f64::MIN_POSITIVE) {
                    return Ok(estimate);
                }
            }
            prev_estimate = Some(estimate);
        } else {
            prev_estimate = None;
            last_increment = panel.abs();
        }
    }
    Err(Error::Divergence {
        levels: max_levels,
        last_increment,
    })
}
