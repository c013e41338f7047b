//! Safeguarded Newton iteration for strictly increasing scalar functions.
//!
//! The solver first brackets the root by geometric expansion from a seed
//! point, then runs Newton steps that fall back to bisection whenever a
//! step would leave the bracket or the derivative is unusable.

use crate::error::{HtodaError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Absolute tolerance on the root location.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

const MAX_EXPANSIONS: usize = 2100;

/// Signed residual; non-finite values count as overshooting in the
/// direction of travel.
fn residual(value: f64, target: f64, upward: bool) -> f64 {
    let r = value - target;
    if r.is_finite() {
        r
    } else if r.is_nan() {
        if upward {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        r
    }
}

/// Solves `f(x) = target` for a strictly increasing `f` on the open
/// interval `(lo, hi)`.
///
/// `df` is the derivative of `f`; it only steers Newton steps, so a poor
/// derivative slows convergence but never breaks the bracket. Errors from
/// either closure abort the solve.
pub fn solve_increasing<F, D>(
    mut f: F,
    mut df: D,
    target: f64,
    seed: f64,
    lo: f64,
    hi: f64,
    opts: SolverOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    if !target.is_finite() {
        return Err(HtodaError::domain(format!("non-finite target {target}")));
    }
    let mut x0 = seed;
    if !(x0 > lo && x0 < hi) {
        x0 = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        };
    }
    let r0 = residual(f(x0)?, target, true);
    if r0 == 0.0 {
        return Ok(x0);
    }
    let upward = r0 < 0.0;

    // Bracket [a, b] with r(a) < 0 < r(b).
    let (mut a, mut b, mut ra, mut rb);
    {
        let mut inner = x0;
        let mut r_inner = r0;
        let mut step = 1.0_f64.max(x0.abs() * 0.5);
        let mut found = None;
        for _ in 0..MAX_EXPANSIONS {
            let wall = if upward { hi } else { lo };
            let candidate = if upward { inner + step } else { inner - step };
            let outer = if (upward && candidate < wall) || (!upward && candidate > wall) {
                step *= 2.0;
                candidate
            } else {
                // approach a finite wall by halving the remaining distance
                let mid = 0.5 * (inner + wall);
                if mid == inner || mid == wall {
                    break;
                }
                mid
            };
            if !outer.is_finite() {
                break;
            }
            let r_outer = residual(f(outer)?, target, upward);
            if r_outer == 0.0 {
                return Ok(outer);
            }
            if (r_outer > 0.0) == upward {
                found = Some((outer, r_outer));
                break;
            }
            inner = outer;
            r_inner = r_outer;
        }
        let Some((outer, r_outer)) = found else {
            return Err(HtodaError::domain(format!(
                "target {target} lies outside the image of the function on ({lo}, {hi})"
            )));
        };
        if upward {
            a = inner;
            ra = r_inner;
            b = outer;
            rb = r_outer;
        } else {
            a = outer;
            ra = r_outer;
            b = inner;
            rb = r_inner;
        }
    }

    let mut x = if ra.abs() < rb.abs() { a } else { b };
    let mut rx = if ra.abs() < rb.abs() { ra } else { rb };
    for _ in 0..opts.max_iter {
        let d = df(x)?;
        let newton = x - rx / d;
        let mut next = if d > 0.0 && newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if next <= a || next >= b {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        let rn = residual(f(next)?, target, upward);
        if rn == 0.0 {
            return Ok(next);
        }
        if rn < 0.0 {
            a = next;
            ra = rn;
        } else {
            b = next;
            rb = rn;
        }
        x = next;
        rx = rn;
        let resolution = opts.tol + 4.0 * f64::EPSILON * x.abs();
        if step <= resolution || (b - a) <= resolution {
            return Ok(x);
        }
    }
    let _ = (ra, rb);
    Err(HtodaError::Convergence(format!(
        "no convergence after {} iterations solving for target {target} (bracket [{a}, {b}])",
        opts.max_iter
    )))
}
