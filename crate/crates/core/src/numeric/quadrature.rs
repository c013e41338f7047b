//! Adaptive Simpson quadrature with Richardson correction.

use crate::error::{HtodaError, Result};

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 8;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn refine<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(HtodaError::Quadrature(format!(
            "integrand is not finite on [{}, {}]",
            p.a, p.b
        )));
    }
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * tol || (p.b - p.a).abs() <= 4.0 * f64::EPSILON * m.abs().max(1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(HtodaError::Quadrature(format!(
            "tolerance {tol:e} not reached on [{}, {}]",
            p.a, p.b
        )));
    }
    let l = refine(
        f,
        Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left },
        0.5 * tol,
        depth - 1,
    )?;
    let r = refine(
        f,
        Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right },
        0.5 * tol,
        depth - 1,
    )?;
    Ok(l + r)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Reversed limits give the negated integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(HtodaError::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let width = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut fa = f(a);
    if !fa.is_finite() {
        return Err(HtodaError::Quadrature(format!("integrand is not finite at {a}")));
    }
    for i in 0..INITIAL_PANELS {
        let pa = a + width * i as f64;
        let pb = if i + 1 == INITIAL_PANELS { b } else { a + width * (i + 1) as f64 };
        let pm = 0.5 * (pa + pb);
        let fm = f(pm);
        let fb = f(pb);
        if !fm.is_finite() || !fb.is_finite() {
            return Err(HtodaError::Quadrature(format!(
                "integrand is not finite on [{pa}, {pb}]"
            )));
        }
        let whole = simpson(pa, pb, fa, fm, fb);
        total += refine(&f, Panel { a: pa, b: pb, fa, fm, fb, whole }, panel_tol, MAX_DEPTH)?;
        fa = fb;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_gives_log() {
        let v = adaptive_simpson(|x| 1.0 / x, 1.0, std::f64::consts::E, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_negate() {
        let fwd = adaptive_simpson(f64::sin, 0.0, 1.0, 1e-12).unwrap();
        let back = adaptive_simpson(f64::sin, 1.0, 0.0, 1e-12).unwrap();
        assert_eq!(fwd, -back);
    }

    #[test]
    fn singular_integrand_is_rejected() {
        let err = adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-10).unwrap_err();
        assert_eq!(err.kind(), "QuadratureError");
    }
}
