//! Finite differences: pointwise derivatives and derivatives of sampled
//! time series on a uniform grid.

use crate::error::{HtodaError, Result};

/// Step used by every pointwise central difference in the crate.
pub fn fd_step(x: f64) -> f64 {
    1e-5_f64.max(1e-5 * x.abs())
}

/// Central difference `(f(x+h) - f(x-h)) / 2h` with the crate step policy.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = fd_step(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// First time derivative of `n` interleaved components sampled at spacing
/// `dt` (row-major, one row of `n` values per sample).
///
/// Interior samples use central differences, the two end samples use the
/// second-order one-sided stencils.
pub fn time_derivative(values: &[f64], n: usize, dt: f64) -> Result<Vec<f64>> {
    let rows = check_rows(values, n, 3)?;
    let mut out = vec![0.0; values.len()];
    let inv = 1.0 / (2.0 * dt);
    for a in 0..n {
        let v = |k: usize| values[k * n + a];
        out[a] = (-3.0 * v(0) + 4.0 * v(1) - v(2)) * inv;
        for k in 1..rows - 1 {
            out[k * n + a] = (v(k + 1) - v(k - 1)) * inv;
        }
        let l = rows - 1;
        out[l * n + a] = (3.0 * v(l) - 4.0 * v(l - 1) + v(l - 2)) * inv;
    }
    Ok(out)
}

/// Second time derivative; interior samples use the three-point stencil and
/// the ends use the four-point second-order one-sided stencil.
pub fn second_time_derivative(values: &[f64], n: usize, dt: f64) -> Result<Vec<f64>> {
    let rows = check_rows(values, n, 4)?;
    let mut out = vec![0.0; values.len()];
    let inv = 1.0 / (dt * dt);
    for a in 0..n {
        let v = |k: usize| values[k * n + a];
        out[a] = (2.0 * v(0) - 5.0 * v(1) + 4.0 * v(2) - v(3)) * inv;
        for k in 1..rows - 1 {
            out[k * n + a] = (v(k + 1) - 2.0 * v(k) + v(k - 1)) * inv;
        }
        let l = rows - 1;
        out[l * n + a] = (2.0 * v(l) - 5.0 * v(l - 1) + 4.0 * v(l - 2) - v(l - 3)) * inv;
    }
    Ok(out)
}

/// Rows at each end dropped from a derivative of a derivative.
///
/// The one-sided end stencils have a different error constant from the
/// central ones, so differencing a differenced series again turns that jump
/// into a first-order error on the two outermost rows.
pub const NESTED_TRIM: usize = 2;

/// Interior rows `NESTED_TRIM..rows - NESTED_TRIM` of a row-major series.
pub fn trim_nested(values: &[f64], n: usize) -> Result<&[f64]> {
    let rows = check_rows(values, n, 2 * NESTED_TRIM + 1)?;
    Ok(&values[NESTED_TRIM * n..(rows - NESTED_TRIM) * n])
}

fn check_rows(values: &[f64], n: usize, min_rows: usize) -> Result<usize> {
    if n == 0 || !values.len().is_multiple_of(n) {
        return Err(HtodaError::Grid(format!(
            "series of length {} is not a multiple of dimension {n}",
            values.len()
        )));
    }
    let rows = values.len() / n;
    if rows < min_rows {
        return Err(HtodaError::Grid(format!(
            "need at least {min_rows} samples, got {rows}"
        )));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_policy() {
        assert_eq!(fd_step(0.0), 1e-5);
        assert_eq!(fd_step(-200.0), 2e-3);
    }

    #[test]
    fn quadratic_series_is_exact() {
        // x(t) = t^2 sampled at dt = 0.5, derivative 2t and second derivative 2
        let dt = 0.5;
        let xs: Vec<f64> = (0..6).map(|k| (k as f64 * dt).powi(2)).collect();
        let d = time_derivative(&xs, 1, dt).unwrap();
        let dd = second_time_derivative(&xs, 1, dt).unwrap();
        for k in 0..6 {
            assert!((d[k] - 2.0 * k as f64 * dt).abs() < 1e-12);
            assert!((dd[k] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(time_derivative(&[1.0, 2.0], 1, 0.1).unwrap_err().kind(), "GridError");
        assert_eq!(
            second_time_derivative(&[1.0, 2.0, 3.0], 1, 0.1).unwrap_err().kind(),
            "GridError"
        );
    }
}
