use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{HtodaError, Result};
use crate::numeric::fd_step;

/// Distance from an endpoint (or puncture) inside which evaluation is refused.
pub const BOUNDARY_MARGIN: f64 = 1e-10;

/// Open interval `(lo, hi)` of the extended reals, optionally punctured at a
/// single interior point where the second derivative degenerates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub puncture: Option<f64>,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        puncture: None,
    };

    pub fn open(lo: f64, hi: f64) -> Self {
        Domain { lo, hi, puncture: None }
    }

    pub fn punctured(self, at: f64) -> Self {
        Domain {
            puncture: Some(at),
            ..self
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite()
            && x > self.lo + BOUNDARY_MARGIN
            && x < self.hi - BOUNDARY_MARGIN
            && self.puncture.is_none_or(|c| (x - c).abs() > BOUNDARY_MARGIN)
    }

    pub fn check(&self, x: f64, label: &str) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(HtodaError::domain(format!(
                "{label}: argument {x} outside domain {self}"
            )))
        }
    }

    /// Interior starting point for iterative searches.
    pub fn seed(&self) -> f64 {
        let s = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        };
        match self.puncture {
            Some(c) if (s - c).abs() <= BOUNDARY_MARGIN => {
                if self.hi > c + 1.0 {
                    c + 1.0
                } else {
                    0.5 * (c + self.hi)
                }
            }
            _ => s,
        }
    }

    pub fn shifted(&self, by: f64) -> Self {
        Domain {
            lo: self.lo + by,
            hi: self.hi + by,
            puncture: self.puncture.map(|c| c + by),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)?;
        if let Some(c) = self.puncture {
            write!(f, " \\ {{{c}}}")?;
        }
        Ok(())
    }
}

/// Raw evaluation of a strictly convex scalar function and its first three
/// derivatives. Implementations do not check the domain;
/// [`ConvexScalarFunction`] does.
pub trait ScalarEnergy: Send + Sync + fmt::Debug {
    fn domain(&self) -> Domain;
    /// Image of the first derivative over the domain.
    fn gradient_image(&self) -> Domain;
    fn value(&self, x: f64) -> Result<f64>;
    fn d1(&self, x: f64) -> Result<f64>;
    fn d2(&self, x: f64) -> Result<f64>;
    fn d3(&self, x: f64) -> Result<f64>;
}

/// Shared, immutable handle to a strictly convex scalar function.
#[derive(Clone)]
pub struct ConvexScalarFunction {
    inner: Arc<dyn ScalarEnergy>,
    label: Arc<str>,
}

impl fmt::Debug for ConvexScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexScalarFunction")
            .field("label", &self.label)
            .field("domain", &self.domain())
            .finish()
    }
}

impl ConvexScalarFunction {
    pub fn new(label: impl Into<Arc<str>>, inner: impl ScalarEnergy + 'static) -> Self {
        ConvexScalarFunction {
            inner: Arc::new(inner),
            label: label.into(),
        }
    }

    /// Wraps a plain closure; derivatives come from finite differences.
    pub fn from_fn<F>(label: impl Into<Arc<str>>, domain: Domain, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            label,
            SampledEnergy {
                f: Arc::new(f),
                domain,
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Domain {
        self.inner.domain()
    }

    pub fn gradient_image(&self) -> Domain {
        self.inner.gradient_image()
    }

    pub fn raw(&self) -> &dyn ScalarEnergy {
        self.inner.as_ref()
    }

    fn checked(&self, x: f64, what: &str, v: Result<f64>) -> Result<f64> {
        let v = v?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(HtodaError::domain(format!(
                "{} {what} is not finite at {x}",
                self.label
            )))
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.domain().check(x, &self.label)?;
        self.checked(x, "value", self.inner.value(x))
    }

    pub fn d1(&self, x: f64) -> Result<f64> {
        self.domain().check(x, &self.label)?;
        self.checked(x, "first derivative", self.inner.d1(x))
    }

    pub fn d2(&self, x: f64) -> Result<f64> {
        self.domain().check(x, &self.label)?;
        self.checked(x, "second derivative", self.inner.d2(x))
    }

    pub fn d3(&self, x: f64) -> Result<f64> {
        self.domain().check(x, &self.label)?;
        self.checked(x, "third derivative", self.inner.d3(x))
    }
}

/// `k x^2 / 2 + c x + k0` with `k > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticScalar {
    pub stiffness: f64,
    pub linear: f64,
    pub constant: f64,
}

impl QuadraticScalar {
    pub fn conjugate(&self) -> QuadraticScalar {
        let k = self.stiffness;
        QuadraticScalar {
            stiffness: 1.0 / k,
            linear: -self.linear / k,
            constant: self.linear * self.linear / (2.0 * k) - self.constant,
        }
    }
}

impl ScalarEnergy for QuadraticScalar {
    fn domain(&self) -> Domain {
        Domain::REAL_LINE
    }
    fn gradient_image(&self) -> Domain {
        Domain::REAL_LINE
    }
    fn value(&self, x: f64) -> Result<f64> {
        Ok(0.5 * self.stiffness * x * x + self.linear * x + self.constant)
    }
    fn d1(&self, x: f64) -> Result<f64> {
        Ok(self.stiffness * x + self.linear)
    }
    fn d2(&self, _x: f64) -> Result<f64> {
        Ok(self.stiffness)
    }
    fn d3(&self, _x: f64) -> Result<f64> {
        Ok(0.0)
    }
}

/// `f(x) + slope * x`.
#[derive(Debug, Clone)]
pub struct Tilted {
    pub inner: ConvexScalarFunction,
    pub slope: f64,
}

impl ScalarEnergy for Tilted {
    fn domain(&self) -> Domain {
        self.inner.domain()
    }
    fn gradient_image(&self) -> Domain {
        self.inner.gradient_image().shifted(self.slope)
    }
    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.inner.raw().value(x)? + self.slope * x)
    }
    fn d1(&self, x: f64) -> Result<f64> {
        Ok(self.inner.raw().d1(x)? + self.slope)
    }
    fn d2(&self, x: f64) -> Result<f64> {
        self.inner.raw().d2(x)
    }
    fn d3(&self, x: f64) -> Result<f64> {
        self.inner.raw().d3(x)
    }
}

/// `f(y - shift)`; the conjugate of a [`Tilted`] function.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub inner: ConvexScalarFunction,
    pub shift: f64,
}

impl ScalarEnergy for Shifted {
    fn domain(&self) -> Domain {
        self.inner.domain().shifted(self.shift)
    }
    fn gradient_image(&self) -> Domain {
        self.inner.gradient_image()
    }
    fn value(&self, y: f64) -> Result<f64> {
        self.inner.raw().value(y - self.shift)
    }
    fn d1(&self, y: f64) -> Result<f64> {
        self.inner.raw().d1(y - self.shift)
    }
    fn d2(&self, y: f64) -> Result<f64> {
        self.inner.raw().d2(y - self.shift)
    }
    fn d3(&self, y: f64) -> Result<f64> {
        self.inner.raw().d3(y - self.shift)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied function without analytic derivatives.
struct SampledEnergy {
    f: ScalarFn,
    domain: Domain,
}

impl fmt::Debug for SampledEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledEnergy")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl SampledEnergy {
    fn fd_d1(&self, x: f64) -> f64 {
        let h = fd_step(x);
        ((self.f)(x + h) - (self.f)(x - h)) / (2.0 * h)
    }

    /// Limit of the first derivative towards one end of the domain.
    fn probe(&self, upward: bool) -> f64 {
        let end = if upward { self.domain.hi } else { self.domain.lo };
        if end.is_finite() {
            let inset = 1e3 * BOUNDARY_MARGIN * end.abs().max(1.0);
            let x = if upward { end - inset } else { end + inset };
            return self.fd_d1(x);
        }
        let far = if upward { 2f64.powi(30) } else { -(2f64.powi(30)) };
        let g = self.fd_d1(far);
        if !g.is_finite() || g.abs() > 1e9 {
            if upward {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            g
        }
    }
}

impl ScalarEnergy for SampledEnergy {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn gradient_image(&self) -> Domain {
        Domain::open(self.probe(false), self.probe(true))
    }
    fn value(&self, x: f64) -> Result<f64> {
        Ok((self.f)(x))
    }
    fn d1(&self, x: f64) -> Result<f64> {
        Ok(self.fd_d1(x))
    }
    fn d2(&self, x: f64) -> Result<f64> {
        let h = 1e-4_f64.max(1e-4 * x.abs());
        Ok(((self.f)(x + h) - 2.0 * (self.f)(x) + (self.f)(x - h)) / (h * h))
    }
    fn d3(&self, x: f64) -> Result<f64> {
        let h = 1e-3_f64.max(1e-3 * x.abs());
        let f = &self.f;
        Ok((f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_margin_and_puncture() {
        let d = Domain::open(-1.0, 1.0).punctured(0.0);
        assert!(d.contains(0.5));
        assert!(!d.contains(0.0));
        assert!(!d.contains(1.0 - 1e-11));
        assert!(!d.contains(f64::NAN));
        assert!(d.contains(1e-9));
        assert_ne!(d.seed(), 0.0);
    }

    #[test]
    fn quadratic_conjugate_coefficients() {
        let q = QuadraticScalar { stiffness: 2.0, linear: 1.0, constant: 0.5 };
        let c = q.conjugate();
        // f*(y) = (y - 1)^2 / 4 - 0.5
        for y in [-2.0, 0.0, 3.0] {
            let expected = (y - 1.0) * (y - 1.0) / 4.0 - 0.5;
            assert!((c.value(y).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_function_derivatives() {
        let f = ConvexScalarFunction::from_fn("cosh", Domain::REAL_LINE, f64::cosh);
        let x = 0.7;
        assert!((f.d1(x).unwrap() - x.sinh()).abs() < 1e-9);
        assert!((f.d2(x).unwrap() - x.cosh()).abs() < 1e-6);
        assert!((f.d3(x).unwrap() - x.sinh()).abs() < 1e-5);
        let img = f.gradient_image();
        assert!(img.lo.is_infinite() && img.hi.is_infinite());
    }

    #[test]
    fn checked_evaluation_rejects_outside() {
        let f = ConvexScalarFunction::from_fn("neg-log", Domain::open(0.0, f64::INFINITY), |x| -x.ln());
        assert_eq!(f.value(-1.0).unwrap_err().kind(), "DomainError");
        assert_eq!(f.value(5e-11).unwrap_err().kind(), "DomainError");
        assert!(f.value(2.0).is_ok());
    }
}
