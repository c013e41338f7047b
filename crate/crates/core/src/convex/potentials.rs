//! Closed-form interaction potentials and their Legendre transforms.

use crate::error::{HtodaError, Result};

use super::pair::{ConjugatePair, PotentialKind};
use super::scalar::{ConvexScalarFunction, Domain, ScalarEnergy};

/// `(A/B) e^{-Bq} + A q` on the whole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaPotential {
    pub a: f64,
    pub b: f64,
}

impl ScalarEnergy for TodaPotential {
    fn domain(&self) -> Domain {
        Domain::REAL_LINE
    }
    fn gradient_image(&self) -> Domain {
        Domain::open(f64::NEG_INFINITY, self.a)
    }
    fn value(&self, q: f64) -> Result<f64> {
        Ok(self.a / self.b * (-self.b * q).exp() + self.a * q)
    }
    fn d1(&self, q: f64) -> Result<f64> {
        Ok(-self.a * (-self.b * q).exp_m1())
    }
    fn d2(&self, q: f64) -> Result<f64> {
        Ok(self.a * self.b * (-self.b * q).exp())
    }
    fn d3(&self, q: f64) -> Result<f64> {
        Ok(-self.a * self.b * self.b * (-self.b * q).exp())
    }
}

/// `((A - y)/B) [ln(1 - y/A) - 1]` on `y < A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaConjugate {
    pub a: f64,
    pub b: f64,
}

impl ScalarEnergy for TodaConjugate {
    fn domain(&self) -> Domain {
        Domain::open(f64::NEG_INFINITY, self.a)
    }
    fn gradient_image(&self) -> Domain {
        Domain::REAL_LINE
    }
    fn value(&self, y: f64) -> Result<f64> {
        Ok((self.a - y) / self.b * ((-y / self.a).ln_1p() - 1.0))
    }
    fn d1(&self, y: f64) -> Result<f64> {
        Ok(-(-y / self.a).ln_1p() / self.b)
    }
    fn d2(&self, y: f64) -> Result<f64> {
        Ok(1.0 / (self.b * (self.a - y)))
    }
    fn d3(&self, y: f64) -> Result<f64> {
        let r = self.a - y;
        Ok(1.0 / (self.b * r * r))
    }
}

/// Toda interaction potential and its closed-form conjugate.
pub fn make_toda_potential(a: f64, b: f64) -> Result<ConjugatePair> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(HtodaError::parameter(format!(
            "Toda potential needs A > 0 and B > 0, got A={a}, B={b}"
        )));
    }
    Ok(ConjugatePair::analytic(
        ConvexScalarFunction::new(format!("toda(A={a},B={b})"), TodaPotential { a, b }),
        ConvexScalarFunction::new(format!("toda(A={a},B={b})*"), TodaConjugate { a, b }),
        PotentialKind::Toda { a, b },
    ))
}

/// `(q^2)^beta / (2 beta)`.
///
/// For `beta != 1` the second derivative vanishes or blows up at the
/// origin, so the origin is removed from the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub beta: f64,
}

impl PowerLaw {
    fn is_quadratic(&self) -> bool {
        self.beta == 1.0
    }

    fn domain_impl(&self) -> Domain {
        if self.is_quadratic() {
            Domain::REAL_LINE
        } else {
            Domain::REAL_LINE.punctured(0.0)
        }
    }
}

impl ScalarEnergy for PowerLaw {
    fn domain(&self) -> Domain {
        self.domain_impl()
    }
    fn gradient_image(&self) -> Domain {
        self.domain_impl()
    }
    fn value(&self, q: f64) -> Result<f64> {
        Ok((q * q).powf(self.beta) / (2.0 * self.beta))
    }
    fn d1(&self, q: f64) -> Result<f64> {
        if self.is_quadratic() {
            return Ok(q);
        }
        Ok(q * (q * q).powf(self.beta - 1.0))
    }
    fn d2(&self, q: f64) -> Result<f64> {
        if self.is_quadratic() {
            return Ok(1.0);
        }
        Ok((2.0 * self.beta - 1.0) * (q * q).powf(self.beta - 1.0))
    }
    fn d3(&self, q: f64) -> Result<f64> {
        if self.is_quadratic() {
            return Ok(0.0);
        }
        let two_b = 2.0 * self.beta;
        Ok((two_b - 1.0) * (two_b - 2.0) * q * (q * q).powf(self.beta - 2.0))
    }
}

/// Conjugate exponent `beta*` with `1/(2 beta) + 1/(2 beta*) = 1`.
pub fn conjugate_exponent(beta: f64) -> Result<f64> {
    if !(2.0 * beta > 1.0 && beta.is_finite()) {
        return Err(HtodaError::parameter(format!(
            "power potential needs 2*beta > 1, got beta={beta}"
        )));
    }
    Ok(beta / (2.0 * beta - 1.0))
}

/// Power-law interaction potential; its conjugate is again a power law.
pub fn make_power_potential(beta: f64) -> Result<ConjugatePair> {
    let beta_star = conjugate_exponent(beta)?;
    Ok(ConjugatePair::analytic(
        ConvexScalarFunction::new(format!("power(beta={beta})"), PowerLaw { beta }),
        ConvexScalarFunction::new(
            format!("power(beta={beta})*"),
            PowerLaw { beta: beta_star },
        ),
        PotentialKind::Power { beta },
    ))
}
