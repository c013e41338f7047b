//! Potentials built from a deformed logarithm `ln_phi(z) = ∫_1^z dz'/phi(z')`.
//!
//! All integrals are evaluated in the logarithmic variable `s = ln z`, which
//! keeps the integrands bounded for the usual power-like `phi`.

use std::fmt;
use std::sync::Arc;

use crate::error::{HtodaError, Result};
use crate::numeric::{adaptive_simpson, solve_increasing, SolverOptions};

use super::pair::{ConjugatePair, PotentialKind};
use super::scalar::{ConvexScalarFunction, Domain, ScalarEnergy};

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// Largest `|ln z|` the construction works with.
const S_MAX: f64 = 700.0;
const TAIL_CHUNK: f64 = 8.0;

pub type PhiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Deformed logarithm, its inverse and the first moment of `1/phi`.
pub struct GeneralizedLog {
    phi: PhiFn,
    tol: f64,
    lower: f64,
    upper: f64,
}

impl fmt::Debug for GeneralizedLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedLog")
            .field("tol", &self.tol)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

fn check_monotone(phi: &PhiFn) -> Result<()> {
    let mut prev: Option<(f64, f64)> = None;
    for k in -60..=60 {
        let z = (0.5 * k as f64).exp();
        let v = phi(z);
        if !(v.is_finite() && v > 0.0) {
            return Err(HtodaError::Monotonicity(format!(
                "phi({z}) = {v} is not positive"
            )));
        }
        if let Some((pz, pv)) = prev {
            if v <= pv {
                return Err(HtodaError::Monotonicity(format!(
                    "phi is not increasing between {pz} and {z} ({pv} >= {v})"
                )));
            }
        }
        prev = Some((z, v));
    }
    Ok(())
}

impl GeneralizedLog {
    pub fn new(phi: PhiFn, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(HtodaError::parameter(format!(
                "quadrature tolerance must be positive, got {tol}"
            )));
        }
        check_monotone(&phi)?;
        let mut g = GeneralizedLog {
            phi,
            tol,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        };
        g.lower = -g.tail(-1.0)?;
        g.upper = g.tail(1.0)?;
        Ok(g)
    }

    pub fn phi(&self, z: f64) -> f64 {
        (self.phi)(z)
    }

    pub fn phi_prime(&self, z: f64) -> f64 {
        let h = 1e-5 * z;
        ((self.phi)(z + h) - (self.phi)(z - h)) / (2.0 * h)
    }

    /// Integral of `e^{ks}/phi(e^s)` over `[0, s]`, tolerance relative to a
    /// coarse estimate of its size.
    fn integral(&self, k: f64, s: f64) -> Result<f64> {
        let f = |t: f64| (k * t).exp() / (self.phi)(t.exp());
        let crude = {
            let n = 16;
            let h = s / n as f64;
            (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * f(i as f64 * h)
                })
                .sum::<f64>()
                * h
        };
        let tol = self.tol * (1.0 + crude.abs());
        adaptive_simpson(f, 0.0, s, tol)
    }

    /// `ln_phi(e^s)` towards `s -> sign * inf`, or infinite if it diverges.
    fn tail(&self, sign: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut s = 0.0;
        while s < S_MAX {
            let chunk = {
                let f = |t: f64| t.exp() / (self.phi)(t.exp());
                let (a, b) = if sign > 0.0 { (s, s + TAIL_CHUNK) } else { (-s - TAIL_CHUNK, -s) };
                let scale = 1.0 + f(a).abs() + f(b).abs();
                adaptive_simpson(f, a, b, self.tol * scale)?
            };
            total += chunk;
            s += TAIL_CHUNK;
            if total > 1e12 {
                break;
            }
            if chunk <= 1e-15 * (1.0 + total) {
                return Ok(total);
            }
        }
        Ok(f64::INFINITY)
    }

    /// Image of `ln_phi` over `(0, inf)`.
    pub fn range(&self) -> Domain {
        Domain::open(self.lower, self.upper)
    }

    fn check_positive(&self, z: f64) -> Result<f64> {
        let s = z.ln();
        if z > 0.0 && s.abs() < S_MAX {
            Ok(s)
        } else {
            Err(HtodaError::domain(format!(
                "deformed logarithm argument {z} outside (e^-{S_MAX}, e^{S_MAX})"
            )))
        }
    }

    pub fn ln(&self, z: f64) -> Result<f64> {
        let s = self.check_positive(z)?;
        self.integral(1.0, s)
    }

    /// `∫_1^z z'/phi(z') dz'`.
    pub fn moment(&self, z: f64) -> Result<f64> {
        let s = self.check_positive(z)?;
        self.integral(2.0, s)
    }

    /// Inverse of [`GeneralizedLog::ln`].
    pub fn exp(&self, x: f64) -> Result<f64> {
        if !self.range().contains(x) {
            return Err(HtodaError::domain(format!(
                "deformed exponential argument {x} outside {}",
                self.range()
            )));
        }
        let s = solve_increasing(
            // far out in the tails the integrand may overflow; treat that as overshoot
            |s| match self.integral(1.0, s) {
                Err(HtodaError::Quadrature(_)) => Ok(s.signum() * f64::INFINITY),
                other => other,
            },
            |s| Ok(s.exp() / (self.phi)(s.exp())),
            x,
            0.0,
            -S_MAX,
            S_MAX,
            SolverOptions::default(),
        )?;
        Ok(s.exp())
    }
}

/// `int_0^q exp_phi`, strictly convex with second derivative `phi(exp_phi(q))`.
#[derive(Debug, Clone)]
pub struct DeformedPotential {
    log: Arc<GeneralizedLog>,
}

impl ScalarEnergy for DeformedPotential {
    fn domain(&self) -> Domain {
        self.log.range()
    }
    fn gradient_image(&self) -> Domain {
        Domain::open(0.0, f64::INFINITY)
    }
    fn value(&self, q: f64) -> Result<f64> {
        let z = self.log.exp(q)?;
        self.log.moment(z)
    }
    fn d1(&self, q: f64) -> Result<f64> {
        self.log.exp(q)
    }
    fn d2(&self, q: f64) -> Result<f64> {
        Ok(self.log.phi(self.log.exp(q)?))
    }
    fn d3(&self, q: f64) -> Result<f64> {
        let z = self.log.exp(q)?;
        Ok(self.log.phi(z) * self.log.phi_prime(z))
    }
}

/// `int_1^y ln_phi`, the conjugate of [`DeformedPotential`].
#[derive(Debug, Clone)]
pub struct DeformedConjugate {
    log: Arc<GeneralizedLog>,
}

impl ScalarEnergy for DeformedConjugate {
    fn domain(&self) -> Domain {
        Domain::open(0.0, f64::INFINITY)
    }
    fn gradient_image(&self) -> Domain {
        self.log.range()
    }
    fn value(&self, y: f64) -> Result<f64> {
        // integration by parts: y ln_phi(y) - int_1^y z/phi(z) dz
        Ok(y * self.log.ln(y)? - self.log.moment(y)?)
    }
    fn d1(&self, y: f64) -> Result<f64> {
        self.log.ln(y)
    }
    fn d2(&self, y: f64) -> Result<f64> {
        Ok(1.0 / self.log.phi(y))
    }
    fn d3(&self, y: f64) -> Result<f64> {
        let p = self.log.phi(y);
        Ok(-self.log.phi_prime(y) / (p * p))
    }
}

/// Interaction potential generated by a positive increasing `phi`.
///
/// The primal is `int_0^q exp_phi` and the dual is `int_1^y ln_phi`; both
/// are evaluated by adaptive quadrature to `quadrature_tol`.
pub fn make_phi_deformed<F>(phi: F, quadrature_tol: f64) -> Result<ConjugatePair>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let log = Arc::new(GeneralizedLog::new(Arc::new(phi), quadrature_tol)?);
    Ok(ConjugatePair::analytic(
        ConvexScalarFunction::new("deformed", DeformedPotential { log: log.clone() }),
        ConvexScalarFunction::new("deformed*", DeformedConjugate { log }),
        PotentialKind::Deformed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_of(phi: fn(f64) -> f64) -> GeneralizedLog {
        GeneralizedLog::new(Arc::new(phi), DEFAULT_QUADRATURE_TOL).unwrap()
    }

    #[test]
    fn identity_phi_gives_natural_log() {
        let g = log_of(|z| z);
        assert!((g.ln(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.exp(2.0).unwrap() - 2f64.exp()).abs() < 1e-10);
        assert!(g.range().lo.is_infinite() && g.range().hi.is_infinite());
        // moment of 1/phi for phi(z) = z is z - 1
        assert!((g.moment(3.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn square_phi_closed_form() {
        let g = log_of(|z| z * z);
        for z in [0.1, 0.5, 2.0, 10.0] {
            assert!((g.ln(z).unwrap() - (1.0 - 1.0 / z)).abs() < 1e-10);
        }
        assert!((g.range().hi - 1.0).abs() < 1e-12);
        assert!(g.range().lo.is_infinite());
    }

    #[test]
    fn sqrt_phi_lower_limit() {
        let g = log_of(f64::sqrt);
        assert!((g.range().lo + 2.0).abs() < 1e-10);
        assert!(g.range().hi.is_infinite());
        assert!((g.ln(4.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_monotone() {
        let err = make_phi_deformed(|z: f64| 1.0 / z, 1e-10).unwrap_err();
        assert_eq!(err.kind(), "MonotonicityError");
        let err = make_phi_deformed(|z: f64| z - 1.0, 1e-10).unwrap_err();
        assert_eq!(err.kind(), "MonotonicityError");
    }

    #[test]
    fn dual_curvature_is_reciprocal_phi() {
        let p = make_phi_deformed(|z| z, 1e-10).unwrap();
        assert!((p.dual.d2(3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // phi(z) = z: primal is e^q - 1, dual is y ln y - y + 1
        assert!((p.primal.value(1.0).unwrap() - (1f64.exp() - 1.0)).abs() < 1e-10);
        assert!((p.dual.value(2.0).unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-10);
    }
}
