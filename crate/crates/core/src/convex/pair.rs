use serde::Serialize;

use crate::error::{HtodaError, Result};

use super::conjugate::conjugate_numeric;
use super::scalar::{ConvexScalarFunction, QuadraticScalar, Shifted, Tilted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugationMode {
    Analytic,
    Numeric,
}

/// Which family a conjugate pair came from; used to gate results that only
/// hold for particular potentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Quadratic { stiffness: f64 },
    Toda { a: f64, b: f64 },
    Power { beta: f64 },
    Deformed,
    LogCapacitor { q0: f64, v0: f64 },
    Custom,
    Tilted { base: Box<PotentialKind>, slope: f64 },
    Flipped(Box<PotentialKind>),
}

impl PotentialKind {
    pub fn is_quadratic(&self) -> bool {
        match self {
            PotentialKind::Quadratic { .. } => true,
            PotentialKind::Tilted { base, .. } | PotentialKind::Flipped(base) => base.is_quadratic(),
            _ => false,
        }
    }
}

/// A strictly convex function together with its Legendre transform.
#[derive(Debug, Clone)]
pub struct ConjugatePair {
    pub primal: ConvexScalarFunction,
    pub dual: ConvexScalarFunction,
    pub mode: ConjugationMode,
    pub kind: PotentialKind,
}

impl ConjugatePair {
    pub fn analytic(
        primal: ConvexScalarFunction,
        dual: ConvexScalarFunction,
        kind: PotentialKind,
    ) -> Self {
        ConjugatePair {
            primal,
            dual,
            mode: ConjugationMode::Analytic,
            kind,
        }
    }

    /// Pairs an arbitrary convex function with its numerical conjugate.
    pub fn numeric(primal: ConvexScalarFunction) -> Result<Self> {
        let dual = conjugate_numeric(&primal)?;
        Ok(ConjugatePair {
            primal,
            dual,
            mode: ConjugationMode::Numeric,
            kind: PotentialKind::Custom,
        })
    }

    /// `k x^2 / 2`, self-conjugate when `k = 1`.
    pub fn quadratic(stiffness: f64) -> Result<Self> {
        if !(stiffness > 0.0 && stiffness.is_finite()) {
            return Err(HtodaError::parameter(format!(
                "quadratic stiffness must be positive, got {stiffness}"
            )));
        }
        let q = QuadraticScalar {
            stiffness,
            linear: 0.0,
            constant: 0.0,
        };
        Ok(Self::analytic(
            ConvexScalarFunction::new(format!("quadratic(k={stiffness})"), q),
            ConvexScalarFunction::new(format!("quadratic(k={stiffness})*"), q.conjugate()),
            PotentialKind::Quadratic { stiffness },
        ))
    }

    /// Swaps the roles of the two functions.
    pub fn flipped(&self) -> Self {
        let kind = match &self.kind {
            PotentialKind::Flipped(inner) => (**inner).clone(),
            other => PotentialKind::Flipped(Box::new(other.clone())),
        };
        ConjugatePair {
            primal: self.dual.clone(),
            dual: self.primal.clone(),
            mode: self.mode,
            kind,
        }
    }

    /// Adds `slope * x` to the primal; the dual is shifted accordingly.
    pub fn tilted(&self, slope: f64) -> Self {
        if slope == 0.0 {
            return self.clone();
        }
        let primal = ConvexScalarFunction::new(
            format!("{}+({slope})x", self.primal.label()),
            Tilted {
                inner: self.primal.clone(),
                slope,
            },
        );
        let dual = ConvexScalarFunction::new(
            format!("{}(y-({slope}))", self.dual.label()),
            Shifted {
                inner: self.dual.clone(),
                shift: slope,
            },
        );
        ConjugatePair {
            primal,
            dual,
            mode: self.mode,
            kind: PotentialKind::Tilted {
                base: Box::new(self.kind.clone()),
                slope,
            },
        }
    }

    pub fn is_quadratic(&self) -> bool {
        self.kind.is_quadratic()
    }
}

/// The dual coordinate `f'(x)` of a point.
pub fn dual_coordinate(f: &ConvexScalarFunction, x: f64) -> Result<f64> {
    f.d1(x)
}

/// Canonical divergence `f(x) + f*(f'(x')) - x f'(x')`.
///
/// Values within rounding of zero are returned as zero; a clearly negative
/// value means the pair is not a convex conjugate pair and is reported as a
/// parameter error.
pub fn bregman_divergence(pair: &ConjugatePair, x: f64, x_prime: f64) -> Result<f64> {
    let fx = pair.primal.value(x)?;
    let y_prime = pair.primal.d1(x_prime)?;
    let dual = pair.dual.value(y_prime)?;
    let cross = x * y_prime;
    let d = fx + dual - cross;
    let noise = 64.0 * f64::EPSILON * (fx.abs() + dual.abs() + cross.abs());
    if d >= 0.0 {
        Ok(d)
    } else if d >= -noise {
        Ok(0.0)
    } else {
        Err(HtodaError::parameter(format!(
            "negative divergence {d} between {x} and {x_prime}: {} and {} are not conjugate",
            pair.primal.label(),
            pair.dual.label()
        )))
    }
}
