use crate::error::Result;
use crate::numeric::{solve_increasing, SolverOptions};

use super::scalar::{ConvexScalarFunction, Domain, ScalarEnergy, BOUNDARY_MARGIN};

/// Legendre transform evaluated pointwise by inverting the gradient of the
/// primal function.
#[derive(Debug, Clone)]
pub struct NumericConjugate {
    primal: ConvexScalarFunction,
    opts: SolverOptions,
}

impl NumericConjugate {
    pub fn new(primal: ConvexScalarFunction, opts: SolverOptions) -> Self {
        NumericConjugate { primal, opts }
    }

    /// The maximiser `x` of `x y - f(x)`, i.e. the solution of `f'(x) = y`.
    pub fn argmax(&self, y: f64) -> Result<f64> {
        let raw = self.primal.raw();
        let d = self.primal.domain();
        let (lo, hi) = match d.puncture {
            // solve on the side of the puncture whose gradient range holds y
            Some(c) => {
                let right = c + BOUNDARY_MARGIN.max(c.abs() * f64::EPSILON * 4.0);
                if raw.d1(right).is_ok_and(|g| y >= g) {
                    (c, d.hi)
                } else {
                    (d.lo, c)
                }
            }
            None => (d.lo, d.hi),
        };
        let seed = Domain::open(lo, hi).seed();
        solve_increasing(|x| raw.d1(x), |x| raw.d2(x), y, seed, lo, hi, self.opts)
    }
}

impl ScalarEnergy for NumericConjugate {
    fn domain(&self) -> Domain {
        self.primal.gradient_image()
    }

    fn gradient_image(&self) -> Domain {
        self.primal.domain()
    }

    fn value(&self, y: f64) -> Result<f64> {
        let x = self.argmax(y)?;
        Ok(x * y - self.primal.raw().value(x)?)
    }

    fn d1(&self, y: f64) -> Result<f64> {
        self.argmax(y)
    }

    fn d2(&self, y: f64) -> Result<f64> {
        let x = self.argmax(y)?;
        Ok(1.0 / self.primal.raw().d2(x)?)
    }

    fn d3(&self, y: f64) -> Result<f64> {
        let x = self.argmax(y)?;
        let raw = self.primal.raw();
        let h = raw.d2(x)?;
        Ok(-raw.d3(x)? / (h * h * h))
    }
}

/// Numerical Legendre transform `g(y) = sup_x [x y - f(x)]`.
///
/// The returned function is defined on the image of `f'`; each evaluation
/// solves `f'(x) = y` with the safeguarded Newton kernel.
pub fn conjugate_numeric(f: &ConvexScalarFunction) -> Result<ConvexScalarFunction> {
    conjugate_numeric_with(f, SolverOptions::default())
}

pub fn conjugate_numeric_with(
    f: &ConvexScalarFunction,
    opts: SolverOptions,
) -> Result<ConvexScalarFunction> {
    let label = format!("{}*", f.label());
    Ok(ConvexScalarFunction::new(label, NumericConjugate::new(f.clone(), opts)))
}
