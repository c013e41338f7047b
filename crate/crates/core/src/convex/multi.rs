//! Multivariate energies: quadratic forms, separable sums of scalar
//! potentials, and the identically vanishing energy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{HtodaError, Result};

use super::pair::ConjugatePair;

/// Smallest eigenvalue accepted as positive.
pub const EIGENVALUE_FLOOR: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Fails with the offending eigenvalue unless `m` is positive definite.
pub fn check_positive_definite(m: &DMatrix<f64>, what: &str) -> Result<Vec<f64>> {
    let ev = symmetric_eigenvalues(m);
    match ev.first() {
        Some(&min) if min > EIGENVALUE_FLOOR => Ok(ev),
        Some(&min) => Err(HtodaError::Convexity {
            message: format!(
                "{what} is not positive definite: eigenvalue {} <= {EIGENVALUE_FLOOR:e}",
                format_eigenvalue(min)
            ),
            eigenvalue: min,
        }),
        None => Err(HtodaError::parameter(format!("{what} is empty"))),
    }
}

/// Rounds eigenvalues that are zero up to round-off to an exact `0`.
pub fn format_eigenvalue(v: f64) -> String {
    if v.abs() < EIGENVALUE_FLOOR {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// `x^T M x / 2 + c^T x + k0` with symmetric `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn new(matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(HtodaError::parameter(format!(
                "quadratic form needs a non-empty square matrix, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        if linear.len() != n {
            return Err(HtodaError::parameter(format!(
                "linear term has length {}, expected {n}",
                linear.len()
            )));
        }
        if matrix.iter().chain(linear.iter()).any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(HtodaError::parameter("quadratic form has non-finite entries"));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(HtodaError::parameter(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        matrix[(i, j)],
                        matrix[(j, i)]
                    )));
                }
            }
        }
        Ok(QuadraticForm {
            matrix,
            linear,
            constant,
        })
    }

    /// `x^T M x / 2` without linear or constant terms.
    pub fn pure(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, DVector::zeros(n), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.matrix * &x)) + self.linear.dot(&x) + self.constant
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (&self.matrix * x + &self.linear).iter().copied().collect()
    }

    /// `(y - c)^T M^{-1} (y - c) / 2 - k0`.
    pub fn conjugate(&self) -> Result<QuadraticForm> {
        check_positive_definite(&self.matrix, "quadratic form")?;
        let inv = self
            .matrix
            .clone()
            .cholesky()
            .ok_or_else(|| HtodaError::parameter("Cholesky factorisation failed"))?
            .inverse();
        let inv = 0.5 * (&inv + inv.transpose());
        let shift = &inv * &self.linear;
        let constant = 0.5 * self.linear.dot(&shift) - self.constant;
        QuadraticForm::new(inv, -shift, constant)
    }
}

/// `sum_a f_a(x_a) + c_a x_a`.
#[derive(Debug, Clone)]
pub struct SeparableConvexFunction {
    pub parts: Vec<ConjugatePair>,
    pub linear_offset: Option<Vec<f64>>,
}

impl SeparableConvexFunction {
    pub fn new(parts: Vec<ConjugatePair>, linear_offset: Option<Vec<f64>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(HtodaError::parameter("separable function needs at least one part"));
        }
        if let Some(c) = &linear_offset {
            if c.len() != parts.len() {
                return Err(HtodaError::parameter(format!(
                    "linear offset has length {}, expected {}",
                    c.len(),
                    parts.len()
                )));
            }
        }
        Ok(SeparableConvexFunction {
            parts,
            linear_offset,
        })
    }

    /// The same scalar potential on each of `n` coordinates.
    pub fn uniform(pair: &ConjugatePair, n: usize) -> Result<Self> {
        Self::new(vec![pair.clone(); n], None)
    }

    pub fn dim(&self) -> usize {
        self.parts.len()
    }

    fn offset(&self, a: usize) -> f64 {
        self.linear_offset.as_ref().map_or(0.0, |c| c[a])
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (a, (part, &xa)) in self.parts.iter().zip(x).enumerate() {
            total += part.primal.value(xa)? + self.offset(a) * xa;
        }
        Ok(total)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.parts
            .iter()
            .zip(x)
            .enumerate()
            .map(|(a, (part, &xa))| Ok(part.primal.d1(xa)? + self.offset(a)))
            .collect()
    }

    pub fn hessian_diagonal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.parts.iter().zip(x).map(|(p, &xa)| p.primal.d2(xa)).collect()
    }

    pub fn third_diagonal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.parts.iter().zip(x).map(|(p, &xa)| p.primal.d3(xa)).collect()
    }

    /// Part-wise Legendre transform; the linear offset becomes a shift.
    pub fn conjugate(&self) -> SeparableConvexFunction {
        let parts = self
            .parts
            .iter()
            .enumerate()
            .map(|(a, p)| p.tilted(self.offset(a)).flipped())
            .collect();
        SeparableConvexFunction {
            parts,
            linear_offset: None,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        self.parts.iter().all(ConjugatePair::is_quadratic)
    }
}

/// Kinetic or potential energy of a separable Hamiltonian.
#[derive(Debug, Clone)]
pub enum Energy {
    Quadratic(QuadraticForm),
    Separable(SeparableConvexFunction),
    /// `U = 0` in `n` dimensions.
    Vanishing(usize),
}

impl Energy {
    /// Quadratic energy; the matrix must be positive definite.
    pub fn quadratic(form: QuadraticForm) -> Result<Self> {
        check_positive_definite(&form.matrix, "energy Hessian")?;
        Ok(Energy::Quadratic(form))
    }

    pub fn dim(&self) -> usize {
        match self {
            Energy::Quadratic(f) => f.dim(),
            Energy::Separable(f) => f.dim(),
            Energy::Vanishing(n) => *n,
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(HtodaError::parameter(format!(
                "point has dimension {}, energy has {}",
                x.len(),
                self.dim()
            )))
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        match self {
            Energy::Quadratic(f) => Ok(f.value(x)),
            Energy::Separable(f) => f.value(x),
            Energy::Vanishing(_) => Ok(0.0),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        match self {
            Energy::Quadratic(f) => Ok(f.gradient(x)),
            Energy::Separable(f) => f.gradient(x),
            Energy::Vanishing(n) => Ok(vec![0.0; *n]),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        match self {
            Energy::Quadratic(f) => Ok(f.matrix.clone()),
            Energy::Separable(f) => Ok(DMatrix::from_diagonal(&DVector::from_vec(
                f.hessian_diagonal(x)?,
            ))),
            Energy::Vanishing(n) => Ok(DMatrix::zeros(*n, *n)),
        }
    }

    /// Third derivative as a flat row-major `n x n x n` array.
    pub fn third_derivative(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let n = self.dim();
        let mut out = vec![0.0; n * n * n];
        if let Energy::Separable(f) = self {
            for (a, v) in f.third_diagonal(x)?.into_iter().enumerate() {
                out[(a * n + a) * n + a] = v;
            }
        }
        Ok(out)
    }

    pub fn conjugate(&self) -> Result<Energy> {
        match self {
            Energy::Quadratic(f) => Ok(Energy::Quadratic(f.conjugate()?)),
            Energy::Separable(f) => Ok(Energy::Separable(f.conjugate())),
            Energy::Vanishing(_) => Err(HtodaError::hypothesis(
                "a vanishing energy has no Legendre transform",
            )),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        match self {
            Energy::Quadratic(_) => true,
            Energy::Separable(f) => f.is_quadratic(),
            Energy::Vanishing(_) => false,
        }
    }

    pub fn is_vanishing(&self) -> bool {
        matches!(self, Energy::Vanishing(_))
    }

    /// The constant Hessian and linear term of a quadratic energy.
    pub fn as_quadratic_form(&self) -> Option<QuadraticForm> {
        match self {
            Energy::Quadratic(f) => Some(f.clone()),
            Energy::Separable(f) if f.is_quadratic() => {
                let n = f.dim();
                let x0 = vec![0.0; n];
                let diag = f.hessian_diagonal(&x0).ok()?;
                let lin = f.gradient(&x0).ok()?;
                QuadraticForm::new(
                    DMatrix::from_diagonal(&DVector::from_vec(diag)),
                    DVector::from_vec(lin),
                    f.value(&x0).ok()?,
                )
                .ok()
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::potentials::make_toda_potential;

    #[test]
    fn quadratic_conjugate_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let f = QuadraticForm::new(m, DVector::from_vec(vec![0.5, -1.0]), 0.25).unwrap();
        let g = f.conjugate().unwrap();
        let x = [0.3, -0.7];
        let y = f.gradient(&x);
        // Fenchel equality at conjugate points
        let gap = f.value(&x) + g.value(&y) - (x[0] * y[0] + x[1] * y[1]);
        assert!(gap.abs() < 1e-14);
        let back = g.gradient(&y);
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert_eq!(QuadraticForm::pure(m).unwrap_err().kind(), "ParameterError");
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let err = Energy::quadratic(QuadraticForm::pure(m).unwrap()).unwrap_err();
        assert_eq!(err.kind(), "ConvexityError");
        assert!(err.to_string().contains("eigenvalue 0"));
    }

    #[test]
    fn separable_conjugate_with_offset() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let f = SeparableConvexFunction::new(vec![toda.clone(), toda], Some(vec![0.5, -0.25])).unwrap();
        let g = f.conjugate();
        let x = [0.2, -0.4];
        let y = f.gradient(&x).unwrap();
        let back = g.gradient(&y).unwrap();
        for a in 0..2 {
            assert!((back[a] - x[a]).abs() < 1e-12);
        }
        let gap = f.value(&x).unwrap() + g.value(&y).unwrap() - (x[0] * y[0] + x[1] * y[1]);
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn third_derivative_is_diagonal() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let e = Energy::Separable(SeparableConvexFunction::uniform(&toda, 2).unwrap());
        let t = e.third_derivative(&[0.0, 0.0]).unwrap();
        assert_eq!(t, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
    }
}
