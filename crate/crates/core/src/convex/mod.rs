//! Strictly convex energies and their Legendre transforms.

pub mod conjugate;
pub mod deformed;
pub mod multi;
pub mod pair;
pub mod potentials;
pub mod scalar;

pub use conjugate::{conjugate_numeric, conjugate_numeric_with, NumericConjugate};
pub use deformed::{make_phi_deformed, GeneralizedLog, DEFAULT_QUADRATURE_TOL};
pub use multi::{
    check_positive_definite, symmetric_eigenvalues, Energy, QuadraticForm,
    SeparableConvexFunction,
};
pub use pair::{bregman_divergence, dual_coordinate, ConjugatePair, ConjugationMode, PotentialKind};
pub use potentials::{conjugate_exponent, make_power_potential, make_toda_potential};
pub use scalar::{ConvexScalarFunction, Domain, QuadraticScalar, ScalarEnergy, BOUNDARY_MARGIN};
