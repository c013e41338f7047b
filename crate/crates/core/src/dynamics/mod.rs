//! Separable Hamiltonians `H = K(p) + U(q)`: integration, trajectories and
//! residual checks of the dual-coordinate equations of motion.

mod hamiltonian;
mod report;
mod trajectory;
mod verify;

pub use hamiltonian::{integrate, SeparableHamiltonian};
pub use report::{default_tolerance, TheoremId, VerificationReport, DEFAULT_TOLERANCE_FACTOR};
pub use trajectory::Trajectory;
pub use verify::{
    alpha_form_residuals, energy_drift, j_function, verify_alpha_form, verify_alpha_forms, verify_dual_first_order,
    dual_transform_residuals, verify_dual_transform, verify_hessian_form, verify_j_function, verify_vanishing_potential, HessianFormVariant, J_GRADIENT_TOL,
};
