//! Scalar numerical kernels shared by the rest of the crate.

pub mod diff;
pub mod quadrature;
pub mod roots;

pub use diff::{
    central_difference, fd_step, second_time_derivative, time_derivative, trim_nested, NESTED_TRIM,
};
pub use quadrature::adaptive_simpson;
pub use roots::{solve_increasing, SolverOptions};
