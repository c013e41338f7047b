//! Hessian-geometric tools for natural Hamiltonian systems `H = K(p) + U(q)`.
//!
//! The crate provides Legendre conjugation of strictly convex energies,
//! dual coordinates, Hessian metrics, cubic forms and alpha-connections,
//! a Störmer–Verlet integrator, and residual checks of the dual-transformed
//! equations of motion for chains (Toda and friends) and LC circuits.

pub mod circuit;
pub mod cli;
pub mod convex;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod numeric;

pub use error::{HtodaError, Result};
