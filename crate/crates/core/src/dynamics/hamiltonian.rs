use crate::convex::Energy;
use crate::error::{HtodaError, Result};

use super::trajectory::Trajectory;

/// `H(q, p) = K(p) + U(q)` with strictly convex `K` and convex `U`.
#[derive(Debug, Clone)]
pub struct SeparableHamiltonian {
    pub kinetic: Energy,
    pub potential: Energy,
}

impl SeparableHamiltonian {
    pub fn new(kinetic: Energy, potential: Energy) -> Result<Self> {
        if kinetic.dim() != potential.dim() {
            return Err(HtodaError::parameter(format!(
                "kinetic energy has dimension {}, potential has {}",
                kinetic.dim(),
                potential.dim()
            )));
        }
        if kinetic.is_vanishing() {
            return Err(HtodaError::parameter("kinetic energy must be strictly convex"));
        }
        Ok(SeparableHamiltonian { kinetic, potential })
    }

    pub fn dim(&self) -> usize {
        self.kinetic.dim()
    }

    pub fn energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        Ok(self.kinetic.value(p)? + self.potential.value(q)?)
    }

    /// `K*` as a function of `p*`.
    pub fn kinetic_conjugate(&self) -> Result<Energy> {
        self.kinetic.conjugate()
    }

    /// `U*` as a function of `q*`; fails for a vanishing potential.
    pub fn potential_conjugate(&self) -> Result<Energy> {
        self.potential.conjugate()
    }
}

fn at_step<T>(k: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        HtodaError::Domain(m) => HtodaError::Domain(format!("step {k}: {m}")),
        other => other,
    })
}

/// Störmer–Verlet (kick–drift–kick) integration of Hamilton's equations
/// `dq/dt = dK/dp`, `dp/dt = -dU/dq`.
///
/// A negative `dt` integrates backwards in time.
pub fn integrate(
    h: &SeparableHamiltonian,
    q0: &[f64],
    p0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    let n = h.dim();
    if q0.len() != n || p0.len() != n {
        return Err(HtodaError::parameter(format!(
            "initial state has dimensions ({}, {}), system has {n}",
            q0.len(),
            p0.len()
        )));
    }
    if !(dt.is_finite() && dt != 0.0) {
        return Err(HtodaError::parameter(format!("time step must be finite and non-zero, got {dt}")));
    }
    let mut q = Vec::with_capacity((steps + 1) * n);
    let mut p = Vec::with_capacity((steps + 1) * n);
    q.extend_from_slice(q0);
    p.extend_from_slice(p0);
    let mut qk = q0.to_vec();
    let mut pk = p0.to_vec();
    let mut force = at_step(0, h.potential.gradient(&qk))?;
    at_step(0, h.kinetic.gradient(&pk))?;
    let half = 0.5 * dt;
    for k in 1..=steps {
        for a in 0..n {
            pk[a] -= half * force[a];
        }
        let v = at_step(k, h.kinetic.gradient(&pk))?;
        for a in 0..n {
            qk[a] += dt * v[a];
        }
        force = at_step(k, h.potential.gradient(&qk))?;
        for a in 0..n {
            pk[a] -= half * force[a];
        }
        if qk.iter().chain(&pk).any(|x| !x.is_finite()) {
            return Err(HtodaError::domain(format!("step {k}: state is no longer finite")));
        }
        q.extend_from_slice(&qk);
        p.extend_from_slice(&pk);
    }
    Ok(Trajectory {
        t0: 0.0,
        dt,
        steps,
        n,
        q,
        p,
    })
}
