//! One-dimensional chains `K = (1/2m) sum (p_{i+1} - p_i)^2`,
//! `U = sum phi(q_i)`, Toda's dual transform and the tau-function check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::convex::{
    check_positive_definite, ConjugatePair, Energy, PotentialKind, QuadraticForm,
    SeparableConvexFunction,
};
use crate::convex::multi::EIGENVALUE_FLOOR;
use crate::dynamics::{default_tolerance, SeparableHamiltonian, TheoremId, Trajectory, VerificationReport};
use crate::error::{HtodaError, Result};
use crate::geometry::spectrum;
use crate::numeric::{time_derivative, trim_nested, NESTED_TRIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// `p_0 = p_{N+1} = 0`.
    #[default]
    Fixed,
    /// `p_{N+1} = p_1`.
    Periodic,
}

#[derive(Debug, Clone)]
pub struct LatticeSpec {
    pub n: usize,
    pub mass: f64,
    pub boundary: Boundary,
    pub phi: ConjugatePair,
}

impl LatticeSpec {
    pub fn new(n: usize, mass: f64, boundary: Boundary, phi: ConjugatePair) -> Result<Self> {
        check_chain(n, mass)?;
        Ok(LatticeSpec { n, mass, boundary, phi })
    }
}

fn check_chain(n: usize, mass: f64) -> Result<()> {
    if n < 2 {
        return Err(HtodaError::parameter(format!("a chain needs at least 2 particles, got {n}")));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(HtodaError::parameter(format!("mass must be positive, got {mass}")));
    }
    Ok(())
}

/// Hessian of the chain kinetic energy and its spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainHessian {
    pub n: usize,
    pub mass: f64,
    pub boundary: Boundary,
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub positive_definite: bool,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

pub fn chain_hessian(n: usize, mass: f64, boundary: Boundary) -> Result<ChainHessian> {
    check_chain(n, mass)?;
    let mut m = DMatrix::zeros(n, n);
    match boundary {
        Boundary::Fixed => {
            for i in 0..n {
                m[(i, i)] = 2.0;
                if i + 1 < n {
                    m[(i, i + 1)] = -1.0;
                    m[(i + 1, i)] = -1.0;
                }
            }
        }
        Boundary::Periodic => {
            // one bond (i, i+1 mod n) per site
            for i in 0..n {
                let j = (i + 1) % n;
                m[(i, i)] += 1.0;
                m[(j, j)] += 1.0;
                m[(i, j)] -= 1.0;
                m[(j, i)] -= 1.0;
            }
        }
    }
    m /= mass;
    let eigenvalues = spectrum(&m);
    let positive_definite = eigenvalues[0] > EIGENVALUE_FLOOR;
    Ok(ChainHessian {
        n,
        mass,
        boundary,
        matrix: m,
        eigenvalues,
        positive_definite,
    })
}

/// Chain Hamiltonian; fails for a chain whose kinetic Hessian is singular.
pub fn build_lattice_hamiltonian(spec: &LatticeSpec) -> Result<SeparableHamiltonian> {
    let ch = chain_hessian(spec.n, spec.mass, spec.boundary)?;
    check_positive_definite(&ch.matrix, &format!("{:?} chain kinetic Hessian", spec.boundary).to_lowercase())?;
    let kinetic = Energy::quadratic(QuadraticForm::pure(ch.matrix)?)?;
    let potential = Energy::Separable(SeparableConvexFunction::uniform(&spec.phi, spec.n)?);
    SeparableHamiltonian::new(kinetic, potential)
}

/// Toda's dual transform `chi(dp/dt) = -m dphi*/dq*` at `q* = -dp/dt`.
pub fn chi(spec: &LatticeSpec, p_dot: f64) -> Result<f64> {
    Ok(-spec.mass * spec.phi.dual.d1(-p_dot)?)
}

/// `p_{a+1} + p_{a-1} - 2 p_a` with the boundary convention of `spec`.
fn stencil(p: &[f64], a: usize, boundary: Boundary) -> f64 {
    let n = p.len();
    let (left, right) = match boundary {
        Boundary::Fixed => (
            if a == 0 { 0.0 } else { p[a - 1] },
            if a + 1 == n { 0.0 } else { p[a + 1] },
        ),
        Boundary::Periodic => (p[(a + n - 1) % n], p[(a + 1) % n]),
    };
    left + right - 2.0 * p[a]
}

fn p_dot(traj: &Trajectory, spec: &LatticeSpec) -> Result<Vec<f64>> {
    if traj.n != spec.n {
        return Err(HtodaError::parameter(format!(
            "trajectory has {} sites, lattice has {}",
            traj.n, spec.n
        )));
    }
    time_derivative(&traj.p, traj.n, traj.dt)
}

/// Dual lattice equation `d/dt chi(dp_a/dt) = p_{a+1} + p_{a-1} - 2 p_a`.
///
/// Returns the report and the residual series (row-major, one column per
/// site, one row per interior sample `2..=steps-2`).
pub fn verify_dual_lattice(traj: &Trajectory, spec: &LatticeSpec) -> Result<(VerificationReport, Vec<f64>)> {
    let pd = p_dot(traj, spec)?;
    let n = spec.n;
    let mut chis = Vec::with_capacity(pd.len());
    for (i, &v) in pd.iter().enumerate() {
        chis.push(chi(spec, v).map_err(|e| {
            HtodaError::domain(format!("sample {}, site {}: {e}", i / n, i % n + 1))
        })?);
    }
    let dchi = time_derivative(&chis, n, traj.dt)?;
    let dchi = trim_nested(&dchi, n)?;
    let mut residuals = Vec::with_capacity(dchi.len());
    for (i, row) in dchi.chunks(n).enumerate() {
        let p = traj.p_at(i + NESTED_TRIM);
        residuals.extend((0..n).map(|a| row[a] - stencil(p, a, spec.boundary)));
    }
    let scale = dchi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let report = VerificationReport::from_residuals(
        TheoremId::TodaDual,
        &residuals,
        default_tolerance(traj.dt, scale),
        format!("{:?} boundary", spec.boundary).to_lowercase(),
    );
    Ok((report, residuals))
}

fn is_unit_toda(spec: &LatticeSpec) -> bool {
    matches!(spec.phi.kind, PotentialKind::Toda { a, b } if a == 1.0 && b == 1.0) && spec.mass == 1.0
}

/// Tau-function check for the Toda chain with `A = B = m = 1`.
///
/// `ln tau_a` is the cumulative trapezoid integral of `p_a` from the first
/// sample (so `tau_a(t0) = 1`), with `tau = 1` beyond fixed ends. The
/// combination `ln(1 + dp_a/dt) - ln(tau_{a+1} tau_{a-1} / tau_a^2)` must be
/// constant in time; residuals are its deviations from the per-site mean.
pub fn tau_diagnostic(traj: &Trajectory, spec: &LatticeSpec) -> Result<VerificationReport> {
    if !is_unit_toda(spec) {
        return Err(HtodaError::hypothesis(
            "the tau-function check needs the Toda potential with A = B = m = 1",
        ));
    }
    let pd = p_dot(traj, spec)?;
    let n = spec.n;
    let samples = traj.samples();
    let mut ln_tau = vec![0.0; samples * n];
    for k in 1..samples {
        for a in 0..n {
            ln_tau[k * n + a] =
                ln_tau[(k - 1) * n + a] + 0.5 * traj.dt * (traj.p_at(k - 1)[a] + traj.p_at(k)[a]);
        }
    }
    let mut combo = vec![0.0; samples * n];
    let mut scale: f64 = 0.0;
    for k in 0..samples {
        let lt = &ln_tau[k * n..(k + 1) * n];
        for a in 0..n {
            let arg = 1.0 + pd[k * n + a];
            if arg <= 0.0 {
                return Err(HtodaError::domain(format!(
                    "sample {k}, site {}: 1 + dp/dt = {arg} is not positive",
                    a + 1
                )));
            }
            let lhs = arg.ln();
            scale = scale.max(lhs.abs());
            combo[k * n + a] = lhs - stencil(lt, a, spec.boundary);
        }
    }
    let mut residuals = vec![0.0; samples * n];
    let mut constants = Vec::with_capacity(n);
    for a in 0..n {
        let mean = (0..samples).map(|k| combo[k * n + a]).sum::<f64>() / samples as f64;
        constants.push(mean);
        for k in 0..samples {
            residuals[k * n + a] = combo[k * n + a] - mean;
        }
    }
    Ok(VerificationReport::from_residuals(
        TheoremId::Tau,
        &residuals,
        default_tolerance(traj.dt, scale),
        format!("per-site constants {constants:?}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{make_power_potential, make_toda_potential};

    #[test]
    fn fixed_spectrum_n3() {
        let ch = chain_hessian(3, 1.0, Boundary::Fixed).unwrap();
        let s2 = 2f64.sqrt();
        for (got, want) in ch.eigenvalues.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(ch.positive_definite);
    }

    #[test]
    fn periodic_n2_and_n3() {
        let ch = chain_hessian(2, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(ch.matrix, DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
        let ch = chain_hessian(3, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(ch.eigenvalues[0], 0.0);
        assert!((ch.eigenvalues[1] - 3.0).abs() < 1e-12 && (ch.eigenvalues[2] - 3.0).abs() < 1e-12);
        assert!(!ch.positive_definite);
    }

    #[test]
    fn periodic_chain_rejected() {
        let spec = LatticeSpec::new(3, 1.0, Boundary::Periodic, make_toda_potential(1.0, 1.0).unwrap()).unwrap();
        let err = build_lattice_hamiltonian(&spec).unwrap_err();
        assert_eq!(err.kind(), "ConvexityError");
        assert!(err.to_string().contains("eigenvalue 0"), "{err}");
    }

    #[test]
    fn chi_values() {
        let spec = LatticeSpec::new(3, 1.0, Boundary::Fixed, make_toda_potential(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(chi(&spec, 0.0).unwrap(), 0.0);
        assert!((chi(&spec, std::f64::consts::E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(chi(&spec, -1.0).unwrap_err().kind(), "DomainError");
        let lin = LatticeSpec::new(3, 1.0, Boundary::Fixed, make_power_potential(1.0).unwrap()).unwrap();
        assert_eq!(chi(&lin, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn lattice_energy_at_rest() {
        let spec = LatticeSpec::new(3, 1.0, Boundary::Fixed, make_toda_potential(1.0, 1.0).unwrap()).unwrap();
        let h = build_lattice_hamiltonian(&spec).unwrap();
        assert_eq!(h.energy(&[0.0; 3], &[0.0; 3]).unwrap(), 3.0);
    }

    #[test]
    fn tau_gating() {
        let lin = LatticeSpec::new(3, 1.0, Boundary::Fixed, make_power_potential(1.0).unwrap()).unwrap();
        let traj = Trajectory { t0: 0.0, dt: 0.1, steps: 3, n: 3, q: vec![0.0; 12], p: vec![0.0; 12] };
        assert_eq!(tau_diagnostic(&traj, &lin).unwrap_err().kind(), "HypothesisError");
    }
}
