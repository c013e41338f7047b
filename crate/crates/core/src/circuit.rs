//! Series LC circuits as natural Hamiltonian systems.
//!
//! The flux `Phi` plays the momentum and the charge `Q` the position:
//! `H(Q, Phi) = E_C(Q) + E_L(Phi)`, so that `dQ/dt = I` and
//! `dPhi/dt = -V`. Dual coordinates are the voltage `V = dE_C/dQ` and the
//! current `I = dE_L/dPhi`.

use std::io::Write;

use crate::convex::{
    ConjugatePair, ConvexScalarFunction, Domain, Energy, PotentialKind, ScalarEnergy,
    SeparableConvexFunction,
};
use crate::dynamics::{
    dual_transform_residuals, default_tolerance, integrate, SeparableHamiltonian, TheoremId,
    Trajectory, VerificationReport,
};
use crate::error::{HtodaError, Result};
use crate::numeric::{second_time_derivative, time_derivative, NESTED_TRIM};

/// `Q0 V0 [(1 + V/V0) ln(1 + V/V0) - V/V0]` on `V > -V0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCoEnergy {
    pub q0: f64,
    pub v0: f64,
}

impl ScalarEnergy for LogCoEnergy {
    fn domain(&self) -> Domain {
        Domain::open(-self.v0, f64::INFINITY)
    }
    fn gradient_image(&self) -> Domain {
        Domain::REAL_LINE
    }
    fn value(&self, v: f64) -> Result<f64> {
        let x = v / self.v0;
        Ok(self.q0 * self.v0 * ((1.0 + x) * x.ln_1p() - x))
    }
    fn d1(&self, v: f64) -> Result<f64> {
        Ok(self.q0 * (v / self.v0).ln_1p())
    }
    fn d2(&self, v: f64) -> Result<f64> {
        Ok(self.q0 / (v + self.v0))
    }
    fn d3(&self, v: f64) -> Result<f64> {
        let r = v + self.v0;
        Ok(-self.q0 / (r * r))
    }
}

/// `V0 (Q0 e^{Q/Q0} - Q - Q0)`, the capacitor energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpEnergy {
    pub q0: f64,
    pub v0: f64,
}

impl ScalarEnergy for ExpEnergy {
    fn domain(&self) -> Domain {
        Domain::REAL_LINE
    }
    fn gradient_image(&self) -> Domain {
        Domain::open(-self.v0, f64::INFINITY)
    }
    fn value(&self, q: f64) -> Result<f64> {
        let u = q / self.q0;
        Ok(self.v0 * self.q0 * (u.exp_m1() - u))
    }
    fn d1(&self, q: f64) -> Result<f64> {
        Ok(self.v0 * (q / self.q0).exp_m1())
    }
    fn d2(&self, q: f64) -> Result<f64> {
        Ok(self.v0 / self.q0 * (q / self.q0).exp())
    }
    fn d3(&self, q: f64) -> Result<f64> {
        Ok(self.v0 / (self.q0 * self.q0) * (q / self.q0).exp())
    }
}

/// Co-energies of the inductor (in `I`) and capacitor (in `V`), each paired
/// with the corresponding energy (in `Phi` and `Q`).
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub el_star: ConjugatePair,
    pub ec_star: ConjugatePair,
}

/// A sample of the circuit state with its constitutive efforts and flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitState {
    pub charge: f64,
    pub flux: f64,
    pub voltage: f64,
    pub current: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HtodaError::parameter(format!("{name} must be positive, got {v}")))
    }
}

/// Linear inductor and the logarithmic capacitor `Q(V) = Q0 ln(1 + V/V0)`.
pub fn make_log_capacitor_circuit(l: f64, q0: f64, v0: f64) -> Result<CircuitSpec> {
    positive("L", l)?;
    positive("Q0", q0)?;
    positive("V0", v0)?;
    let ec_star = ConjugatePair::analytic(
        ConvexScalarFunction::new(format!("log co-energy(Q0={q0},V0={v0})"), LogCoEnergy { q0, v0 }),
        ConvexScalarFunction::new(format!("exp energy(Q0={q0},V0={v0})"), ExpEnergy { q0, v0 }),
        PotentialKind::LogCapacitor { q0, v0 },
    );
    Ok(CircuitSpec {
        el_star: ConjugatePair::quadratic(l)?,
        ec_star,
    })
}

/// Linear inductor and linear capacitor.
pub fn make_linear_circuit(l: f64, c0: f64) -> Result<CircuitSpec> {
    positive("L", l)?;
    positive("C0", c0)?;
    Ok(CircuitSpec {
        el_star: ConjugatePair::quadratic(l)?,
        ec_star: ConjugatePair::quadratic(c0)?,
    })
}

impl CircuitSpec {
    /// `H(Q, Phi) = E_C(Q) + E_L(Phi)` with `Phi` as momentum.
    pub fn hamiltonian(&self) -> Result<SeparableHamiltonian> {
        let kinetic = Energy::Separable(SeparableConvexFunction::new(vec![self.el_star.flipped()], None)?);
        let potential = Energy::Separable(SeparableConvexFunction::new(vec![self.ec_star.flipped()], None)?);
        SeparableHamiltonian::new(kinetic, potential)
    }

    pub fn state(&self, charge: f64, flux: f64) -> Result<CircuitState> {
        Ok(CircuitState {
            charge,
            flux,
            voltage: self.ec_star.dual.d1(charge)?,
            current: self.el_star.dual.d1(flux)?,
        })
    }

    pub fn energy(&self, charge: f64, flux: f64) -> Result<f64> {
        Ok(self.ec_star.dual.value(charge)? + self.el_star.dual.value(flux)?)
    }
}

pub fn simulate_lc(spec: &CircuitSpec, charge0: f64, flux0: f64, dt: f64, steps: usize) -> Result<Trajectory> {
    integrate(&spec.hamiltonian()?, &[charge0], &[flux0], dt, steps)
}

fn check_single(traj: &Trajectory) -> Result<()> {
    if traj.n != 1 {
        return Err(HtodaError::parameter(format!(
            "a series LC trajectory has one degree of freedom, got {}",
            traj.n
        )));
    }
    Ok(())
}

/// `d/dt [dE*_C/dV at V = -dPhi/dt] = (d^2E_L/dPhi^2) Phi + const` for a
/// linear inductor; the constant is matched at the first checked sample.
pub fn verify_lc_thm_3_1(traj: &Trajectory, spec: &CircuitSpec) -> Result<VerificationReport> {
    check_single(traj)?;
    if !spec.el_star.is_quadratic() {
        return Err(HtodaError::hypothesis("the inductor energy must be quadratic"));
    }
    let h = spec.hamiltonian()?;
    let hk = h
        .kinetic
        .as_quadratic_form()
        .ok_or_else(|| HtodaError::hypothesis("the inductor energy must be quadratic"))?;
    let (res, scale) = dual_transform_residuals(traj, &h, &hk)?;
    Ok(VerificationReport::from_residuals(
        TheoremId::CircuitDualTransform,
        &res,
        default_tolerance(traj.dt, scale),
        format!("integration constant matched at t = {}", traj.time(NESTED_TRIM)),
    ))
}

/// `C*(V) V'^2 + h*_C(V) V'' = -h_L V` with `h*_C`, `C*` the second and third
/// derivatives of the capacitor co-energy and `h_L = d^2E_L/dPhi^2`.
pub fn verify_lc_thm_3_2(traj: &Trajectory, spec: &CircuitSpec) -> Result<VerificationReport> {
    check_single(traj)?;
    let volts: Vec<f64> = traj
        .q
        .iter()
        .map(|&q| spec.ec_star.dual.d1(q))
        .collect::<Result<_>>()?;
    let v1 = time_derivative(&volts, 1, traj.dt)?;
    let v2 = second_time_derivative(&volts, 1, traj.dt)?;
    let mut residuals = Vec::with_capacity(volts.len());
    let mut scale: f64 = 0.0;
    for k in 0..traj.samples() {
        let v = volts[k];
        let hc = spec.ec_star.primal.d2(v)?;
        let cc = spec.ec_star.primal.d3(v)?;
        let hl = spec.el_star.dual.d2(traj.p[k])?;
        let lhs = cc * v1[k] * v1[k] + hc * v2[k];
        scale = scale.max(lhs.abs());
        residuals.push(lhs + hl * v);
    }
    Ok(VerificationReport::from_residuals(
        TheoremId::CircuitHessianForm,
        &residuals,
        default_tolerance(traj.dt, scale),
        "",
    ))
}

/// Mean spacing of upward zero crossings of the first position component,
/// located by linear interpolation.
pub fn measure_period(traj: &Trajectory) -> Result<f64> {
    let n = traj.n;
    let mut crossings = Vec::new();
    for k in 1..traj.samples() {
        let a = traj.q[(k - 1) * n];
        let b = traj.q[k * n];
        if a < 0.0 && b >= 0.0 {
            let frac = -a / (b - a);
            crossings.push(traj.time(k - 1) + frac * traj.dt);
        }
    }
    if crossings.len() < 2 {
        return Err(HtodaError::Grid(format!(
            "need two upward zero crossings to measure a period, found {}",
            crossings.len()
        )));
    }
    Ok((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Writes `t, Q, Phi, V, I, energy` with 17 significant digits.
pub fn write_circuit_csv<W: Write>(traj: &Trajectory, spec: &CircuitSpec, mut w: W) -> Result<()> {
    check_single(traj)?;
    writeln!(w, "t,Q,Phi,V,I,energy")?;
    for k in 0..traj.samples() {
        let s = spec.state(traj.q[k], traj.p[k])?;
        let e = spec.energy(s.charge, s.flux)?;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.time(k),
            s.charge,
            s.flux,
            s.voltage,
            s.current,
            e
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_capacitor_closed_forms() {
        let c = make_log_capacitor_circuit(1.0, 1.0, 1.0).unwrap();
        assert_eq!(c.ec_star.dual.value(0.0).unwrap(), 0.0);
        assert!((c.ec_star.primal.d1(std::f64::consts::E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        // small-signal capacitance Q0/V0
        assert_eq!(c.ec_star.primal.d2(0.0).unwrap(), 1.0);
        assert_eq!(c.ec_star.primal.d1(0.0).unwrap(), 0.0);
        assert_eq!(c.ec_star.dual.d1(0.0).unwrap(), 0.0);
        assert_eq!(c.ec_star.primal.value(-1.0).unwrap_err().kind(), "DomainError");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(make_log_capacitor_circuit(0.0, 1.0, 1.0).unwrap_err().kind(), "ParameterError");
        assert_eq!(make_linear_circuit(1.0, -1.0).unwrap_err().kind(), "ParameterError");
    }

    #[test]
    fn state_uses_constitutive_relations() {
        let c = make_linear_circuit(2.0, 0.5).unwrap();
        let s = c.state(1.0, 1.0).unwrap();
        assert_eq!(s.voltage, 2.0);
        assert_eq!(s.current, 0.5);
    }

    #[test]
    fn equilibrium_is_constant() {
        let c = make_log_capacitor_circuit(1.0, 1.0, 1.0).unwrap();
        let t = simulate_lc(&c, 0.0, 0.0, 1e-2, 100).unwrap();
        assert!(t.q.iter().chain(&t.p).all(|&v| v == 0.0));
    }
}
