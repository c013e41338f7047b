//! Scenario files and potential specifications.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::Value;

use crate::circuit::{make_linear_circuit, make_log_capacitor_circuit, CircuitSpec};
use crate::convex::{
    make_phi_deformed, make_power_potential, make_toda_potential, ConjugatePair, Energy,
    QuadraticForm, SeparableConvexFunction, DEFAULT_QUADRATURE_TOL,
};
use crate::dynamics::{SeparableHamiltonian, TheoremId};
use crate::error::{HtodaError, Result};
use crate::lattice::{Boundary, LatticeSpec};

fn config(msg: impl Into<String>) -> HtodaError {
    HtodaError::Config(msg.into())
}

/// `{kind: toda|power|deformed|quadratic, params: {...}}`; the geometry
/// command also takes `{kind: chain, params: {N, m}, boundary}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub boundary: Boundary,
}

impl PotentialSpec {
    pub fn param(&self, names: &[&str], default: Option<f64>) -> Result<f64> {
        for n in names {
            if let Some(v) = self.params.get(*n) {
                return Ok(*v);
            }
        }
        default.ok_or_else(|| config(format!("{} potential needs parameter '{}'", self.kind, names[0])))
    }

    pub fn build(&self) -> Result<ConjugatePair> {
        match self.kind.as_str() {
            "toda" => make_toda_potential(self.param(&["A", "a"], Some(1.0))?, self.param(&["B", "b"], Some(1.0))?),
            "power" => make_power_potential(self.param(&["beta"], None)?),
            "quadratic" => ConjugatePair::quadratic(self.param(&["stiffness", "k"], Some(1.0))?),
            "deformed" => {
                let e = self.param(&["exponent"], Some(1.0))?;
                if !(e > 0.0 && e.is_finite()) {
                    return Err(HtodaError::Monotonicity(format!(
                        "phi(z) = z^{e} is not increasing"
                    )));
                }
                let tol = self.param(&["quadrature_tol"], Some(DEFAULT_QUADRATURE_TOL))?;
                make_phi_deformed(move |z: f64| z.powf(e), tol)
            }
            other => Err(config(format!(
                "unknown potential kind '{other}' (expected toda, power, deformed or quadratic)"
            ))),
        }
    }

    /// Inline JSON or a path to a JSON file.
    pub fn parse(arg: &str) -> Result<Self> {
        let text = if arg.trim_start().starts_with('{') {
            arg.to_string()
        } else {
            std::fs::read_to_string(arg).map_err(|e| config(format!("cannot read potential spec {arg}: {e}")))?
        };
        serde_json::from_str(&text).map_err(|e| config(format!("invalid potential spec: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Hamiltonian,
    Lattice,
    Circuit,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Replaces the kinetic Hessian used by the dual-transform check.
    pub h_k: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub trajectory: Option<String>,
    pub reports: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub system: Value,
    pub initial: Value,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub verifications: Vec<TheoremId>,
    #[serde(default)]
    pub tolerances: BTreeMap<TheoremId, f64>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum EnergySpec {
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
    Separable {
        potential: PotentialSpec,
        n: usize,
    },
    Vanishing {
        n: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianSystem {
    kinetic: EnergySpec,
    potential: EnergySpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeSystem {
    #[serde(rename = "N")]
    n: usize,
    m: f64,
    #[serde(default)]
    boundary: Boundary,
    potential: PotentialSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearCircuit {
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "C0")]
    c0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitSystem {
    #[serde(rename = "L")]
    l: Option<f64>,
    #[serde(rename = "Q0")]
    q0: Option<f64>,
    #[serde(rename = "V0")]
    v0: Option<f64>,
    quadratic: Option<LinearCircuit>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseInitial {
    q: Vec<f64>,
    p: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitInitial {
    #[serde(rename = "Q")]
    charge: f64,
    #[serde(rename = "Phi")]
    flux: f64,
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(config("matrix must be a non-empty square array of rows"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_energy(spec: &EnergySpec) -> Result<Energy> {
    match spec {
        EnergySpec::Quadratic { matrix, linear, constant } => {
            let m = matrix_from_rows(matrix)?;
            let n = m.nrows();
            let c = linear.clone().unwrap_or_else(|| vec![0.0; n]);
            Energy::quadratic(QuadraticForm::new(m, DVector::from_vec(c), *constant)?)
        }
        EnergySpec::Separable { potential, n } => Ok(Energy::Separable(SeparableConvexFunction::uniform(
            &potential.build()?,
            *n,
        )?)),
        EnergySpec::Vanishing { n } => Ok(Energy::Vanishing(*n)),
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| config(format!("invalid {what}: {e}")))
}

/// A scenario with its system constructed.
#[derive(Debug, Clone)]
pub enum System {
    Hamiltonian(SeparableHamiltonian),
    Lattice(LatticeSpec, SeparableHamiltonian),
    Circuit(CircuitSpec, SeparableHamiltonian),
}

impl System {
    pub fn hamiltonian(&self) -> &SeparableHamiltonian {
        match self {
            System::Hamiltonian(h) | System::Lattice(_, h) | System::Circuit(_, h) => h,
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read scenario {}: {e}", path.display())))?;
        let s: Scenario =
            serde_json::from_str(&text).map_err(|e| config(format!("invalid scenario {}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps < 2 {
            return Err(config(format!("steps must be at least 2, got {}", self.steps)));
        }
        for id in &self.verifications {
            if !self.allows(*id) {
                return Err(config(format!("verification '{id}' is not available for {:?} scenarios", self.kind)));
            }
        }
        Ok(())
    }

    fn allows(&self, id: TheoremId) -> bool {
        use TheoremId::*;
        match self.kind {
            ScenarioKind::Hamiltonian => matches!(
                id,
                DualFirstOrder | DualTransform | HessianForm | AlphaMinusOne | QuadraticDuality | VanishingPotential | TotalLegendre
            ),
            ScenarioKind::Lattice => !matches!(id, CircuitDualTransform | CircuitHessianForm),
            ScenarioKind::Circuit => matches!(id, CircuitDualTransform | CircuitHessianForm | DualFirstOrder),
        }
    }

    /// Changes the step size while keeping the total simulated time.
    pub fn override_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config(format!("--dt-override must be positive, got {dt}")));
        }
        let total = self.dt * self.steps as f64;
        self.steps = (total / dt).round() as usize;
        self.dt = dt;
        self.validate()
    }

    pub fn build(&self) -> Result<System> {
        match self.kind {
            ScenarioKind::Hamiltonian => {
                let sys: HamiltonianSystem = from_value(&self.system, "hamiltonian system")?;
                let h = SeparableHamiltonian::new(build_energy(&sys.kinetic)?, build_energy(&sys.potential)?)?;
                Ok(System::Hamiltonian(h))
            }
            ScenarioKind::Lattice => {
                let sys: LatticeSystem = from_value(&self.system, "lattice system")?;
                let spec = LatticeSpec::new(sys.n, sys.m, sys.boundary, sys.potential.build()?)?;
                let h = crate::lattice::build_lattice_hamiltonian(&spec)?;
                Ok(System::Lattice(spec, h))
            }
            ScenarioKind::Circuit => {
                let sys: CircuitSystem = from_value(&self.system, "circuit system")?;
                let spec = match (&sys.quadratic, sys.l, sys.q0, sys.v0) {
                    (Some(lin), None, None, None) => make_linear_circuit(lin.l, lin.c0)?,
                    (None, Some(l), Some(q0), Some(v0)) => make_log_capacitor_circuit(l, q0, v0)?,
                    _ => {
                        return Err(config(
                            "circuit system needs either {L, Q0, V0} or {quadratic: {L, C0}}",
                        ))
                    }
                };
                let h = spec.hamiltonian()?;
                Ok(System::Circuit(spec, h))
            }
        }
    }

    /// Initial `(q, p)`; for circuits `(Q, Phi)`.
    pub fn initial_state(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.kind {
            ScenarioKind::Circuit => {
                let init: CircuitInitial = from_value(&self.initial, "circuit initial state")?;
                Ok((vec![init.charge], vec![init.flux]))
            }
            _ => {
                let init: PhaseInitial = from_value(&self.initial, "initial state")?;
                Ok((init.q, init.p))
            }
        }
    }
}
