//! C interface to `htoda`.
//!
//! Every function returns an [`HtodaStatus`]; on failure the message is kept
//! per thread and can be read with [`htoda_last_error`]. Objects are opaque
//! handles released with their matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use htoda::cli::{verify_scenario, PotentialSpec, Scenario};
use htoda::convex::{bregman_divergence, make_power_potential, make_toda_potential, ConjugatePair};
use htoda::dynamics::{integrate, SeparableHamiltonian, Trajectory, VerificationReport};
use htoda::lattice::{build_lattice_hamiltonian, chain_hessian, tau_diagnostic, verify_dual_lattice, Boundary, LatticeSpec};
use htoda::HtodaError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtodaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    BufferTooSmall = 3,
    Panic = 4,
    Domain = 10,
    Convergence = 11,
    Parameter = 12,
    Monotonicity = 13,
    Quadrature = 14,
    Convexity = 15,
    Hypothesis = 16,
    Grid = 17,
    Config = 18,
    Io = 19,
}

impl From<&HtodaError> for HtodaStatus {
    fn from(e: &HtodaError) -> Self {
        match e {
            HtodaError::Domain(_) => HtodaStatus::Domain,
            HtodaError::Convergence(_) => HtodaStatus::Convergence,
            HtodaError::Parameter(_) => HtodaStatus::Parameter,
            HtodaError::Monotonicity(_) => HtodaStatus::Monotonicity,
            HtodaError::Quadrature(_) => HtodaStatus::Quadrature,
            HtodaError::Convexity { .. } => HtodaStatus::Convexity,
            HtodaError::Hypothesis(_) => HtodaStatus::Hypothesis,
            HtodaError::Grid(_) => HtodaStatus::Grid,
            HtodaError::Config(_) => HtodaStatus::Config,
            HtodaError::Io(_) => HtodaStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtodaSide {
    Primal = 0,
    Dual = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtodaBoundary {
    Fixed = 0,
    Periodic = 1,
}

impl From<HtodaBoundary> for Boundary {
    fn from(b: HtodaBoundary) -> Self {
        match b {
            HtodaBoundary::Fixed => Boundary::Fixed,
            HtodaBoundary::Periodic => Boundary::Periodic,
        }
    }
}

/// Summary of one residual check.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HtodaReport {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<&VerificationReport> for HtodaReport {
    fn from(r: &VerificationReport) -> Self {
        HtodaReport {
            max_residual: r.max_residual,
            mean_residual: r.mean_residual,
            tolerance: r.tolerance,
            passed: r.passed,
        }
    }
}

/// A convex scalar function paired with its Legendre transform.
pub struct HtodaPotential(ConjugatePair);

/// A chain `K = (1/2m) sum (p_{i+1} - p_i)^2`, `U = sum phi(q_i)`.
pub struct HtodaLattice {
    spec: LatticeSpec,
    hamiltonian: SeparableHamiltonian,
}

/// Sampled phase-space path from the integrator.
pub struct HtodaTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Status(HtodaStatus, String),
    Lib(HtodaError),
}

impl From<HtodaError> for Failure {
    fn from(e: HtodaError) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(HtodaStatus::NullPointer, format!("{what} is null"))
}

fn guard<F>(f: F) -> HtodaStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HtodaStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(format!("{}: {e}", e.kind()));
            HtodaStatus::from(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HtodaStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(HtodaStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn htoda_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn htoda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn htoda_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `phi(z) = (A/B) e^{-Bz} + A z`.
#[no_mangle]
pub unsafe extern "C" fn htoda_potential_toda(a: f64, b: f64, out: *mut *mut HtodaPotential) -> HtodaStatus {
    guard(|| {
        let pair = make_toda_potential(a, b)?;
        write(out, boxed(HtodaPotential(pair)), "out")
    })
}

/// `|z|^beta / beta`.
#[no_mangle]
pub unsafe extern "C" fn htoda_potential_power(beta: f64, out: *mut *mut HtodaPotential) -> HtodaStatus {
    guard(|| {
        let pair = make_power_potential(beta)?;
        write(out, boxed(HtodaPotential(pair)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn htoda_potential_quadratic(stiffness: f64, out: *mut *mut HtodaPotential) -> HtodaStatus {
    guard(|| {
        let pair = ConjugatePair::quadratic(stiffness)?;
        write(out, boxed(HtodaPotential(pair)), "out")
    })
}

/// Builds a potential from the JSON accepted by the command line, e.g.
/// `{"kind":"deformed","params":{"exponent":2}}`.
#[no_mangle]
pub unsafe extern "C" fn htoda_potential_from_json(json: *const c_char, out: *mut *mut HtodaPotential) -> HtodaStatus {
    guard(|| {
        let text = string(json, "json")?;
        let spec: PotentialSpec = serde_json::from_str(text)
            .map_err(|e| Failure::Lib(HtodaError::Config(format!("invalid potential: {e}"))))?;
        let pair = spec.build()?;
        write(out, boxed(HtodaPotential(pair)), "out")
    })
}

/// New handle with primal and dual exchanged.
#[no_mangle]
pub unsafe extern "C" fn htoda_potential_flipped(
    pot: *const HtodaPotential,
    out: *mut *mut HtodaPotential,
) -> HtodaStatus {
    guard(|| {
        let pot = borrow(pot, "potential")?;
        write(out, boxed(HtodaPotential(pot.0.flipped())), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn htoda_potential_free(pot: *mut HtodaPotential) {
    if !pot.is_null() {
        drop(Box::from_raw(pot));
    }
}

/// Value (`order` 0) or derivative of order 1 to 3 of one side of the pair.
#[no_mangle]
pub unsafe extern "C" fn htoda_potential_eval(
    pot: *const HtodaPotential,
    side: HtodaSide,
    order: u32,
    x: f64,
    out: *mut f64,
) -> HtodaStatus {
    guard(|| {
        let pot = borrow(pot, "potential")?;
        let f = match side {
            HtodaSide::Primal => &pot.0.primal,
            HtodaSide::Dual => &pot.0.dual,
        };
        let v = match order {
            0 => f.value(x)?,
            1 => f.d1(x)?,
            2 => f.d2(x)?,
            3 => f.d3(x)?,
            _ => return Err(HtodaError::Parameter(format!("derivative order must be 0..=3, got {order}")).into()),
        };
        write(out, v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn htoda_potential_bregman(
    pot: *const HtodaPotential,
    x: f64,
    x_prime: f64,
    out: *mut f64,
) -> HtodaStatus {
    guard(|| {
        let pot = borrow(pot, "potential")?;
        write(out, bregman_divergence(&pot.0, x, x_prime)?, "out")
    })
}

/// Eigenvalues of the chain kinetic Hessian in ascending order. `out` must
/// hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn htoda_chain_spectrum(
    n: usize,
    mass: f64,
    boundary: HtodaBoundary,
    out: *mut f64,
    out_len: usize,
) -> HtodaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let h = chain_hessian(n, mass, boundary.into())?;
        if out_len < h.eigenvalues.len() {
            return Err(Failure::Status(
                HtodaStatus::BufferTooSmall,
                format!("buffer holds {out_len} values, need {}", h.eigenvalues.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, h.eigenvalues.len()).copy_from_slice(&h.eigenvalues);
        Ok(())
    })
}

/// The potential is copied; the handle may be freed afterwards.
#[no_mangle]
pub unsafe extern "C" fn htoda_lattice_new(
    n: usize,
    mass: f64,
    boundary: HtodaBoundary,
    pot: *const HtodaPotential,
    out: *mut *mut HtodaLattice,
) -> HtodaStatus {
    guard(|| {
        let pot = borrow(pot, "potential")?;
        let spec = LatticeSpec::new(n, mass, boundary.into(), pot.0.clone())?;
        let hamiltonian = build_lattice_hamiltonian(&spec)?;
        write(out, boxed(HtodaLattice { spec, hamiltonian }), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn htoda_lattice_free(lat: *mut HtodaLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

#[no_mangle]
pub unsafe extern "C" fn htoda_lattice_energy(
    lat: *const HtodaLattice,
    q: *const f64,
    p: *const f64,
    out: *mut f64,
) -> HtodaStatus {
    guard(|| {
        let lat = borrow(lat, "lattice")?;
        let n = lat.spec.n;
        let e = lat.hamiltonian.energy(slice(q, n, "q")?, slice(p, n, "p")?)?;
        write(out, e, "out")
    })
}

/// Integrates from `(q0, p0)`, each of length `n`, for `steps` steps.
#[no_mangle]
pub unsafe extern "C" fn htoda_lattice_integrate(
    lat: *const HtodaLattice,
    q0: *const f64,
    p0: *const f64,
    dt: f64,
    steps: usize,
    out: *mut *mut HtodaTrajectory,
) -> HtodaStatus {
    guard(|| {
        let lat = borrow(lat, "lattice")?;
        let n = lat.spec.n;
        let traj = integrate(&lat.hamiltonian, slice(q0, n, "q0")?, slice(p0, n, "p0")?, dt, steps)?;
        write(out, boxed(HtodaTrajectory(traj)), "out")
    })
}

/// Residuals of the dual lattice equations along `traj`.
#[no_mangle]
pub unsafe extern "C" fn htoda_lattice_verify_dual(
    lat: *const HtodaLattice,
    traj: *const HtodaTrajectory,
    out: *mut HtodaReport,
) -> HtodaStatus {
    guard(|| {
        let lat = borrow(lat, "lattice")?;
        let traj = borrow(traj, "trajectory")?;
        let (report, _) = verify_dual_lattice(&traj.0, &lat.spec)?;
        write(out, HtodaReport::from(&report), "out")
    })
}

/// Tau-function check; needs the unit Toda potential with unit mass.
#[no_mangle]
pub unsafe extern "C" fn htoda_lattice_verify_tau(
    lat: *const HtodaLattice,
    traj: *const HtodaTrajectory,
    out: *mut HtodaReport,
) -> HtodaStatus {
    guard(|| {
        let lat = borrow(lat, "lattice")?;
        let traj = borrow(traj, "trajectory")?;
        let report = tau_diagnostic(&traj.0, &lat.spec)?;
        write(out, HtodaReport::from(&report), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn htoda_trajectory_free(traj: *mut HtodaTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored samples, `steps + 1`. Zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn htoda_trajectory_samples(traj: *const HtodaTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.samples())
}

/// Degrees of freedom. Zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn htoda_trajectory_dim(traj: *const HtodaTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.n)
}

/// Copies `q` and `p` at sample `k` into buffers of length `dim`. Either
/// buffer may be null.
#[no_mangle]
pub unsafe extern "C" fn htoda_trajectory_state(
    traj: *const HtodaTrajectory,
    k: usize,
    q: *mut f64,
    p: *mut f64,
) -> HtodaStatus {
    guard(|| {
        let traj = &borrow(traj, "trajectory")?.0;
        if k >= traj.samples() {
            return Err(HtodaError::Parameter(format!("sample {k} out of range 0..{}", traj.samples())).into());
        }
        let n = traj.n;
        if !q.is_null() {
            std::slice::from_raw_parts_mut(q, n).copy_from_slice(traj.q_at(k));
        }
        if !p.is_null() {
            std::slice::from_raw_parts_mut(p, n).copy_from_slice(traj.p_at(k));
        }
        Ok(())
    })
}

/// Loads a scenario file, runs its verifications and returns the reports as
/// a JSON array in `*out_json` (release with [`htoda_string_free`]).
/// `*all_passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn htoda_verify_scenario(
    path: *const c_char,
    out_json: *mut *mut c_char,
    all_passed: *mut bool,
) -> HtodaStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let path = string(path, "path")?;
        let scenario = Scenario::load(Path::new(path))?;
        let reports = verify_scenario(&scenario, None)?;
        let json = serde_json::to_string(&reports).expect("reports serialize");
        if !all_passed.is_null() {
            all_passed.write(reports.iter().all(|r| r.passed));
        }
        out_json.write(CString::new(json).expect("json has no NUL").into_raw());
        Ok(())
    })
}
