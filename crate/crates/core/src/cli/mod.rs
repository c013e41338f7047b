//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 configuration or
//! parameter problem, 3 numerical error (domain, convexity, convergence,
//! monotonicity, quadrature).

mod scenario;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info};
use nalgebra::DVector;

use crate::circuit::{verify_lc_thm_3_1, verify_lc_thm_3_2, write_circuit_csv, CircuitSpec};
use crate::convex::{ConjugatePair, Energy, QuadraticForm, SeparableConvexFunction};
use crate::dynamics::{
    dual_transform_residuals, default_tolerance, integrate, verify_alpha_form, verify_alpha_forms,
    verify_dual_first_order, verify_dual_transform, verify_hessian_form, verify_j_function,
    verify_vanishing_potential, HessianFormVariant, SeparableHamiltonian, TheoremId, Trajectory,
    VerificationReport,
};
use crate::error::{HtodaError, Result};
use crate::geometry::{geometry_report, CoordinateTag, EnergyTag};
use crate::lattice::{chain_hessian, tau_diagnostic, verify_dual_lattice, Boundary};
use crate::numeric::NESTED_TRIM;

pub use scenario::{matrix_from_rows, PotentialSpec, Scenario, ScenarioKind, System};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Points sampled by the `j_function` gradient check.
const J_SAMPLES: usize = 50;

#[derive(Debug, Parser)]
#[command(name = "htoda", version, about = "Hessian-geometric checks of natural Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Coords {
    Primal,
    Dual,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt_override: Option<f64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the verifications listed in a scenario.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Check a previously written trajectory instead of integrating.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt_override: Option<f64>,
        #[arg(long)]
        tolerance_override: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Tabulate a potential and its conjugate on a grid `lo:hi:n`.
    Conjugate {
        /// Inline JSON or a path to a JSON file.
        #[arg(long)]
        potential: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Use the numerical Legendre transform instead of the closed form.
        #[arg(long)]
        numeric: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Metric, cubic form and alpha-connections at a point.
    Geometry {
        #[arg(long)]
        potential: String,
        /// Comma-separated coordinates; one value per site.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long, allow_hyphen_values = true, default_value = "-1,0,1")]
        alphas: String,
        #[arg(long, value_enum, default_value = "dual")]
        coords: Coords,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum of the chain kinetic Hessian.
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, value_enum, default_value = "fixed")]
        boundary: BoundaryArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Fixed,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Fixed => Boundary::Fixed,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &HtodaError) -> i32 {
    match e {
        HtodaError::Config(_)
        | HtodaError::Parameter(_)
        | HtodaError::Hypothesis(_)
        | HtodaError::Grid(_)
        | HtodaError::Io(_) => EXIT_CONFIG,
        HtodaError::Domain(_)
        | HtodaError::Convexity { .. }
        | HtodaError::Convergence(_)
        | HtodaError::Monotonicity(_)
        | HtodaError::Quadrature(_) => EXIT_NUMERIC,
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("HTODA_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("htoda: {}: {e}", e.kind());
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate { scenario, out, dt_override, format } => {
            cmd_simulate(&scenario, out.as_deref(), dt_override, format)
        }
        Command::Verify { scenario, trajectory, out, dt_override, tolerance_override, format } => cmd_verify(
            &scenario,
            trajectory.as_deref(),
            out.as_deref(),
            dt_override,
            tolerance_override,
            format,
        ),
        Command::Conjugate { potential, grid, numeric, out, format } => {
            cmd_conjugate(&potential, &grid, numeric, out.as_deref(), format)
        }
        Command::Geometry { potential, point, alphas, coords, out } => {
            cmd_geometry(&potential, point.as_deref(), &alphas, coords, out.as_deref())
        }
        Command::Spectrum { n, mass, boundary, out, format } => {
            cmd_spectrum(n, mass, boundary.into(), out.as_deref(), format)
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| HtodaError::Config(format!("invalid output path {}", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| HtodaError::Io(format!("{}: {e}", path.display())))
}

/// Destination of an output: an explicit name inside `--out` (or the
/// working directory), the default name inside `--out`, or stdout.
fn destination(out: Option<&Path>, named: Option<&str>, default_name: &str) -> Option<PathBuf> {
    match (out, named) {
        (Some(dir), Some(n)) => Some(dir.join(n)),
        (None, Some(n)) => Some(PathBuf::from(n)),
        (Some(dir), None) => Some(dir.join(default_name)),
        (None, None) => None,
    }
}

fn emit(dest: Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    let mut owned;
    let mut bytes = bytes;
    if !bytes.ends_with(b"\n") {
        owned = bytes.to_vec();
        owned.push(b'\n');
        bytes = &owned;
    }
    match dest {
        Some(path) => {
            write_atomic(&path, bytes)?;
            info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_scenario(path: &Path, dt_override: Option<f64>) -> Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Some(dt) = dt_override {
        s.override_dt(dt)?;
        debug!("dt overridden to {dt}, {} steps", s.steps);
    }
    Ok(s)
}

fn simulate(s: &Scenario, system: &System) -> Result<Trajectory> {
    let (q0, p0) = s.initial_state()?;
    integrate(system.hamiltonian(), &q0, &p0, s.dt, s.steps)
}

fn trajectory_json(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<Vec<u8>> {
    let n = traj.n;
    let rows = |v: &[f64]| v.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let value = serde_json::json!({
        "t0": traj.t0,
        "dt": traj.dt,
        "steps": traj.steps,
        "n": n,
        "t": (0..traj.samples()).map(|k| traj.time(k)).collect::<Vec<_>>(),
        "q": rows(&traj.q),
        "p": rows(&traj.p),
        "q_star": rows(&traj.q_star(h)?),
        "p_star": rows(&traj.p_star(h)?),
        "energy": traj.energies(h)?,
    });
    Ok(serde_json::to_vec_pretty(&value).expect("JSON values serialize"))
}

fn cmd_simulate(path: &Path, out: Option<&Path>, dt_override: Option<f64>, format: Format) -> Result<i32> {
    let s = load_scenario(path, dt_override)?;
    let system = s.build()?;
    let traj = simulate(&s, &system)?;
    let default_name = match format {
        Format::Csv => "trajectory.csv",
        Format::Json => "trajectory.json",
    };
    let bytes = match (format, &system) {
        (Format::Csv, System::Circuit(spec, _)) => {
            let mut buf = Vec::new();
            write_circuit_csv(&traj, spec, &mut buf)?;
            buf
        }
        (Format::Csv, sys) => {
            let mut buf = Vec::new();
            traj.write_csv(sys.hamiltonian(), &mut buf)?;
            buf
        }
        (Format::Json, sys) => trajectory_json(&traj, sys.hamiltonian())?,
    };
    emit(destination(out, s.output.trajectory.as_deref(), default_name), &bytes)?;
    Ok(EXIT_OK)
}

/// Reads either a trajectory CSV or a circuit CSV (`t,Q,Phi,...`).
fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| HtodaError::Io(format!("{}: {e}", path.display())))?;
    if text.starts_with("t,Q,Phi") {
        return read_circuit_csv(&text);
    }
    Trajectory::read_csv(BufReader::new(text.as_bytes()))
}

fn read_circuit_csv(text: &str) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut q = Vec::new();
    let mut p = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .take(3)
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| HtodaError::Grid(format!("row {i}: {e}")))?;
        if vals.len() != 3 {
            return Err(HtodaError::Grid(format!("row {i}: expected t, Q and Phi")));
        }
        times.push(vals[0]);
        q.push(vals[1]);
        p.push(vals[2]);
    }
    if times.len() < 2 {
        return Err(HtodaError::Grid("trajectory needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    for (k, t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * dt;
        if (t - expected).abs() > 1e-9 * dt.abs().max(t.abs()) {
            return Err(HtodaError::Grid(format!("non-uniform time grid at row {}", k + 1)));
        }
    }
    Ok(Trajectory { t0: times[0], dt, steps: times.len() - 1, n: 1, q, p })
}

fn kinetic_hessian(s: &Scenario, h: &SeparableHamiltonian) -> Result<QuadraticForm> {
    let actual = h.kinetic.as_quadratic_form();
    match &s.overrides.h_k {
        Some(rows) => {
            let m = matrix_from_rows(rows)?;
            let linear = actual
                .map(|f| f.linear)
                .unwrap_or_else(|| DVector::zeros(m.nrows()));
            QuadraticForm::new(m, linear, 0.0)
        }
        None => actual.ok_or_else(|| {
            HtodaError::Hypothesis("the kinetic energy must be quadratic (constant Hessian)".into())
        }),
    }
}

fn run_verification(id: TheoremId, s: &Scenario, system: &System, traj: &Trajectory) -> Result<VerificationReport> {
    let h = system.hamiltonian();
    match (id, system) {
        (TheoremId::DualFirstOrder, _) => verify_dual_first_order(traj, h),
        (TheoremId::DualTransform, _) => verify_dual_transform(traj, h, &kinetic_hessian(s, h)?),
        (TheoremId::HessianForm, _) => verify_hessian_form(traj, h, HessianFormVariant::Cubic),
        (TheoremId::AlphaMinusOne, _) => verify_alpha_form(traj, h, -1.0, TheoremId::AlphaMinusOne),
        (TheoremId::QuadraticDuality, _) => {
            if !h.potential.is_quadratic() {
                return Err(HtodaError::Hypothesis("prop_2_4 needs a quadratic potential".into()));
            }
            verify_alpha_forms(traj, h)
        }
        (TheoremId::VanishingPotential, _) => verify_vanishing_potential(traj, h),
        (TheoremId::TotalLegendre, _) => verify_j_function(traj, h, J_SAMPLES),
        (TheoremId::TodaDual, System::Lattice(spec, _)) => Ok(verify_dual_lattice(traj, spec)?.0),
        (TheoremId::Tau, System::Lattice(spec, _)) => tau_diagnostic(traj, spec),
        (TheoremId::CircuitDualTransform, System::Circuit(spec, _)) => circuit_dual_transform(s, spec, h, traj),
        (TheoremId::CircuitHessianForm, System::Circuit(spec, _)) => verify_lc_thm_3_2(traj, spec),
        (id, _) => Err(HtodaError::Config(format!("verification '{id}' does not apply to this scenario"))),
    }
}

fn circuit_dual_transform(
    s: &Scenario,
    spec: &CircuitSpec,
    h: &SeparableHamiltonian,
    traj: &Trajectory,
) -> Result<VerificationReport> {
    if s.overrides.h_k.is_none() {
        return verify_lc_thm_3_1(traj, spec);
    }
    let (res, scale) = dual_transform_residuals(traj, h, &kinetic_hessian(s, h)?)?;
    Ok(VerificationReport::from_residuals(
        TheoremId::CircuitDualTransform,
        &res,
        default_tolerance(traj.dt, scale),
        format!("overridden inductor Hessian; constant matched at t = {}", traj.time(NESTED_TRIM)),
    ))
}

fn reports_csv(reports: &[VerificationReport]) -> String {
    let mut s = String::from("theorem_id,max_residual,mean_residual,tolerance,passed\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.theorem_id, r.max_residual, r.mean_residual, r.tolerance, r.passed
        );
    }
    s
}

/// Runs every verification listed in the scenario, simulating first unless a
/// trajectory is supplied. Per-id tolerances from the scenario are applied.
pub fn verify_scenario(s: &Scenario, trajectory: Option<Trajectory>) -> Result<Vec<VerificationReport>> {
    let system = s.build()?;
    let traj = match trajectory {
        Some(t) => t,
        None => simulate(s, &system)?,
    };
    s.verifications
        .iter()
        .map(|&id| {
            let report = run_verification(id, s, &system, &traj)?;
            Ok(match s.tolerances.get(&id) {
                Some(&t) => report.with_tolerance(t),
                None => report,
            })
        })
        .collect()
}

fn cmd_verify(
    path: &Path,
    trajectory: Option<&Path>,
    out: Option<&Path>,
    dt_override: Option<f64>,
    tolerance_override: Option<f64>,
    format: Format,
) -> Result<i32> {
    let s = load_scenario(path, dt_override)?;
    if let Some(t) = tolerance_override {
        if !(t > 0.0 && t.is_finite()) {
            return Err(HtodaError::Config(format!("--tolerance-override must be positive, got {t}")));
        }
    }
    let traj = trajectory.map(read_trajectory).transpose()?;
    let mut reports = verify_scenario(&s, traj)?;
    for report in &mut reports {
        if let Some(t) = tolerance_override {
            *report = report.clone().with_tolerance(t);
        }
        eprintln!(
            "{:<16} {} max {:.3e} tol {:.3e}",
            report.theorem_id.as_str(),
            if report.passed { "PASS" } else { "FAIL" },
            report.max_residual,
            report.tolerance
        );
    }
    let (bytes, default_name) = match format {
        Format::Json => (
            serde_json::to_vec_pretty(&reports).expect("reports serialize"),
            "reports.json",
        ),
        Format::Csv => (reports_csv(&reports).into_bytes(), "reports.csv"),
    };
    emit(destination(out, s.output.reports.as_deref(), default_name), &bytes)?;
    Ok(if reports.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

/// `lo:hi:n` with `n >= 2` points including both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || HtodaError::Config(format!("grid must be lo:hi:n, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(HtodaError::Grid(format!("grid needs lo < hi and at least 2 points, got '{spec}'")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| HtodaError::Config(format!("invalid {what} '{v}'")))
        })
        .collect()
}

#[derive(serde::Serialize)]
struct ConjugateRow {
    x: f64,
    f: f64,
    df: f64,
    y: f64,
    fstar: f64,
    dfstar: f64,
    fenchel_gap: f64,
}

fn conjugate_row(pair: &ConjugatePair, x: f64) -> Result<ConjugateRow> {
    let f = pair.primal.value(x)?;
    let df = pair.primal.d1(x)?;
    let fstar = pair.dual.value(df)?;
    let dfstar = pair.dual.d1(df)?;
    Ok(ConjugateRow { x, f, df, y: df, fstar, dfstar, fenchel_gap: f + fstar - x * df })
}

fn cmd_conjugate(potential: &str, grid: &str, numeric: bool, out: Option<&Path>, format: Format) -> Result<i32> {
    let spec = PotentialSpec::parse(potential)?;
    let mut pair = spec.build()?;
    if numeric {
        pair = ConjugatePair::numeric(pair.primal.clone())?;
    }
    let rows = parse_grid(grid)?
        .into_iter()
        .map(|x| conjugate_row(&pair, x))
        .collect::<Result<Vec<_>>>()?;
    let (bytes, name) = match format {
        Format::Csv => {
            let mut s = String::from("x,f,df,y,fstar,dfstar,fenchel_gap\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.x, r.f, r.df, r.y, r.fstar, r.dfstar, r.fenchel_gap
                );
            }
            (s.into_bytes(), "conjugate.csv")
        }
        Format::Json => (serde_json::to_vec_pretty(&rows).expect("rows serialize"), "conjugate.json"),
    };
    emit(destination(out, None, name), &bytes)?;
    Ok(EXIT_OK)
}

fn cmd_geometry(
    potential: &str,
    point: Option<&str>,
    alphas: &str,
    coords: Coords,
    out: Option<&Path>,
) -> Result<i32> {
    let spec = PotentialSpec::parse(potential)?;
    let alphas = parse_list(alphas, "alpha")?;
    let point = point.map(|p| parse_list(p, "coordinate")).transpose()?;
    let report = if spec.kind == "chain" {
        let n = spec.param(&["N", "n"], None)?;
        if n.fract() != 0.0 || n < 0.0 {
            return Err(HtodaError::Config(format!("chain size must be a whole number, got {n}")));
        }
        let n = n as usize;
        let mass = spec.param(&["m", "mass"], Some(1.0))?;
        let hessian = chain_hessian(n, mass, spec.boundary)?;
        let form = QuadraticForm::pure(hessian.matrix)?;
        let energy = Energy::quadratic(form)?;
        let x = point.unwrap_or_else(|| vec![0.0; n]);
        geometry_report(&energy, &x, &alphas, EnergyTag::K, CoordinateTag::Primal)?
    } else {
        let pair = spec.build()?;
        let x = point.unwrap_or_else(|| vec![0.0]);
        let (part, tag) = match coords {
            Coords::Primal => (pair, CoordinateTag::Primal),
            Coords::Dual => (pair.flipped(), CoordinateTag::Dual),
        };
        let energy = Energy::Separable(SeparableConvexFunction::uniform(&part, x.len())?);
        geometry_report(&energy, &x, &alphas, EnergyTag::U, tag)?
    };
    let bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    emit(destination(out, None, "geometry.json"), &bytes)?;
    Ok(EXIT_OK)
}

fn cmd_spectrum(n: usize, mass: f64, boundary: Boundary, out: Option<&Path>, format: Format) -> Result<i32> {
    let h = chain_hessian(n, mass, boundary)?;
    let (bytes, name) = match format {
        Format::Json => (serde_json::to_vec_pretty(&h).expect("spectrum serializes"), "spectrum.json"),
        Format::Csv => {
            let mut s = String::from("index,eigenvalue\n");
            for (i, v) in h.eigenvalues.iter().enumerate() {
                let _ = writeln!(s, "{i},{v:.16e}");
            }
            (s.into_bytes(), "spectrum.csv")
        }
    };
    emit(destination(out, None, name), &bytes)?;
    Ok(EXIT_OK)
}
