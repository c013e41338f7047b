use nalgebra::{DMatrix, DVector};

use crate::convex::{Energy, QuadraticForm};
use crate::error::{HtodaError, Result};
use crate::geometry::{alpha_connection, cubic_at, metric_at, CoordinateTag, EnergyTag};
use crate::numeric::{fd_step, second_time_derivative, time_derivative, trim_nested, NESTED_TRIM};

use super::hamiltonian::SeparableHamiltonian;
use super::report::{default_tolerance, TheoremId, VerificationReport};
use super::trajectory::Trajectory;

fn check_dims(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<()> {
    if traj.n != h.dim() {
        return Err(HtodaError::parameter(format!(
            "trajectory has dimension {}, Hamiltonian has {}",
            traj.n,
            h.dim()
        )));
    }
    Ok(())
}

fn quadratic_kinetic(h: &SeparableHamiltonian) -> Result<QuadraticForm> {
    h.kinetic.as_quadratic_form().ok_or_else(|| {
        HtodaError::hypothesis("the kinetic energy must be quadratic (constant Hessian)")
    })
}

fn potential_conjugate(h: &SeparableHamiltonian) -> Result<Energy> {
    if h.potential.is_vanishing() {
        return Err(HtodaError::hypothesis(
            "the potential vanishes identically, so its Legendre transform is undefined",
        ));
    }
    h.potential_conjugate()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `d/dt dU*/dq*(q*) = p*` and `d/dt dK*/dp*(p*) = -q*` by central
/// differences along the stored grid.
pub fn verify_dual_first_order(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<VerificationReport> {
    check_dims(traj, h)?;
    let n = traj.n;
    let q_star = traj.q_star(h)?;
    let p_star = traj.p_star(h)?;
    let k_star = h.kinetic_conjugate()?;
    let mut residuals = Vec::new();
    let mut scale: f64 = 0.0;
    let mut notes = Vec::new();

    let p_back: Vec<f64> = p_star
        .chunks(n)
        .map(|ps| k_star.gradient(ps))
        .collect::<Result<Vec<_>>>()?
        .concat();
    let dp = time_derivative(&p_back, n, traj.dt)?;
    scale = scale.max(max_abs(&dp));
    residuals.extend(dp.iter().zip(&q_star).map(|(l, r)| l + r));

    if h.potential.is_vanishing() {
        time_derivative(&traj.q, n, traj.dt)?;
        notes.push("potential vanishes: dU*/dq* branch skipped".to_string());
    } else {
        let u_star = h.potential_conjugate()?;
        let q_back: Vec<f64> = q_star
            .chunks(n)
            .map(|qs| u_star.gradient(qs))
            .collect::<Result<Vec<_>>>()?
            .concat();
        let dq = time_derivative(&q_back, n, traj.dt)?;
        scale = scale.max(max_abs(&dq));
        residuals.extend(dq.iter().zip(&p_star).map(|(l, r)| l - r));
    }
    Ok(VerificationReport::from_residuals(
        TheoremId::DualFirstOrder,
        &residuals,
        default_tolerance(traj.dt, scale),
        notes.join("; "),
    ))
}

/// Residuals of `d/dt dU*/dq*|_{q*=-dp/dt} - hK p - c` on the interior
/// samples, after removing the value at the first of them, and the largest
/// left-hand side.
pub fn dual_transform_residuals(
    traj: &Trajectory,
    h: &SeparableHamiltonian,
    hk: &QuadraticForm,
) -> Result<(Vec<f64>, f64)> {
    check_dims(traj, h)?;
    quadratic_kinetic(h)?;
    let u_star = potential_conjugate(h)?;
    let n = traj.n;
    if hk.dim() != n {
        return Err(HtodaError::parameter(format!(
            "kinetic Hessian has dimension {}, trajectory has {n}",
            hk.dim()
        )));
    }
    let p_dot = time_derivative(&traj.p, n, traj.dt)?;
    let mut g = Vec::with_capacity(p_dot.len());
    for (k, row) in p_dot.chunks(n).enumerate() {
        let arg: Vec<f64> = row.iter().map(|v| -v).collect();
        let grad = u_star
            .gradient(&arg)
            .map_err(|e| HtodaError::domain(format!("sample {k}: {e}")))?;
        g.extend(grad);
    }
    let g_dot = time_derivative(&g, n, traj.dt)?;
    let g_dot = trim_nested(&g_dot, n)?;
    let mut raw = Vec::with_capacity(g_dot.len());
    for (i, row) in g_dot.chunks(n).enumerate() {
        let rhs = hk.gradient(traj.p_at(i + NESTED_TRIM));
        raw.extend((0..n).map(|a| row[a] - rhs[a]));
    }
    let offset: Vec<f64> = raw[..n].to_vec();
    let residuals = raw
        .iter()
        .enumerate()
        .map(|(i, r)| r - offset[i % n])
        .collect();
    Ok((residuals, max_abs(g_dot)))
}

/// Generalised dual transform: `d/dt dU*/dq*|_{q*=-dp/dt} = hK p + c + const`
/// for a quadratic kinetic energy with Hessian `hK` and linear term `c`.
///
/// `hk` is taken as a separate argument so that a deliberately wrong matrix
/// can be checked against a trajectory.
pub fn verify_dual_transform(
    traj: &Trajectory,
    h: &SeparableHamiltonian,
    hk: &QuadraticForm,
) -> Result<VerificationReport> {
    let (res, scale) = dual_transform_residuals(traj, h, hk)?;
    Ok(VerificationReport::from_residuals(
        TheoremId::DualTransform,
        &res,
        default_tolerance(traj.dt, scale),
        format!("integration constant matched at t = {}", traj.time(NESTED_TRIM)),
    ))
}

/// Which array multiplies the squared velocity in the Hessian form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianFormVariant {
    /// The cubic form `C`.
    Cubic,
    /// Twice the Levi-Civita coefficients, `2 Gamma(0)`.
    LeviCivita,
}

struct DualSeries {
    q_star: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
}

fn dual_series(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<DualSeries> {
    let q_star = traj.q_star(h)?;
    let v = time_derivative(&q_star, traj.n, traj.dt)?;
    let a = second_time_derivative(&q_star, traj.n, traj.dt)?;
    Ok(DualSeries { q_star, v, a })
}

fn quadratic_in(arr: &[f64], n: usize, v: &[f64]) -> DVector<f64> {
    DVector::from_fn(n, |a, _| {
        let mut s = 0.0;
        for b in 0..n {
            for c in 0..n {
                s += arr[(a * n + b) * n + c] * v[b] * v[c];
            }
        }
        s
    })
}

/// `C_{U*} q*' q*' + h_{U*} q*'' = -hK q*`, the equations of motion in dual
/// coordinates written with the metric and cubic form of `U*`.
pub fn verify_hessian_form(
    traj: &Trajectory,
    h: &SeparableHamiltonian,
    variant: HessianFormVariant,
) -> Result<VerificationReport> {
    check_dims(traj, h)?;
    let hk = quadratic_kinetic(h)?;
    let u_star = potential_conjugate(h)?;
    let n = traj.n;
    let s = dual_series(traj, h)?;
    let mut residuals = Vec::with_capacity(s.q_star.len());
    let mut scale: f64 = 0.0;
    for k in 0..traj.samples() {
        let row = k * n..(k + 1) * n;
        let qs = &s.q_star[row.clone()];
        let metric = metric_at(&u_star, qs, EnergyTag::U, CoordinateTag::Dual)?;
        let cubic = cubic_at(&u_star, qs, EnergyTag::U, CoordinateTag::Dual)?;
        let arr = match variant {
            HessianFormVariant::Cubic => cubic.c,
            HessianFormVariant::LeviCivita => alpha_connection(&cubic, 0.0)
                .gamma
                .iter()
                .map(|g| 2.0 * g)
                .collect(),
        };
        let lhs = quadratic_in(&arr, n, &s.v[row.clone()])
            + &metric.g * DVector::from_column_slice(&s.a[row]);
        let rhs = -(&hk.matrix * DVector::from_column_slice(qs));
        scale = scale.max(lhs.amax());
        residuals.extend((lhs - rhs).iter().copied());
    }
    let notes = match variant {
        HessianFormVariant::Cubic => "cubic-form version",
        HessianFormVariant::LeviCivita => "Levi-Civita version (2 Gamma(0))",
    };
    Ok(VerificationReport::from_residuals(
        TheoremId::HessianForm,
        &residuals,
        default_tolerance(traj.dt, scale),
        notes,
    ))
}

/// Residuals of `q*'' + hU Gamma(alpha) q*' q*' = -hU hK q*` and the largest
/// left-hand side.
pub fn alpha_form_residuals(
    traj: &Trajectory,
    h: &SeparableHamiltonian,
    alpha: f64,
) -> Result<(Vec<f64>, f64)> {
    check_dims(traj, h)?;
    let hk = quadratic_kinetic(h)?;
    let u_star = potential_conjugate(h)?;
    let n = traj.n;
    let s = dual_series(traj, h)?;
    let mut residuals = Vec::with_capacity(s.q_star.len());
    let mut scale: f64 = 0.0;
    for k in 0..traj.samples() {
        let row = k * n..(k + 1) * n;
        let qs = &s.q_star[row.clone()];
        let hu: DMatrix<f64> = h.potential.hessian(traj.q_at(k))?;
        let cubic = cubic_at(&u_star, qs, EnergyTag::U, CoordinateTag::Dual)?;
        let gamma = alpha_connection(&cubic, alpha);
        let lhs = DVector::from_column_slice(&s.a[row.clone()])
            + &hu * quadratic_in(&gamma.gamma, n, &s.v[row]);
        let rhs = -(&hu * (&hk.matrix * DVector::from_column_slice(qs)));
        scale = scale.max(lhs.amax());
        residuals.extend((lhs - rhs).iter().copied());
    }
    Ok((residuals, scale))
}

/// The alpha = -1 form of the equations of motion, and for a quadratic
/// potential also the alpha = +1 form on the same trajectory.
pub fn verify_alpha_forms(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<VerificationReport> {
    let (mut res, mut scale) = alpha_form_residuals(traj, h, -1.0)?;
    let minus = max_abs(&res);
    if h.potential.is_quadratic() {
        let (plus_res, plus_scale) = alpha_form_residuals(traj, h, 1.0)?;
        let plus = max_abs(&plus_res);
        res.extend(plus_res);
        scale = scale.max(plus_scale);
        return Ok(VerificationReport::from_residuals(
            TheoremId::QuadraticDuality,
            &res,
            default_tolerance(traj.dt, scale),
            format!("alpha=-1 max {minus:e}; alpha=+1 max {plus:e}"),
        ));
    }
    Ok(VerificationReport::from_residuals(
        TheoremId::AlphaMinusOne,
        &res,
        default_tolerance(traj.dt, scale),
        format!("alpha=-1 max {minus:e}; alpha=+1 not asserted (potential is not quadratic)"),
    ))
}

/// A single alpha form, reported under `id`.
pub fn verify_alpha_form(
    traj: &Trajectory,
    h: &SeparableHamiltonian,
    alpha: f64,
    id: TheoremId,
) -> Result<VerificationReport> {
    let (res, scale) = alpha_form_residuals(traj, h, alpha)?;
    Ok(VerificationReport::from_residuals(
        id,
        &res,
        default_tolerance(traj.dt, scale),
        format!("alpha={alpha}"),
    ))
}

/// Tolerance of the finite-difference gradient check of `J`.
pub const J_GRADIENT_TOL: f64 = 1e-6;

/// `dJ/dp* = -p` and `dJ/dq* = -q` by central differences of
/// [`j_function`] at `samples` evenly spaced points of the trajectory.
pub fn verify_j_function(
    traj: &Trajectory,
    h: &SeparableHamiltonian,
    samples: usize,
) -> Result<VerificationReport> {
    check_dims(traj, h)?;
    potential_conjugate(h)?;
    let n = traj.n;
    let q_star = traj.q_star(h)?;
    let p_star = traj.p_star(h)?;
    let stride = (traj.samples() / samples.max(1)).max(1);
    let mut residuals = Vec::new();
    for k in (0..traj.samples()).step_by(stride) {
        let mut ps = p_star[k * n..(k + 1) * n].to_vec();
        let mut qs = q_star[k * n..(k + 1) * n].to_vec();
        for a in 0..n {
            let x = ps[a];
            let d = fd_step(x);
            ps[a] = x + d;
            let up = j_function(h, &ps, &qs)?;
            ps[a] = x - d;
            let down = j_function(h, &ps, &qs)?;
            ps[a] = x;
            residuals.push((up - down) / (2.0 * d) + traj.p_at(k)[a]);

            let x = qs[a];
            let d = fd_step(x);
            qs[a] = x + d;
            let up = j_function(h, &ps, &qs)?;
            qs[a] = x - d;
            let down = j_function(h, &ps, &qs)?;
            qs[a] = x;
            residuals.push((up - down) / (2.0 * d) + traj.q_at(k)[a]);
        }
    }
    Ok(VerificationReport::from_residuals(
        TheoremId::TotalLegendre,
        &residuals,
        J_GRADIENT_TOL,
        format!("gradient checked at every {stride}th sample"),
    ))
}

/// For `U = 0`: `p` and `p*` stay constant and `q(t) = q(0) + p* t`.
///
/// The deviation of `q` from the straight line is divided by
/// `samples * max(1, |q|)` so that accumulated round-off stays at the level
/// of machine precision.
pub fn verify_vanishing_potential(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<VerificationReport> {
    check_dims(traj, h)?;
    if !h.potential.is_vanishing() {
        return Err(HtodaError::hypothesis("the potential does not vanish identically"));
    }
    let n = traj.n;
    let p_star = traj.p_star(h)?;
    let p0 = traj.p_at(0);
    let ps0 = &p_star[..n];
    let q0 = traj.q_at(0);
    let q_scale = max_abs(&traj.q).max(1.0) * traj.samples() as f64;
    let mut residuals = Vec::new();
    let (mut dp, mut dps, mut dq): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..traj.samples() {
        let t = k as f64 * traj.dt;
        for a in 0..n {
            let rp = traj.p_at(k)[a] - p0[a];
            let rps = p_star[k * n + a] - ps0[a];
            let rq = (traj.q_at(k)[a] - (q0[a] + ps0[a] * t)) / q_scale;
            dp = dp.max(rp.abs());
            dps = dps.max(rps.abs());
            dq = dq.max(rq.abs());
            residuals.extend([rp, rps, rq]);
        }
    }
    Ok(VerificationReport::from_residuals(
        TheoremId::VanishingPotential,
        &residuals,
        1e-13,
        format!("p drift {dp:e}; p* drift {dps:e}; normalised q line deviation {dq:e}"),
    ))
}

/// `J(p*, -q*) = -(K*(p*) + U*(q*))`.
pub fn j_function(h: &SeparableHamiltonian, p_star: &[f64], q_star: &[f64]) -> Result<f64> {
    let k = h.kinetic_conjugate()?.value(p_star)?;
    let u = h.potential_conjugate()?.value(q_star)?;
    Ok(-(k + u))
}

/// Largest `|H(t) - H(t0)|` along the trajectory.
pub fn energy_drift(traj: &Trajectory, h: &SeparableHamiltonian) -> Result<f64> {
    let e = traj.energies(h)?;
    Ok(e.iter().fold(0.0_f64, |m, v| m.max((v - e[0]).abs())))
}
