use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use htoda::convex::{make_toda_potential, Energy, QuadraticForm, SeparableConvexFunction};
use htoda::dynamics::{
    default_tolerance, energy_drift, integrate, j_function, verify_alpha_forms, verify_dual_first_order,
    verify_dual_transform, verify_hessian_form, verify_j_function, verify_vanishing_potential,
    HessianFormVariant, SeparableHamiltonian, TheoremId, Trajectory, VerificationReport,
};
use htoda::lattice::{build_lattice_hamiltonian, Boundary, LatticeSpec};

fn quadratic(m: DMatrix<f64>) -> Energy {
    Energy::quadratic(QuadraticForm::pure(m).unwrap()).unwrap()
}

fn oscillator(k: f64) -> SeparableHamiltonian {
    SeparableHamiltonian::new(
        quadratic(DMatrix::from_element(1, 1, 1.0)),
        quadratic(DMatrix::from_element(1, 1, k)),
    )
    .unwrap()
}

fn toda3() -> SeparableHamiltonian {
    let spec = LatticeSpec::new(3, 1.0, Boundary::Fixed, make_toda_potential(1.0, 1.0).unwrap()).unwrap();
    build_lattice_hamiltonian(&spec).unwrap()
}

#[test]
fn oscillator_follows_cosine() {
    let h = oscillator(4.0);
    let dt = 1e-3;
    let t = integrate(&h, &[1.0], &[0.0], dt, 3000).unwrap();
    for k in (0..=3000).step_by(250) {
        let time = k as f64 * dt;
        // Verlet phase error is O(dt^2) per unit time
        assert!((t.q_at(k)[0] - (2.0 * time).cos()).abs() < 5e-6);
        assert!((t.p_at(k)[0] + 2.0 * (2.0 * time).sin()).abs() < 1e-5);
    }
}

#[test]
fn energy_drift_is_second_order() {
    let h = toda3();
    let q0 = [0.5, -0.3, 0.2];
    let p0 = [0.1, 0.0, -0.2];
    let coarse = energy_drift(&integrate(&h, &q0, &p0, 2e-3, 2500).unwrap(), &h).unwrap();
    let fine = energy_drift(&integrate(&h, &q0, &p0, 1e-3, 5000).unwrap(), &h).unwrap();
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn integrate_rejects_bad_inputs() {
    let h = oscillator(1.0);
    assert_eq!(integrate(&h, &[1.0, 0.0], &[0.0], 1e-3, 10).unwrap_err().kind(), "ParameterError");
    assert_eq!(integrate(&h, &[1.0], &[0.0], 0.0, 10).unwrap_err().kind(), "ParameterError");
    assert_eq!(integrate(&h, &[1.0], &[0.0], f64::NAN, 10).unwrap_err().kind(), "ParameterError");
}

#[test]
fn vanishing_kinetic_energy_is_rejected() {
    let err = SeparableHamiltonian::new(Energy::Vanishing(1), quadratic(DMatrix::from_element(1, 1, 1.0))).unwrap_err();
    assert_eq!(err.kind(), "ParameterError");
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let h = toda3();
    let t = integrate(&h, &[0.5, -0.3, 0.2], &[0.1, 0.0, -0.2], 1e-3, 200).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&h, &mut buf).unwrap();
    let back = Trajectory::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, t);
    let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, Trajectory::csv_header(3));
}

#[test]
fn csv_reader_reports_malformed_input() {
    assert_eq!(Trajectory::read_csv("".as_bytes()).unwrap_err().kind(), "GridError");
    assert_eq!(Trajectory::read_csv("x,y\n1,2\n".as_bytes()).unwrap_err().kind(), "GridError");
    let uneven = "t,q_1,p_1,qs_1,ps_1\n0,0,0,0,0\n1,0,0,0,0\n3,0,0,0,0\n";
    assert_eq!(Trajectory::read_csv(uneven.as_bytes()).unwrap_err().kind(), "GridError");
}

#[test]
fn toda_theorem_checks_pass() {
    let h = toda3();
    let t = integrate(&h, &[0.5, -0.3, 0.2], &[0.1, 0.0, -0.2], 1e-3, 4000).unwrap();
    let hk = h.kinetic.as_quadratic_form().unwrap();
    let reports = [
        verify_dual_first_order(&t, &h).unwrap(),
        verify_dual_transform(&t, &h, &hk).unwrap(),
        verify_hessian_form(&t, &h, HessianFormVariant::Cubic).unwrap(),
        verify_hessian_form(&t, &h, HessianFormVariant::LeviCivita).unwrap(),
        verify_alpha_forms(&t, &h).unwrap(),
        verify_j_function(&t, &h, 20).unwrap(),
    ];
    for r in &reports {
        assert!(r.passed, "{r:?}");
    }
    assert_eq!(reports[4].theorem_id, TheoremId::AlphaMinusOne);
}

#[test]
fn wrong_kinetic_hessian_fails_dual_transform() {
    let h = toda3();
    let t = integrate(&h, &[0.5, -0.3, 0.2], &[0.1, 0.0, -0.2], 1e-3, 4000).unwrap();
    let mut m = h.kinetic.as_quadratic_form().unwrap().matrix;
    m[(1, 1)] *= 1.1;
    let wrong = QuadraticForm::pure(m).unwrap();
    let r = verify_dual_transform(&t, &h, &wrong).unwrap();
    assert!(!r.passed && r.max_residual > r.tolerance);
}

#[test]
fn dual_transform_needs_quadratic_kinetic_energy() {
    let toda = make_toda_potential(1.0, 1.0).unwrap();
    let k = Energy::Separable(SeparableConvexFunction::uniform(&toda, 1).unwrap());
    let h = SeparableHamiltonian::new(k, quadratic(DMatrix::from_element(1, 1, 1.0))).unwrap();
    let t = integrate(&h, &[0.5], &[0.0], 1e-2, 100).unwrap();
    let hk = QuadraticForm::pure(DMatrix::from_element(1, 1, 1.0)).unwrap();
    assert_eq!(verify_dual_transform(&t, &h, &hk).unwrap_err().kind(), "HypothesisError");
}

#[test]
fn quadratic_potential_reports_both_alpha_forms() {
    let h = oscillator(1.0);
    let t = integrate(&h, &[1.0], &[0.0], 1e-3, 6000).unwrap();
    let r = verify_alpha_forms(&t, &h).unwrap();
    assert_eq!(r.theorem_id, TheoremId::QuadraticDuality);
    assert!(r.passed);
}

#[test]
fn free_motion_is_a_straight_line() {
    let toda = make_toda_potential(1.0, 1.0).unwrap();
    let k = Energy::Separable(SeparableConvexFunction::uniform(&toda, 2).unwrap());
    let h = SeparableHamiltonian::new(k, Energy::Vanishing(2)).unwrap();
    let t = integrate(&h, &[0.0, 1.0], &[0.5, -0.5], 1e-2, 1000).unwrap();
    let r = verify_vanishing_potential(&t, &h).unwrap();
    assert!(r.passed, "{}", r.notes);
    // velocity dK/dp = 1 - e^{-p}
    let v = 1.0 - (-0.5f64).exp();
    assert_relative_eq!(t.final_q()[0], 10.0 * v, epsilon = 1e-10);
    let first = verify_dual_first_order(&t, &h).unwrap();
    assert!(first.passed);
    assert!(first.notes.contains("skipped"));
}

#[test]
fn j_function_is_minus_the_conjugate_sum() {
    let h = oscillator(2.0);
    // K* = p*^2/2 and U* = q*^2/4
    assert_relative_eq!(j_function(&h, &[1.0], &[2.0]).unwrap(), -(0.5 + 1.0), epsilon = 1e-14);
}

#[test]
fn reports_round_trip_through_json() {
    let r = VerificationReport::from_residuals(TheoremId::Tau, &[1e-7, -2e-7], 1e-6, "n");
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"theorem_id\":\"tau\""));
    let back: VerificationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    assert_eq!(r.max_residual, 2e-7);
    assert!(r.passed);
    assert!(!r.with_tolerance(1e-7).passed);
}

#[test]
fn default_tolerance_scales_with_dt_squared() {
    assert_relative_eq!(default_tolerance(1e-3, 2.0), 1e-4, epsilon = 1e-18);
    assert!(default_tolerance(1e-3, 0.0) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integration_is_time_reversible(
        q in prop::array::uniform3(-0.8f64..0.8),
        p in prop::array::uniform3(-0.5f64..0.5),
        steps in 10usize..400,
    ) {
        let h = toda3();
        let fwd = integrate(&h, &q, &p, 1e-2, steps).unwrap();
        let back = integrate(&h, fwd.final_q(), fwd.final_p(), -1e-2, steps).unwrap();
        for a in 0..3 {
            prop_assert!((back.final_q()[a] - q[a]).abs() <= 1e-9);
            prop_assert!((back.final_p()[a] - p[a]).abs() <= 1e-9);
        }
    }

    #[test]
    fn energy_stays_bounded(q in -1.0f64..1.0, p in -1.0f64..1.0) {
        let h = oscillator(1.0);
        let t = integrate(&h, &[q], &[p], 1e-2, 2000).unwrap();
        let e0 = 0.5 * (q * q + p * p);
        // modified energy of Verlet differs by O(dt^2)
        prop_assert!(energy_drift(&t, &h).unwrap() <= 1e-4 * e0.max(1e-12) + 1e-15);
    }
}
