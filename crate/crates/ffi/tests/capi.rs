use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use htoda_ffi::*;

fn last_error() -> String {
    let p = htoda_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn toda() -> *mut HtodaPotential {
    let mut pot = ptr::null_mut();
    assert_eq!(unsafe { htoda_potential_toda(1.0, 1.0, &mut pot) }, HtodaStatus::Ok);
    pot
}

#[test]
fn toda_pair_evaluates_both_sides() {
    let pot = toda();
    let mut v = 0.0;
    unsafe {
        assert_eq!(htoda_potential_eval(pot, HtodaSide::Primal, 0, 0.0, &mut v), HtodaStatus::Ok);
        assert_eq!(v, 1.0);
        // the dual gradient is -ln(1 - y)
        assert_eq!(htoda_potential_eval(pot, HtodaSide::Dual, 1, 0.5, &mut v), HtodaStatus::Ok);
        assert!((v + 0.5f64.ln()).abs() < 1e-14);
        assert!(htoda_last_error().is_null());

        assert_eq!(htoda_potential_eval(pot, HtodaSide::Dual, 1, 2.0, &mut v), HtodaStatus::Domain);
        assert!(last_error().starts_with("DomainError"));
        assert_eq!(htoda_potential_eval(pot, HtodaSide::Dual, 4, 0.0, &mut v), HtodaStatus::Parameter);
        htoda_potential_free(pot);
    }
}

#[test]
fn flipped_swaps_primal_and_dual() {
    let pot = toda();
    let mut flipped = ptr::null_mut();
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(htoda_potential_flipped(pot, &mut flipped), HtodaStatus::Ok);
        htoda_potential_eval(pot, HtodaSide::Dual, 0, 0.3, &mut a);
        htoda_potential_eval(flipped, HtodaSide::Primal, 0, 0.3, &mut b);
        assert_eq!(a, b);
        htoda_potential_free(flipped);
        htoda_potential_free(pot);
    }
}

#[test]
fn constructors_report_bad_parameters() {
    let mut pot = ptr::null_mut();
    unsafe {
        assert_eq!(htoda_potential_toda(-1.0, 1.0, &mut pot), HtodaStatus::Parameter);
        assert!(pot.is_null());
        assert_eq!(htoda_potential_power(0.5, &mut pot), HtodaStatus::Parameter);
        assert_eq!(htoda_potential_quadratic(1.0, ptr::null_mut()), HtodaStatus::NullPointer);
        assert_eq!(last_error(), "out is null");
    }
}

#[test]
fn potential_from_json() {
    let json = CString::new(r#"{"kind":"deformed","params":{"exponent":2}}"#).unwrap();
    let mut pot = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(htoda_potential_from_json(json.as_ptr(), &mut pot), HtodaStatus::Ok);
        htoda_potential_eval(pot, HtodaSide::Dual, 1, 0.5, &mut v);
        assert!((v - (1.0 - 1.0 / 0.5)).abs() < 1e-8);
        htoda_potential_free(pot);

        let bad = CString::new(r#"{"kind":"nope"}"#).unwrap();
        assert_eq!(htoda_potential_from_json(bad.as_ptr(), &mut pot), HtodaStatus::Config);
        let garbage = CString::new("{").unwrap();
        assert_eq!(htoda_potential_from_json(garbage.as_ptr(), &mut pot), HtodaStatus::Config);
        let invalid = [0xffu8 as std::ffi::c_char, 0];
        assert_eq!(htoda_potential_from_json(invalid.as_ptr(), &mut pot), HtodaStatus::InvalidString);
    }
}

#[test]
fn bregman_of_quadratic_is_half_squared_distance() {
    let mut pot = ptr::null_mut();
    let mut d = 0.0;
    unsafe {
        htoda_potential_quadratic(2.0, &mut pot);
        assert_eq!(htoda_potential_bregman(pot, 1.5, 0.5, &mut d), HtodaStatus::Ok);
        assert!((d - 1.0).abs() < 1e-14);
        htoda_potential_free(pot);
    }
}

#[test]
fn chain_spectrum_fills_buffer() {
    let mut ev = [0.0; 3];
    unsafe {
        assert_eq!(htoda_chain_spectrum(3, 1.0, HtodaBoundary::Fixed, ev.as_mut_ptr(), 3), HtodaStatus::Ok);
        let s = std::f64::consts::SQRT_2;
        for (a, b) in ev.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            htoda_chain_spectrum(4, 1.0, HtodaBoundary::Fixed, ev.as_mut_ptr(), 3),
            HtodaStatus::BufferTooSmall
        );
        assert_eq!(htoda_chain_spectrum(1, 1.0, HtodaBoundary::Fixed, ev.as_mut_ptr(), 3), HtodaStatus::Parameter);
    }
}

#[test]
fn lattice_round_trip() {
    let pot = toda();
    let mut lat = ptr::null_mut();
    let mut traj = ptr::null_mut();
    let q0 = [0.5, -0.3, 0.2];
    let p0 = [0.1, 0.0, -0.2];
    unsafe {
        assert_eq!(htoda_lattice_new(3, 1.0, HtodaBoundary::Fixed, pot, &mut lat), HtodaStatus::Ok);
        htoda_potential_free(pot);
        let mut e0 = 0.0;
        assert_eq!(htoda_lattice_energy(lat, q0.as_ptr(), p0.as_ptr(), &mut e0), HtodaStatus::Ok);
        assert_eq!(
            htoda_lattice_integrate(lat, q0.as_ptr(), p0.as_ptr(), 1e-3, 3000, &mut traj),
            HtodaStatus::Ok
        );
        assert_eq!(htoda_trajectory_samples(traj), 3001);
        assert_eq!(htoda_trajectory_dim(traj), 3);

        let (mut q, mut p) = ([0.0; 3], [0.0; 3]);
        assert_eq!(htoda_trajectory_state(traj, 0, q.as_mut_ptr(), p.as_mut_ptr()), HtodaStatus::Ok);
        assert_eq!((q, p), (q0, p0));
        assert_eq!(htoda_trajectory_state(traj, 3000, q.as_mut_ptr(), p.as_mut_ptr()), HtodaStatus::Ok);
        let mut e1 = 0.0;
        htoda_lattice_energy(lat, q.as_ptr(), p.as_ptr(), &mut e1);
        assert!((e1 - e0).abs() < 1e-5);
        assert_eq!(htoda_trajectory_state(traj, 3001, q.as_mut_ptr(), ptr::null_mut()), HtodaStatus::Parameter);

        let mut report = HtodaReport::default();
        assert_eq!(htoda_lattice_verify_dual(lat, traj, &mut report), HtodaStatus::Ok);
        assert!(report.passed && report.max_residual <= report.tolerance);
        assert_eq!(htoda_lattice_verify_tau(lat, traj, &mut report), HtodaStatus::Ok);
        assert!(report.passed);

        htoda_trajectory_free(traj);
        htoda_lattice_free(lat);
    }
}

#[test]
fn periodic_lattice_is_rejected() {
    let pot = toda();
    let mut lat = ptr::null_mut();
    unsafe {
        assert_eq!(htoda_lattice_new(4, 1.0, HtodaBoundary::Periodic, pot, &mut lat), HtodaStatus::Convexity);
        assert!(last_error().contains("eigenvalue 0"));
        assert!(lat.is_null());
        htoda_potential_free(pot);
    }
}

#[test]
fn null_handles_are_reported_not_dereferenced() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(htoda_potential_eval(ptr::null(), HtodaSide::Primal, 0, 0.0, &mut v), HtodaStatus::NullPointer);
        assert_eq!(htoda_trajectory_samples(ptr::null()), 0);
        assert_eq!(
            htoda_lattice_verify_dual(ptr::null(), ptr::null(), ptr::null_mut()),
            HtodaStatus::NullPointer
        );
        htoda_potential_free(ptr::null_mut());
        htoda_lattice_free(ptr::null_mut());
        htoda_trajectory_free(ptr::null_mut());
        htoda_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    let mut v = 0.0;
    unsafe { htoda_potential_eval(ptr::null(), HtodaSide::Primal, 0, 0.0, &mut v) };
    let other = std::thread::spawn(|| htoda_last_error().is_null()).join().unwrap();
    assert!(other);
    assert_eq!(last_error(), "potential is null");
}

#[test]
fn verify_scenario_returns_json_reports() {
    let dir = std::env::temp_dir().join(format!("htoda-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("toda.json");
    std::fs::write(
        &path,
        r#"{"kind":"lattice",
            "system":{"N":3,"m":1.0,"boundary":"fixed","potential":{"kind":"toda"}},
            "initial":{"q":[0.5,-0.3,0.2],"p":[0.1,0.0,-0.2]},
            "dt":1e-3,"steps":2000,"verifications":["thm_2_1","toda_dual"]}"#,
    )
    .unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut json = ptr::null_mut();
    let mut passed = false;
    unsafe {
        assert_eq!(htoda_verify_scenario(c_path.as_ptr(), &mut json, &mut passed), HtodaStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        htoda_string_free(json);
        let reports: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(reports[0]["theorem_id"], "thm_2_1");
        assert_eq!(reports[1]["theorem_id"], "toda_dual");
        assert!(passed);

        let missing = CString::new(dir.join("missing.json").to_str().unwrap()).unwrap();
        assert_eq!(htoda_verify_scenario(missing.as_ptr(), &mut json, ptr::null_mut()), HtodaStatus::Config);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(htoda_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/htoda.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["htoda_last_error", "htoda_lattice_integrate", "HTODA_STATUS_CONVEXITY", "HtodaReport"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(status.success());
}
