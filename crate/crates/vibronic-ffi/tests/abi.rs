use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use vibronic_ffi::*;

fn last_error() -> String {
    let p = vibronic_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn weyl_and_errors() {
    let mut n = 0u64;
    assert_eq!(
        unsafe { vibronic_weyl_count(0, 4, 2, &mut n) },
        VibronicStatus::Ok
    );
    assert_eq!(n, 3);
    assert!(vibronic_last_error().is_null());
    assert_eq!(
        unsafe { vibronic_weyl_count(0, 5, 2, &mut n) },
        VibronicStatus::InvalidArgument
    );
    assert!(last_error().contains("even"));
    assert_eq!(
        unsafe { vibronic_weyl_count(0, 4, 2, ptr::null_mut()) },
        VibronicStatus::NullPointer
    );
    let v = unsafe { CStr::from_ptr(vibronic_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn bad_config_reports_config_status() {
    let toml = CString::new("[dynamics]\norder = 3\n").unwrap();
    let mut s = ptr::null_mut();
    let status = unsafe { vibronic_scenario_new(toml.as_ptr(), ptr::null(), &mut s) };
    assert_eq!(status, VibronicStatus::Config);
    assert!(s.is_null());
    assert!(last_error().contains("order"));
    unsafe { vibronic_scenario_free(ptr::null_mut()) };
}

#[test]
fn scenario_round_trip() {
    assert_eq!(vibronic_backend_check(), VibronicStatus::Ok);
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let toml = CString::new("[dynamics]\nt_final = 20.0\ndensity_times = []\n").unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            vibronic_scenario_new(toml.as_ptr(), out.as_ptr(), &mut s),
            VibronicStatus::Ok
        );

        let mut h = ptr::null_mut();
        assert_eq!(vibronic_hamiltonian_build(s, &mut h), VibronicStatus::Ok);
        assert_eq!(vibronic_hamiltonian_term_count(h), 27);
        assert!(vibronic_hamiltonian_omega(h) > 0.0);
        let mut buf = [0 as c_char; 8];
        let (mut v0, mut v1) = (0.0, 0.0);
        assert_eq!(
            vibronic_hamiltonian_term(h, 0, buf.as_mut_ptr(), buf.len(), &mut v0, &mut v1),
            VibronicStatus::Ok
        );
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "IIII");
        assert_eq!(
            vibronic_hamiltonian_term(h, 0, buf.as_mut_ptr(), 4, &mut v0, &mut v1),
            VibronicStatus::InvalidArgument
        );
        assert_eq!(
            vibronic_hamiltonian_term(h, 99, buf.as_mut_ptr(), buf.len(), &mut v0, &mut v1),
            VibronicStatus::InvalidArgument
        );
        let mut json = ptr::null_mut();
        assert_eq!(
            vibronic_hamiltonian_to_json(h, &mut json),
            VibronicStatus::Ok
        );
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"V1\""));
        vibronic_string_free(json);
        vibronic_hamiltonian_free(h);

        let mut sim = ptr::null_mut();
        assert_eq!(vibronic_simulate(s, &mut sim), VibronicStatus::Ok);
        let n = vibronic_simulation_len(sim);
        assert!(n > 2);
        let mut row = VibronicTrajectoryRow::default();
        assert_eq!(
            vibronic_simulation_row(sim, n - 1, &mut row),
            VibronicStatus::Ok
        );
        assert!((row.t - 20.0).abs() < 1e-9);
        assert!((row.norm - 1.0).abs() < 1e-10);
        assert!((row.fon.iter().sum::<f64>() - 2.0).abs() < 1e-8);
        assert_eq!(
            vibronic_simulation_row(sim, n, &mut row),
            VibronicStatus::InvalidArgument
        );
        vibronic_simulation_free(sim);

        assert_eq!(
            vibronic_scenario_run(s, VibronicCommand::Map),
            VibronicStatus::Ok
        );
        assert!(dir.path().join("hamiltonian.json").exists());
        vibronic_scenario_free(s);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/vibronic.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "vibronic_scenario_new",
        "vibronic_simulation_row",
        "vibronic_weyl_count",
        "VIBRONIC_STATUS_OK",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    {
        Ok(status) => assert!(status.success(), "{cc} rejected the header"),
        Err(e) => eprintln!("skipping C syntax check: {cc} unavailable ({e})"),
    }
}
