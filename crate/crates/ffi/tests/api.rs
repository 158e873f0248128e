use std::ffi::{CStr, CString};
use std::ptr;

use sitepair_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sp_last_error()) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Small but complete RbK system: both orders, l_max 0, compact bases.
const SMALL: &str = r#"
task = "solve"
[atoms]
first = "Rb87"
second = "K40"
[trap]
wavelength = { value = 1030, unit = "nm" }
depth_first = { value = 40, unit = "Er1" }
depth_second = { value = 37.2, unit = "Er1" }
taylor_orders = [2, 6]
[interaction]
kind = "synthetic"
allow_branch_change = true
[basis]
l_max = 0
com = { kind = "linear", r_max = { value = 0.5, unit = "um" }, intervals = 30, order = 8 }
rel = { kind = "composite", split = { value = 20.0, unit = "a0" }, r_max = { value = 0.6, unit = "um" }, linear_intervals = 193, geometric_intervals = 50, order = 8 }
[ci]
com_orbitals = 6
rel_orbitals = 8
"#;

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn trap_frequencies_and_errors() {
    let (mut w, mut o) = (0.0, 0.0);
    let s = unsafe { sp_trap_frequencies(c("Rb87").as_ptr(), c("K40").as_ptr(), 1030.0, 40.0, 37.2, &mut w, &mut o) };
    assert_eq!(s, SpStatus::Ok);
    assert!((w - 35.7).abs() < 0.05, "{w}");
    assert!(o > 0.0 && last_error().is_empty());

    let s = unsafe { sp_trap_frequencies(c("Xx1").as_ptr(), c("K40").as_ptr(), 1030.0, 40.0, 37.2, &mut w, &mut o) };
    assert_ne!(s, SpStatus::Ok);
    assert!(last_error().contains("Xx1"), "{}", last_error());

    let s = unsafe { sp_trap_frequencies(ptr::null(), c("K40").as_ptr(), 1030.0, 40.0, 37.2, &mut w, &mut o) };
    assert_eq!(s, SpStatus::NullPointer);
    let s = unsafe { sp_trap_frequencies(c("Rb87").as_ptr(), c("K40").as_ptr(), 1030.0, 40.0, 37.2, ptr::null_mut(), &mut o) };
    assert_eq!(s, SpStatus::NullPointer);

    let bad = [0xffu8, 0];
    let s = unsafe { sp_trap_frequencies(bad.as_ptr().cast(), c("K40").as_ptr(), 1030.0, 40.0, 37.2, &mut w, &mut o) };
    assert_eq!(s, SpStatus::InvalidUtf8);
}

#[test]
fn bad_configuration_reports_config_error() {
    let mut sys = ptr::null_mut();
    let s = unsafe { sp_system_from_toml(c("task = \"solve\"\n[atoms\n").as_ptr(), &mut sys) };
    assert_eq!(s, SpStatus::Config);
    assert!(sys.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn pseudopotential_energy_and_units() {
    let mut e = 0.0;
    assert_eq!(unsafe { sp_energy_from_asc(0.0, 2.0, 1.0, 0, &mut e) }, SpStatus::Ok);
    assert!((e - 3.0).abs() < 1e-9, "{e}");
    assert_eq!(unsafe { sp_energy_from_asc(0.0, 1.0, 1.0, 0, ptr::null_mut()) }, SpStatus::NullPointer);
    assert!((sp_hartree_to_khz(1.0) - 6.579683920502e12).abs() < 1e3);
}

#[test]
fn solve_and_query_a_point() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(sp_system_from_toml(c(SMALL).as_ptr(), &mut sys), SpStatus::Ok, "{}", last_error());
        let (mut w, mut a_ho, mut xi) = (0.0, 0.0, 0.0);
        assert_eq!(sp_system_scales(sys, 6500.0, &mut w, &mut a_ho, &mut xi), SpStatus::Ok);
        assert!((xi - 6500.0 / a_ho).abs() < 1e-12);

        let mut p = ptr::null_mut();
        assert_eq!(sp_system_solve(sys, f64::NAN, &mut p), SpStatus::InvalidArgument);
        assert_eq!(sp_system_solve(sys, 6500.0, &mut p), SpStatus::Ok, "{}", last_error());
        let mut a = 0.0;
        assert_eq!(sp_point_achieved_a_sc(p, &mut a), SpStatus::Ok);
        assert!((a - 6500.0).abs() < 1e-2, "{a}");

        let ti = SpTag::FirstTrapInduced;
        let mut e = [0.0; 4];
        for (k, l) in [SpLevel::E2, SpLevel::Ci2, SpLevel::E6, SpLevel::Ci6].into_iter().enumerate() {
            assert_eq!(sp_point_energy(p, l, ti, &mut e[k]), SpStatus::Ok, "{}", last_error());
        }
        assert!(e[1] <= e[0] && e[3] <= e[2], "{e:?}");

        let mut l = SpLedger::default();
        assert_eq!(sp_point_ledger(p, ti, &mut l), SpStatus::Ok, "{}", last_error());
        assert_eq!(l.tot, l.geom + l.coup6);
        assert!((l.e2 - sp_hartree_to_khz(e[0])).abs() < 1e-9 * l.e2.abs());

        let r: Vec<f64> = (0..20001).map(|i| 0.55 * i as f64).collect();
        let mut rho = vec![0.0; r.len()];
        assert_eq!(sp_point_radial_density(p, SpLevel::Ci6, ti, r.as_ptr(), r.len(), rho.as_mut_ptr()), SpStatus::Ok, "{}", last_error());
        let norm: f64 = rho.windows(2).map(|w| 0.5 * 0.55 * (w[0] + w[1])).sum();
        assert!((norm - 1.0).abs() < 1e-3, "{norm}");
        assert_eq!(sp_point_radial_density(p, SpLevel::Ci6, ti, ptr::null(), 3, rho.as_mut_ptr()), SpStatus::NullPointer);

        // A second point reuses the cached COM orbitals.
        let mut q = ptr::null_mut();
        assert_eq!(sp_system_solve(sys, -185.0, &mut q), SpStatus::Ok, "{}", last_error());
        let mut f = 0.0;
        assert_eq!(sp_point_energy(q, SpLevel::E2, ti, &mut f), SpStatus::Ok);
        assert!(f < e[0], "{f} vs {}", e[0]);

        sp_point_free(q);
        sp_point_free(p);
        sp_system_free(sys);
        sp_point_free(ptr::null_mut());
        sp_system_free(ptr::null_mut());
    }
}
