use std::ffi::{CStr, CString};
use std::ptr;

use epimacro_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = epm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn params() -> *mut EpmParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { epm_params_default(&mut p) }, EpmStatus::Ok);
    p
}

#[test]
fn params_get_set_and_json() {
    let p = params();
    let mut b0 = 0.0;
    unsafe {
        assert_eq!(epm_params_get(p, c("b0").as_ptr(), &mut b0), EpmStatus::Ok);
        assert_eq!(b0, 2.041e-11);
        assert_eq!(epm_params_set(p, c("b0").as_ptr(), 3.0e-11), EpmStatus::Ok);
        epm_params_get(p, c("b0").as_ptr(), &mut b0);
        assert_eq!(b0, 3.0e-11);

        assert_eq!(
            epm_params_set(p, c("alpha").as_ptr(), 1.5),
            EpmStatus::InvalidArgument
        );
        assert!(last_error().contains("alpha"));
        let mut alpha = 0.0;
        epm_params_get(p, c("alpha").as_ptr(), &mut alpha);
        assert_eq!(alpha, 0.3);

        assert_eq!(
            epm_params_get(p, c("nope").as_ptr(), &mut b0),
            EpmStatus::NotFound
        );

        let mut json = ptr::null_mut();
        assert_eq!(epm_params_to_json(p, &mut json), EpmStatus::Ok);
        let mut q = ptr::null_mut();
        assert_eq!(epm_params_from_json(json, &mut q), EpmStatus::Ok);
        let mut qb0 = 0.0;
        epm_params_get(q, c("b0").as_ptr(), &mut qb0);
        assert_eq!(qb0, 3.0e-11);
        epm_string_free(json);
        epm_params_free(q);

        assert_eq!(
            epm_params_from_json(c("{\"a1\": 1}").as_ptr(), &mut q),
            EpmStatus::Parse
        );
        epm_params_free(p);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(epm_params_default(ptr::null_mut()), EpmStatus::NullPointer);
        let mut n = 0usize;
        assert_eq!(
            epm_trajectory_len(ptr::null(), &mut n),
            EpmStatus::NullPointer
        );
        assert!(last_error().contains("trajectory"));
        epm_params_free(ptr::null_mut());
        epm_trajectory_free(ptr::null_mut());
        epm_string_free(ptr::null_mut());
    }
}

#[test]
fn runs_and_reads_back() {
    let p = params();
    unsafe {
        let mut np = ptr::null_mut();
        let mut ni = ptr::null_mut();
        assert_eq!(
            epm_run_preset(p, c("no-pandemic").as_ptr(), &mut np),
            EpmStatus::Ok
        );
        assert_eq!(
            epm_run_preset(p, c("no-intervention").as_ptr(), &mut ni),
            EpmStatus::Ok
        );

        let mut bad = ptr::null_mut();
        assert_eq!(
            epm_run_preset(p, c("other").as_ptr(), &mut bad),
            EpmStatus::NotFound
        );
        assert!(last_error().contains("no-intervention"));

        let mut len = 0usize;
        assert_eq!(epm_trajectory_len(ni, &mut len), EpmStatus::Ok);
        let (mut y, mut m, mut d) = (0, 0, 0);
        assert_eq!(
            epm_trajectory_start(ni, &mut y, &mut m, &mut d),
            EpmStatus::Ok
        );
        assert_eq!((y, m, d), (2020, 1, 22));

        let mut deaths = vec![0.0; len];
        assert_eq!(
            epm_trajectory_column(ni, c("D").as_ptr(), deaths.as_mut_ptr(), len),
            EpmStatus::Ok
        );
        assert!(deaths.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(
            epm_trajectory_column(ni, c("D").as_ptr(), deaths.as_mut_ptr(), len - 1),
            EpmStatus::BufferTooSmall
        );
        assert_eq!(
            epm_trajectory_column(ni, c("Z").as_ptr(), deaths.as_mut_ptr(), len),
            EpmStatus::NotFound
        );

        let mut s = EpmSummary::default();
        assert_eq!(epm_trajectory_summary(ni, np, &mut s), EpmStatus::Ok);
        assert_eq!(s.total_deaths, deaths[len - 1] - deaths[0]);
        assert!(s.max_output_drop_pct > 0.0);
        assert!(s.max_euler_residual < 1e-6);

        let mut pol = ptr::null_mut();
        assert_eq!(
            epm_run_policy(p, c("2020-05-21").as_ptr(), 0.1, 26, &mut pol),
            EpmStatus::Ok
        );
        let mut sp = EpmSummary::default();
        epm_trajectory_summary(pol, np, &mut sp);
        assert!(sp.total_deaths < s.total_deaths);
        assert_eq!(
            epm_run_policy(p, c("21/05/2020").as_ptr(), 0.1, 26, &mut bad),
            EpmStatus::Parse
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ni.csv");
        let cpath = c(path.to_str().unwrap());
        assert_eq!(epm_trajectory_write_csv(ni, cpath.as_ptr()), EpmStatus::Ok);
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body.lines().count(), len + 1);

        epm_trajectory_free(pol);
        epm_trajectory_free(ni);
        epm_trajectory_free(np);
        epm_params_free(p);
    }
}

#[test]
fn header_declares_every_export() {
    let root = env!("CARGO_MANIFEST_DIR");
    let src = std::fs::read_to_string(format!("{root}/src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(format!("{root}/include/epimacro.h")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}
