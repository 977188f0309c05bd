use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use fracdg_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = fdg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn problem(preset: &str, d0: f64) -> *mut FdgProblem {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fdg_problem_new(c(preset).as_ptr(), d0, &mut p) }, FdgStatus::Ok);
    p
}

#[test]
fn reduced_and_full_solutions_round_trip() {
    let p = problem("perp-sym", 0.05);
    unsafe {
        let mut lhs = 0.0;
        let mut ok = false;
        assert_eq!(fdg_wellposedness(p, &mut lhs, &mut ok), FdgStatus::Ok);
        assert!(lhs > 0.0 && ok);

        let mut r = ptr::null_mut();
        assert_eq!(fdg_solve_reduced(p, c("I").as_ptr(), 0.125, 1, &mut r), FdgStatus::Ok);
        let (mut nb, mut nf) = (0, 0);
        assert_eq!(fdg_reduced_dofs(r, &mut nb, &mut nf), FdgStatus::Ok);
        assert!(nb > 0 && nf > 0);
        let mut pg = 0.0;
        assert_eq!(fdg_reduced_pressure(r, 0.3, &mut pg), FdgStatus::Ok);
        // Symmetric fracture with g = 1 − x1: the fracture pressure is ½.
        assert!((pg - 0.5).abs() < 1e-3, "{pg}");
        let mut pb = 0.0;
        assert_eq!(fdg_reduced_bulk_pressure(r, 0.1, 0.5, &mut pb), FdgStatus::Ok);
        assert!(pb > 0.5 && pb < 1.0);

        let mut f = ptr::null_mut();
        assert_eq!(fdg_solve_full(p, 0.125, 1, &mut f), FdgStatus::Ok);
        let mut pf = 0.0;
        assert_eq!(fdg_full_pressure(f, 0.5, 0.3, &mut pf), FdgStatus::Ok);
        let mut e = 0.0;
        assert_eq!(fdg_interface_error(r, f, &mut e), FdgStatus::Ok);
        assert!(e.is_finite() && e < 1e-2);

        fdg_full_free(f);
        fdg_reduced_free(r);
        fdg_problem_free(p);
    }
}

#[test]
fn errors_are_reported_through_status_and_message() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fdg_problem_new(c("nope").as_ptr(), 0.1, &mut p), FdgStatus::InvalidArgument);
        assert!(p.is_null());
        assert!(last_error().contains("nope"));

        assert_eq!(fdg_problem_new(ptr::null(), 0.1, &mut p), FdgStatus::NullPointer);
        assert_eq!(fdg_problem_new(c("perp-asym").as_ptr(), -1.0, &mut p), FdgStatus::InvalidArgument);

        let p = problem("perp-asym", 0.1);
        let mut r = ptr::null_mut();
        assert_eq!(fdg_solve_reduced(p, c("full").as_ptr(), 0.125, 1, &mut r), FdgStatus::InvalidArgument);
        assert_eq!(fdg_solve_reduced(p, c("I").as_ptr(), 0.125, 9, &mut r), FdgStatus::InvalidArgument);
        assert_eq!(fdg_solve_reduced(p, c("I").as_ptr(), 0.125, 1, ptr::null_mut()), FdgStatus::NullPointer);
        assert!(r.is_null());
        let mut v = 0.0;
        assert_eq!(fdg_reduced_pressure(ptr::null(), 0.5, &mut v), FdgStatus::NullPointer);

        assert_eq!(fdg_solve_reduced(p, c("II").as_ptr(), 0.125, 1, &mut r), FdgStatus::Ok);
        assert_eq!(fdg_reduced_pressure(r, 2.0, &mut v), FdgStatus::InvalidArgument);
        assert!(last_error().contains("outside"), "{}", last_error());
        // A successful call clears the message.
        assert_eq!(fdg_reduced_pressure(r, 0.5, &mut v), FdgStatus::Ok);
        assert!(fdg_last_error().is_null());
        fdg_reduced_free(r);
        fdg_problem_free(p);
        fdg_problem_free(ptr::null_mut());
    }
}

#[test]
fn config_runs_write_their_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.toml");
    std::fs::write(&cfg, "preset = \"perp-sym\"\nvariants = [\"I\", \"II\"]\nd0 = [0.05]\nh = 0.125\nreference = \"exact\"\n").unwrap();
    let out = dir.path().join("out");
    let s = unsafe {
        fdg_run_config(
            c(cfg.to_str().unwrap()).as_ptr(),
            c(out.to_str().unwrap()).as_ptr(),
        )
    };
    assert_eq!(s, FdgStatus::Ok);
    let csv = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    std::fs::write(&cfg, "preset = \"perp-sym\"\nxi = 0.5\n").unwrap();
    let s = unsafe { fdg_run_config(c(cfg.to_str().unwrap()).as_ptr(), c(out.to_str().unwrap()).as_ptr()) };
    assert_eq!(s, FdgStatus::Config);
    assert!(last_error().contains("line 2"));
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(fdg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"fracdg.h\"\nint main(void) {\n  FdgProblem *p = NULL;\n  FdgStatus s = fdg_problem_new(\"perp-asym\", 0.1, &p);\n  fdg_problem_free(p);\n  return s == FDG_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(status.success());
}
