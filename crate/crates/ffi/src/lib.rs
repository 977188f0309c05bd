//! C interface to `fracdg`.
//!
//! Every function returns an [`FdgStatus`]; on failure the message is kept
//! per thread and read back with [`fdg_last_error`]. Objects are opaque
//! handles created by `fdg_*_new`/`fdg_solve_*` and released by the
//! matching `fdg_*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fracdg::geometry::{check_wellposedness, WELLPOSEDNESS_SAMPLES_PER_UNIT};
use fracdg::models::{run_full, run_reduced, Discretization, FullSolution, ModelVariant, PresetName, Problem, ReducedSolution};
use fracdg::postproc::{average_across_fracture, l2_error_gamma, DEFAULT_AVERAGING_POINTS, ERROR_QUAD_ORDER};
use fracdg::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Mesh = 4,
    Solver = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for FdgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config { .. } => Self::Config,
            Error::Io(_) => Self::Io,
            Error::NotConverged { .. } | Error::Singular(_) | Error::NotSymmetric(_) => Self::Solver,
            Error::ApertureExitsDomain { .. }
            | Error::InvertedElements { .. }
            | Error::BadFacetAdjacency { .. }
            | Error::InterfaceGrid(_)
            | Error::MissingPairing(_)
            | Error::VariantMeshMismatch { .. } => Self::Mesh,
            _ => Self::InvalidArgument,
        }
    }
}

/// Problem definition: a preset with its aperture scale.
pub struct FdgProblem(Problem);

/// Solution of one reduced variant.
pub struct FdgReduced(ReducedSolution);

/// Solution of the full-dimensional reference model.
pub struct FdgFull {
    sol: FullSolution,
    problem: Problem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: FdgStatus, msg: impl Into<String>) -> FdgStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), FdgStatus>) -> FdgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FdgStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(FdgStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib<T>(r: fracdg::Result<T>) -> Result<T, FdgStatus> {
    r.map_err(|e| fail(FdgStatus::from(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, FdgStatus> {
    if p.is_null() {
        return Err(fail(FdgStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FdgStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, FdgStatus> {
    p.as_ref().ok_or_else(|| fail(FdgStatus::NullPointer, format!("`{name}` is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), FdgStatus> {
    if p.is_null() {
        Err(fail(FdgStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn discretization(h: f64, degree: u32) -> Result<Discretization, FdgStatus> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(fail(FdgStatus::InvalidArgument, format!("mesh size must lie in (0, 1], got {h}")));
    }
    if degree == 0 || degree as usize > fracdg::space::MAX_DEGREE {
        return Err(fail(FdgStatus::InvalidArgument, format!("unsupported degree {degree}")));
    }
    Ok(Discretization {
        h,
        bulk_degree: degree as usize,
        interface_degree: degree as usize,
        ..Default::default()
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `fdg_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fdg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fdg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates one of the built-in problems (`perp-asym`, `perp-sym`,
/// `tangential`, `manufactured`) with aperture scale `d0`.
///
/// # Safety
/// `preset` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_problem_new(preset: *const c_char, d0: f64, out: *mut *mut FdgProblem) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        let name: PresetName = lib(str_arg(preset, "preset")?.parse())?;
        let p = lib(Problem::preset(name, d0))?;
        *out = Box::into_raw(Box::new(FdgProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`fdg_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fdg_problem_free(p: *mut FdgProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Left-hand side of the sufficient coercivity bound and whether it stays below 16.
///
/// # Safety
/// `problem` must be a live handle; `lhs` and `satisfied` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_wellposedness(problem: *const FdgProblem, lhs: *mut f64, satisfied: *mut bool) -> FdgStatus {
    guard(|| {
        let p = &ref_arg(problem, "problem")?.0;
        out_arg(lhs, "lhs")?;
        out_arg(satisfied, "satisfied")?;
        let w = lib(check_wellposedness(&p.profile, &p.perm, &p.frame, WELLPOSEDNESS_SAMPLES_PER_UNIT))?;
        *lhs = w.lhs;
        *satisfied = w.satisfied;
        Ok(())
    })
}

/// Solves reduced variant `I`, `I-R`, `II` or `II-R` with mesh size `h` and
/// polynomial degree `degree` in bulk and fracture.
///
/// # Safety
/// `problem` must be a live handle, `variant` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_solve_reduced(
    problem: *const FdgProblem,
    variant: *const c_char,
    h: f64,
    degree: u32,
    out: *mut *mut FdgReduced,
) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        let p = &ref_arg(problem, "problem")?.0;
        let v: ModelVariant = lib(str_arg(variant, "variant")?.parse())?;
        if v == ModelVariant::Full {
            return Err(fail(FdgStatus::InvalidArgument, "use fdg_solve_full for the full model"));
        }
        let sol = lib(run_reduced(p, v, &discretization(h, degree)?))?;
        *out = Box::into_raw(Box::new(FdgReduced(sol)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`fdg_solve_reduced`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fdg_reduced_free(s: *mut FdgReduced) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Fracture pressure `p_Γ(t)`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_reduced_pressure(s: *const FdgReduced, t: f64, out: *mut f64) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = lib(ref_arg(s, "solution")?.0.pressure_gamma(t))?;
        Ok(())
    })
}

/// Bulk pressure at `(x, y)`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_reduced_bulk_pressure(s: *const FdgReduced, x: f64, y: f64, out: *mut f64) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = lib(ref_arg(s, "solution")?.0.eval_bulk([x, y]))?;
        Ok(())
    })
}

/// Numbers of bulk and fracture unknowns.
///
/// # Safety
/// `s` must be a live handle; `bulk` and `fracture` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_reduced_dofs(s: *const FdgReduced, bulk: *mut usize, fracture: *mut usize) -> FdgStatus {
    guard(|| {
        let s = &ref_arg(s, "solution")?.0;
        out_arg(bulk, "bulk")?;
        out_arg(fracture, "fracture")?;
        *bulk = s.bulk_space.n_dofs();
        *fracture = s.iface_space.n_dofs();
        Ok(())
    })
}

/// Solves the full-dimensional model with the fracture resolved by elements.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_solve_full(problem: *const FdgProblem, h: f64, degree: u32, out: *mut *mut FdgFull) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        let p = &ref_arg(problem, "problem")?.0;
        let sol = lib(run_full(p, &discretization(h, degree)?))?;
        *out = Box::into_raw(Box::new(FdgFull {
            sol,
            problem: p.clone(),
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`fdg_solve_full`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fdg_full_free(s: *mut FdgFull) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Pressure of the full model at `(x, y)`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_full_pressure(s: *const FdgFull, x: f64, y: f64, out: *mut f64) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = lib(ref_arg(s, "solution")?.sol.eval([x, y]))?;
        Ok(())
    })
}

/// `L2(Γ)` distance between the fracture pressure of `reduced` and the
/// transversal average of `full`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdg_interface_error(reduced: *const FdgReduced, full: *const FdgFull, out: *mut f64) -> FdgStatus {
    guard(|| {
        out_arg(out, "out")?;
        let r = &ref_arg(reduced, "reduced")?.0;
        let f = ref_arg(full, "full")?;
        let avg = lib(average_across_fracture(
            &f.sol,
            &f.problem.profile,
            &f.problem.frame,
            DEFAULT_AVERAGING_POINTS,
        ))?;
        *out = lib(l2_error_gamma(r, &avg, &r.grid, ERROR_QUAD_ORDER))?;
        Ok(())
    })
}

/// Runs the experiment in the TOML file `config` and writes its outputs to
/// `out_dir`. Returns [`FdgStatus::Solver`] when some rows failed.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn fdg_run_config(config: *const c_char, out_dir: *const c_char) -> FdgStatus {
    guard(|| {
        let cfg = lib(fracdg::config::parse_config(Path::new(str_arg(config, "config")?)))?;
        let summary = lib(fracdg::cli::run(&cfg, Path::new(str_arg(out_dir, "out_dir")?), false, false))?;
        if summary.failed() {
            return Err(fail(FdgStatus::Solver, "some runs failed; see run.log"));
        }
        Ok(())
    })
}
