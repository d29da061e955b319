//! C interface to the mlc solver.
//!
//! Meshes and solutions are opaque handles owned by the caller and released
//! with their `_free` function. Every entry point returns an [`MlcStatus`];
//! on failure a message is available from [`mlc_last_error`] on the same
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mlc::dec::DiscreteForm;
use mlc::mesh::{generate_genus, load_off, EdgeLengthMetric, TriMesh};
use mlc::solver::{solve, ProblemData, Route, Sign, SolveOptions, SolveReport};
use mlc::{ErrorClass, MlcError};

/// Status codes; the first four match the `mlc` exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlcStatus {
    Ok = 0,
    Usage = 1,
    Precondition = 2,
    Numerical = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A closed triangle mesh with its edge lengths.
pub struct MlcMesh {
    mesh: TriMesh,
    metric: EdgeLengthMetric,
}

/// Result of a solve.
pub struct MlcSolution {
    report: SolveReport,
}

/// Scalar summary of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MlcReport {
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub area: f64,
    pub cubic_norm_sq: f64,
    pub gb_residual: f64,
    pub area_identity_residual: f64,
    pub minmax_value: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: MlcError) -> MlcStatus {
    let status = match e.class() {
        ErrorClass::Usage => MlcStatus::Usage,
        ErrorClass::Precondition => MlcStatus::Precondition,
        ErrorClass::Numerical => MlcStatus::Numerical,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), MlcStatus>) -> MlcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlcStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            MlcStatus::Panic
        }
    }
}

fn null(what: &str) -> MlcStatus {
    set_error(format!("{what} is null"));
    MlcStatus::NullPointer
}

unsafe fn slice_or_empty<'a>(p: *const f64, len: usize, what: &str) -> Result<Option<&'a [f64]>, MlcStatus> {
    if p.is_null() {
        return if len == 0 { Ok(None) } else { Err(null(what)) };
    }
    Ok(Some(std::slice::from_raw_parts(p, len)))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mlc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an OFF file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlc_mesh_load_off(path: *const c_char, out: *mut *mut MlcMesh) -> MlcStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(MlcError::InvalidArgument("path is not UTF-8".into())))?;
        let (mesh, metric) = load_off(path).map_err(fail)?;
        store(out, MlcMesh { mesh, metric });
        Ok(())
    })
}

/// Builds a closed surface of the given genus with `subdivisions` rounds of
/// Loop subdivision.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlc_mesh_generate(genus: usize, subdivisions: usize, out: *mut *mut MlcMesh) -> MlcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (mesh, metric) = generate_genus(genus, subdivisions).map_err(fail)?;
        store(out, MlcMesh { mesh, metric });
        Ok(())
    })
}

/// # Safety
/// `mesh` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mlc_mesh_vertex_count(mesh: *const MlcMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_vertices())
}

/// # Safety
/// `mesh` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mlc_mesh_edge_count(mesh: *const MlcMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_edges())
}

/// # Safety
/// `mesh` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mlc_mesh_euler_characteristic(mesh: *const MlcMesh) -> i64 {
    mesh.as_ref().map_or(0, |m| m.mesh.euler_characteristic())
}

/// # Safety
/// `mesh` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlc_mesh_free(mesh: *mut MlcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Spacelike solve. `beta` holds one value per edge and `tau` one per vertex;
/// either may be NULL with length 0 to mean zero. `tol <= 0` selects the
/// default tolerance.
///
/// # Safety
/// Arrays must hold the stated number of values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlc_solve(
    mesh: *const MlcMesh,
    beta: *const f64,
    beta_len: usize,
    tau: *const f64,
    tau_len: usize,
    tol: f64,
    out: *mut *mut MlcSolution,
) -> MlcStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let beta = match slice_or_empty(beta, beta_len, "beta")? {
            Some(b) => DiscreteForm::new(&m.mesh, 1, b.to_vec()).map_err(fail)?,
            None => DiscreteForm::zeros(&m.mesh, 1),
        };
        let tau = match slice_or_empty(tau, tau_len, "tau")? {
            Some(t) => t.to_vec(),
            None => vec![0.0; m.mesh.n_vertices()],
        };
        let data = ProblemData::new(m.mesh.clone(), m.metric.clone(), beta, tau, Sign::Spacelike).map_err(fail)?;
        let mut opts = SolveOptions {
            route: Route::Direct,
            ..Default::default()
        };
        if tol > 0.0 {
            opts.tol = tol;
        }
        let report = solve(&data, &opts).map_err(fail)?;
        store(out, MlcSolution { report });
        Ok(())
    })
}

/// # Safety
/// `solution` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mlc_solution_report(solution: *const MlcSolution, out: *mut MlcReport) -> MlcStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = &s.report;
        *out = MlcReport {
            iterations: r.iterations,
            residual: r.residual,
            energy: r.energy,
            area: r.area,
            cubic_norm_sq: r.cubic_norm_sq,
            gb_residual: r.gb_residual,
            area_identity_residual: r.area_identity_residual,
            minmax_value: r.minmax_value,
        };
        Ok(())
    })
}

/// Copies the conformal factor into `buffer`, which must hold exactly one
/// value per vertex.
///
/// # Safety
/// `buffer` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mlc_solution_factor(solution: *const MlcSolution, buffer: *mut f64, len: usize) -> MlcStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let u = &s.report.u;
        if len != u.len() {
            return Err(fail(MlcError::DimensionMismatch {
                what: "factor buffer",
                got: len,
                expected: u.len(),
            }));
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(u);
        Ok(())
    })
}

/// Report as a JSON string, released with [`mlc_string_free`].
///
/// # Safety
/// `solution` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mlc_solution_report_json(solution: *const MlcSolution, out: *mut *mut c_char) -> MlcStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(s.report.to_json()).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `solution` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlc_solution_free(solution: *mut MlcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mlc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
