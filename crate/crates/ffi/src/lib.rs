//! C ABI over the residual-minimization library: l_p duality maps, best
//! approximations, the geometric constants, and the study runners, exposed
//! through opaque handles and status codes so other languages can bind.
//!
//! Conventions: every fallible call returns a `ResminStatus`; on any
//! non-OK status a human-readable message is available through
//! `resmin_last_error`. Matrices are column-major. Tables returned by the
//! study runners are owned by the caller and freed with
//! `resmin_table_free`.

use resmin::lp::{best_approx_lp, c_bm, compute_c_ao, compute_c_best, GeometricConstants, LpVector};
use resmin::problems::advection::{
    cell_average_study, gibbs_ideal_best_lp, gibbs_overshoot, gibbs_scenario, AdvectionData,
    SourceTerm,
};
use resmin::problems::laplace::{
    graded_instability_study, laplace_convergence_study, LaplaceData, LaplaceExact, LaplaceRhs,
};
use resmin::solve::{solve_mixed, SolverConfig};
use resmin::{scalar_fn, Coefficient};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResminStatus {
    Ok = 0,
    InvalidArgument = 1,
    SolverFailure = 2,
    InternalError = 3,
    NullPointer = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Copy the last error message (UTF-8, NUL-terminated) into `buf`.
/// Returns the full message length in bytes (excluding the terminator);
/// the copy is truncated to `cap - 1` bytes. `buf` may be NULL to query
/// the length.
#[no_mangle]
pub extern "C" fn resmin_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn resmin_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

fn guard<F: FnOnce() -> Result<(), (ResminStatus, String)>>(f: F) -> ResminStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ResminStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic in resmin".to_string());
            set_error(msg);
            ResminStatus::InternalError
        }
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], (ResminStatus, String)> {
    if ptr.is_null() {
        return Err((ResminStatus::NullPointer, "null input pointer".into()));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

/// Duality map of an l_p coefficient vector: out_i receives the l_q image
/// J(v)_i = ||v||_p^{2-p} |v_i|^{p-1} sign(v_i). `out` must hold `len`
/// doubles and may alias `v`.
///
/// # Safety
/// `v` and `out` must point to `len` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn resmin_lp_duality_map(
    p: f64,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> ResminStatus {
    guard(|| {
        let v = unsafe { slice_arg(v, len)? };
        if out.is_null() {
            return Err((ResminStatus::NullPointer, "null output pointer".into()));
        }
        let lv = LpVector::new(v.to_vec(), p)
            .map_err(|e| (ResminStatus::InvalidArgument, e.to_string()))?;
        let j = lv.duality_map();
        unsafe { std::ptr::copy_nonoverlapping(j.entries().as_ptr(), out, len) };
        Ok(())
    })
}

/// Best l_p approximation of `y` over the span of `n_basis` vectors stored
/// column-major in `basis` (each of length `len`). Writes the coefficients
/// (length `n_basis`) and, when non-NULL, the best approximation itself
/// (length `len`).
///
/// # Safety
/// Pointers must reference buffers of the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn resmin_lp_best_approx(
    p: f64,
    y: *const f64,
    len: usize,
    basis: *const f64,
    n_basis: usize,
    tol: f64,
    coeffs_out: *mut f64,
    y0_out: *mut f64,
) -> ResminStatus {
    guard(|| {
        let y = unsafe { slice_arg(y, len)? };
        let basis_flat = unsafe { slice_arg(basis, len * n_basis)? };
        if coeffs_out.is_null() {
            return Err((ResminStatus::NullPointer, "null coefficient output".into()));
        }
        let yv = LpVector::new(y.to_vec(), p)
            .map_err(|e| (ResminStatus::InvalidArgument, e.to_string()))?;
        let mut bs = Vec::with_capacity(n_basis);
        for j in 0..n_basis {
            bs.push(
                LpVector::new(basis_flat[j * len..(j + 1) * len].to_vec(), p)
                    .map_err(|e| (ResminStatus::InvalidArgument, e.to_string()))?,
            );
        }
        let (y0, coeffs) = best_approx_lp(&yv, &bs, tol)
            .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
        unsafe {
            std::ptr::copy_nonoverlapping(coeffs.as_ptr(), coeffs_out, n_basis);
            if !y0_out.is_null() {
                std::ptr::copy_nonoverlapping(y0.entries().as_ptr(), y0_out, len);
            }
        }
        Ok(())
    })
}

/// Banach-Mazur constant of l_p: 2^{|2/p - 1|} (closed form, pure).
#[no_mangle]
pub extern "C" fn resmin_c_bm(p: f64) -> f64 {
    c_bm(p)
}

/// Asymmetric-orthogonality constant of l_p(R^2) by grid + golden-section
/// maximization.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resmin_c_ao(p: f64, grid: usize, out: *mut f64) -> ResminStatus {
    guard(|| {
        if out.is_null() {
            return Err((ResminStatus::NullPointer, "null output".into()));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err((ResminStatus::InvalidArgument, format!("bad exponent {p}")));
        }
        unsafe { *out = compute_c_ao(p, grid) };
        Ok(())
    })
}

/// Best-approximation projection constant of l_p(R^2) (nested search).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resmin_c_best(p: f64, grid: usize, out: *mut f64) -> ResminStatus {
    guard(|| {
        if out.is_null() {
            return Err((ResminStatus::NullPointer, "null output".into()));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err((ResminStatus::InvalidArgument, format!("bad exponent {p}")));
        }
        let v =
            compute_c_best(p, grid).map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Opaque result table: named columns of f64 rows.
pub struct ResminTable {
    columns: Vec<CString>,
    rows: Vec<Vec<f64>>,
}

impl ResminTable {
    fn new(columns: &[&str]) -> Self {
        ResminTable {
            columns: columns.iter().map(|c| CString::new(*c).unwrap()).collect(),
            rows: Vec::new(),
        }
    }
}

fn catch_table(
    f: impl FnOnce() -> Result<ResminTable, (ResminStatus, String)>,
) -> *mut ResminTable {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(t)) => Box::into_raw(Box::new(t)),
        Ok(Err((_, msg))) => {
            set_error(msg);
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("panic in resmin".into());
            std::ptr::null_mut()
        }
    }
}

/// Geometric constants over an exponent list. Columns:
/// p, c_bm, c_ao, one_plus_c_ao, c_best.
///
/// # Safety
/// `p_values` must point to `n_p` doubles.
#[no_mangle]
pub unsafe extern "C" fn resmin_run_constants(
    p_values: *const f64,
    n_p: usize,
    grid: usize,
) -> *mut ResminTable {
    catch_table(|| {
        let ps = unsafe { slice_arg(p_values, n_p)? };
        let mut t = ResminTable::new(&["p", "c_bm", "c_ao", "one_plus_c_ao", "c_best"]);
        for &p in ps {
            let g = GeometricConstants::compute(p, grid)
                .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
            t.rows.push(vec![g.p, g.c_bm, g.c_ao, 1.0 + g.c_ao, g.c_best]);
        }
        Ok(t)
    })
}

/// Cell-average convergence study for the discontinuous-solution
/// advection scenario. Columns: p, n, h, lp_error.
///
/// # Safety
/// `n_values` must point to `n_n` usizes.
#[no_mangle]
pub unsafe extern "C" fn resmin_run_cell_average_study(
    p: f64,
    n_values: *const usize,
    n_n: usize,
) -> *mut ResminTable {
    catch_table(|| {
        if n_values.is_null() {
            return Err((ResminStatus::NullPointer, "null mesh list".into()));
        }
        let ns = unsafe { std::slice::from_raw_parts(n_values, n_n) };
        let jump = 2.0f64.sqrt() / 2.0;
        let data = AdvectionData::new(
            Coefficient::constant(1.0),
            Coefficient::constant(0.0),
            SourceTerm::Dirac(vec![(jump, 2.0)]),
        )
        .with_inflow_left(-1.0);
        let exact = scalar_fn(move |x| if x >= jump { 1.0 } else { -1.0 });
        let rows = cell_average_study(
            &data,
            &exact,
            &[jump],
            (0.0, 1.0),
            &[p],
            ns,
            &SolverConfig::default(),
        )
        .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
        let mut t = ResminTable::new(&["p", "n", "h", "lp_error"]);
        for r in rows {
            t.rows.push(vec![r.p, r.n_elem as f64, r.h, r.lp_error]);
        }
        Ok(t)
    })
}

/// Gibbs overshoot study. Columns: p, k, overshoot, ideal_overshoot.
///
/// # Safety
/// `p_values` / `k_values` must point to `n_p` / `n_k` entries.
#[no_mangle]
pub unsafe extern "C" fn resmin_run_gibbs_study(
    p_values: *const f64,
    n_p: usize,
    n_elem: usize,
    k_values: *const usize,
    n_k: usize,
) -> *mut ResminTable {
    catch_table(|| {
        let ps = unsafe { slice_arg(p_values, n_p)? };
        if k_values.is_null() {
            return Err((ResminStatus::NullPointer, "null degree list".into()));
        }
        let ks = unsafe { std::slice::from_raw_parts(k_values, n_k) };
        let mut t = ResminTable::new(&["p", "k", "overshoot", "ideal_overshoot"]);
        for &p in ps {
            let ideal = gibbs_ideal_best_lp(p, n_elem, 16)
                .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
            let io = gibbs_overshoot(&ideal);
            for &k in ks {
                let prob = gibbs_scenario(p, n_elem, k)
                    .map_err(|e| (ResminStatus::InvalidArgument, e.to_string()))?;
                let sol = solve_mixed(&prob, &SolverConfig::default())
                    .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
                t.rows.push(vec![p, k as f64, gibbs_overshoot(&sol.u_n), io]);
            }
        }
        Ok(t)
    })
}

/// Laplace convergence study; `alpha < 0` selects the smooth f = e^x case,
/// otherwise the manufactured u = x^alpha - x. Columns:
/// n, h, energy_error, r_energy, lp_error, r_lq.
///
/// # Safety
/// `n_values` must point to `n_n` usizes.
#[no_mangle]
pub unsafe extern "C" fn resmin_run_laplace_study(
    p: f64,
    alpha: f64,
    k_trial: usize,
    k_test: usize,
    n_values: *const usize,
    n_n: usize,
) -> *mut ResminTable {
    catch_table(|| {
        if n_values.is_null() {
            return Err((ResminStatus::NullPointer, "null mesh list".into()));
        }
        let ns = unsafe { std::slice::from_raw_parts(n_values, n_n) };
        let (data, exact) = if alpha < 0.0 {
            (
                LaplaceData::new(p, LaplaceRhs::Smooth(scalar_fn(|x| x.exp())))
                    .map_err(|e| (ResminStatus::InvalidArgument, e.to_string()))?,
                LaplaceExact::smooth_exp(),
            )
        } else {
            (
                LaplaceData::new(p, LaplaceRhs::ManufacturedPower { alpha })
                    .map_err(|e| (ResminStatus::InvalidArgument, e.to_string()))?,
                LaplaceExact::power(alpha),
            )
        };
        let study = laplace_convergence_study(
            &data,
            &exact,
            k_trial,
            k_test,
            ns,
            &SolverConfig::default(),
        )
        .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
        let mut t = ResminTable::new(&["n", "h", "energy_error", "r_energy", "lp_error", "r_lq"]);
        for r in study.rows {
            t.rows.push(vec![
                r.n_elem as f64,
                r.h,
                r.energy_error,
                r.r_energy,
                r.lp_error,
                r.r_lq,
            ]);
        }
        Ok(t)
    })
}

/// Graded-mesh instability study. Columns:
/// eps, galerkin, ideal, inexact, oracle_ideal, oracle_inexact, exact_rm.
///
/// # Safety
/// `eps_values` must point to `n_eps` doubles.
#[no_mangle]
pub unsafe extern "C" fn resmin_run_graded_study(
    p: f64,
    alpha: f64,
    eps_values: *const f64,
    n_eps: usize,
) -> *mut ResminTable {
    catch_table(|| {
        let eps = unsafe { slice_arg(eps_values, n_eps)? };
        let study = graded_instability_study(eps, p, alpha, &SolverConfig::default())
            .map_err(|e| (ResminStatus::SolverFailure, e.to_string()))?;
        let mut t = ResminTable::new(&[
            "eps",
            "galerkin",
            "ideal",
            "inexact",
            "oracle_ideal",
            "oracle_inexact",
            "exact_rm",
        ]);
        for r in study.rows {
            t.rows.push(vec![
                r.epsilon,
                r.galerkin,
                r.ideal,
                r.inexact,
                r.oracle_ideal,
                r.oracle_inexact,
                r.exact_rm,
            ]);
        }
        Ok(t)
    })
}

/// Number of rows; 0 for NULL tables.
#[no_mangle]
pub extern "C" fn resmin_table_rows(t: *const ResminTable) -> usize {
    if t.is_null() {
        return 0;
    }
    unsafe { (*t).rows.len() }
}

/// Number of columns; 0 for NULL tables.
#[no_mangle]
pub extern "C" fn resmin_table_cols(t: *const ResminTable) -> usize {
    if t.is_null() {
        return 0;
    }
    unsafe { (*t).columns.len() }
}

/// Fetch one cell.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resmin_table_get(
    t: *const ResminTable,
    row: usize,
    col: usize,
    out: *mut f64,
) -> ResminStatus {
    if t.is_null() || out.is_null() {
        set_error("null pointer".into());
        return ResminStatus::NullPointer;
    }
    let table = unsafe { &*t };
    match table.rows.get(row).and_then(|r| r.get(col)) {
        Some(&v) => {
            unsafe { *out = v };
            ResminStatus::Ok
        }
        None => {
            set_error(format!(
                "index ({row}, {col}) out of bounds for {}x{} table",
                table.rows.len(),
                table.columns.len()
            ));
            ResminStatus::InvalidArgument
        }
    }
}

/// Column name; owned by the table, NULL when out of range.
#[no_mangle]
pub extern "C" fn resmin_table_column_name(t: *const ResminTable, col: usize) -> *const c_char {
    if t.is_null() {
        return std::ptr::null();
    }
    let table = unsafe { &*t };
    match table.columns.get(col) {
        Some(c) => c.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Free a table returned by a study runner. NULL is a no-op.
///
/// # Safety
/// `t` must be a pointer previously returned by a study runner, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn resmin_table_free(t: *mut ResminTable) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duality_map_through_the_abi() {
        let v = [3.0, 4.0];
        let mut out = [0.0; 2];
        let st = unsafe { resmin_lp_duality_map(2.0, v.as_ptr(), 2, out.as_mut_ptr()) };
        assert_eq!(st, ResminStatus::Ok);
        assert!((out[0] - 3.0).abs() < 1e-14 && (out[1] - 4.0).abs() < 1e-14);

        let bad = [f64::NAN, 1.0];
        let st = unsafe { resmin_lp_duality_map(2.0, bad.as_ptr(), 2, out.as_mut_ptr()) };
        assert_eq!(st, ResminStatus::InvalidArgument);
        let mut buf = [0i8; 128];
        let len = resmin_last_error(buf.as_mut_ptr(), buf.len());
        assert!(len > 0);
    }

    #[test]
    fn best_approx_through_the_abi() {
        // projection of (1, 0) onto span{(1,1)/sqrt 2} at p = 2
        let y = [1.0, 0.0];
        let s = 1.0 / 2.0f64.sqrt();
        let basis = [s, s];
        let mut coeffs = [0.0];
        let mut y0 = [0.0; 2];
        let st = unsafe {
            resmin_lp_best_approx(
                2.0,
                y.as_ptr(),
                2,
                basis.as_ptr(),
                1,
                1e-10,
                coeffs.as_mut_ptr(),
                y0.as_mut_ptr(),
            )
        };
        assert_eq!(st, ResminStatus::Ok);
        assert!((y0[0] - 0.5).abs() < 1e-9 && (y0[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constants_and_tables() {
        assert!((resmin_c_bm(2.0) - 1.0).abs() < 1e-15);
        let mut cao = -1.0;
        assert_eq!(unsafe { resmin_c_ao(2.0, 1000, &mut cao) }, ResminStatus::Ok);
        assert_eq!(cao, 0.0);

        let ps = [1.5, 3.0];
        let t = unsafe { resmin_run_constants(ps.as_ptr(), 2, 1000) };
        assert!(!t.is_null());
        assert_eq!(resmin_table_rows(t), 2);
        assert_eq!(resmin_table_cols(t), 5);
        let mut v = 0.0;
        assert_eq!(unsafe { resmin_table_get(t, 0, 1, &mut v) }, ResminStatus::Ok);
        assert!((v - resmin_c_bm(1.5)).abs() < 1e-14);
        let name = resmin_table_column_name(t, 1);
        let s = unsafe { std::ffi::CStr::from_ptr(name) }.to_str().unwrap();
        assert_eq!(s, "c_bm");
        assert_eq!(
            unsafe { resmin_table_get(t, 5, 0, &mut v) },
            ResminStatus::InvalidArgument
        );
        unsafe { resmin_table_free(t) };
    }

    #[test]
    fn laplace_study_through_the_abi() {
        let ns = [2usize, 4, 8];
        let t = unsafe { resmin_run_laplace_study(1.5, -1.0, 1, 2, ns.as_ptr(), 3) };
        assert!(!t.is_null());
        assert_eq!(resmin_table_rows(t), 3);
        // energy errors decrease under refinement
        let mut e0 = 0.0;
        let mut e2 = 0.0;
        unsafe {
            resmin_table_get(t, 0, 2, &mut e0);
            resmin_table_get(t, 2, 2, &mut e2);
            resmin_table_free(t);
        }
        assert!(e2 < 0.5 * e0);
    }

    #[test]
    fn null_and_error_paths() {
        let mut out = 0.0;
        assert_eq!(
            unsafe { resmin_lp_duality_map(2.0, std::ptr::null(), 2, &mut out) },
            ResminStatus::NullPointer
        );
        assert_eq!(
            unsafe { resmin_c_ao(0.5, 100, &mut out) },
            ResminStatus::InvalidArgument
        );
        let t = unsafe { resmin_run_graded_study(1.25, 0.25, std::ptr::null(), 3) };
        assert!(t.is_null());
        unsafe { resmin_table_free(t) };
        assert_eq!(resmin_table_rows(std::ptr::null()), 0);
    }
}
