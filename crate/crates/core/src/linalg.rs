//! Dense column-major matrices and the few LAPACK kernels the solvers need.
//!
//! Problem sizes are small enough (a few hundred DOFs for the nonlinear
//! solves, up to ~8k for the square Petrov-Galerkin path) that dense LU with
//! partial pivoting is the right tool everywhere.
//!
//! The build links the netlib reference LAPACK/BLAS (see build.rs for why
//! the OpenBLAS alternative cannot be trusted on this machine). To keep the
//! big factorizations fast, `dgemm_` below interposes a pure-Rust blocked
//! kernel over the reference implementation.

use std::os::raw::c_int;
use thiserror::Error;

/// GEMM interposer: C <- alpha op(A) op(B) + beta C, Fortran calling
/// convention. Exported into the dynamic symbol table so the reference
/// LAPACK's level-3 calls (blocked LU, SVD reductions) bind here instead of
/// the slow reference BLAS. Trailing hidden length arguments of the Fortran
/// character dummies are ignored, as usual for C callers of BLAS.
///
/// # Safety
/// Standard BLAS contract: pointers must reference arrays of the implied
/// sizes with the given leading dimensions.
#[no_mangle]
pub unsafe extern "C" fn dgemm_(
    transa: *const u8,
    transb: *const u8,
    m: *const c_int,
    n: *const c_int,
    k: *const c_int,
    alpha: *const f64,
    a: *const f64,
    lda: *const c_int,
    b: *const f64,
    ldb: *const c_int,
    beta: *const f64,
    c: *mut f64,
    ldc: *const c_int,
) {
    unsafe {
        let (m, n, k) = (*m as usize, *n as usize, *k as usize);
        let (lda, ldb, ldc) = (*lda as isize, *ldb as isize, *ldc as isize);
        let ta = (*transa | 0x20) == b't' || (*transa | 0x20) == b'c';
        let tb = (*transb | 0x20) == b't' || (*transb | 0x20) == b'c';
        if m == 0 || n == 0 {
            return;
        }
        // op(A) is m x k: column-major strides, swapped under transpose
        let (rsa, csa) = if ta { (lda, 1) } else { (1, lda) };
        let (rsb, csb) = if tb { (ldb, 1) } else { (1, ldb) };
        matrixmultiply::dgemm(
            m, k, n, *alpha, a, rsa, csa, b, rsb, csb, *beta, c, 1, ldc,
        );
    }
}

/// Force the interposer into the link (unreferenced no_mangle symbols in an
/// rlib would otherwise be dropped before they can interpose).
#[inline]
fn keep_interposers() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        std::hint::black_box(dgemm_ as *const ());
    });
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (U({0},{0}) = 0 in LU)")]
    Singular(usize),
    #[error("LAPACK routine {routine} failed: illegal argument {arg}")]
    BadArgument { routine: &'static str, arg: i32 },
    #[error("SVD failed to converge ({0} superdiagonals did not converge)")]
    SvdNoConvergence(i32),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

unsafe extern "C" {
    fn dgesv_(
        n: *const c_int,
        nrhs: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        ipiv: *mut c_int,
        b: *mut f64,
        ldb: *const c_int,
        info: *mut c_int,
    );
    fn dgetrf_(
        m: *const c_int,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        ipiv: *mut c_int,
        info: *mut c_int,
    );
    fn dgecon_(
        norm: *const u8,
        n: *const c_int,
        a: *const f64,
        lda: *const c_int,
        anorm: *const f64,
        rcond: *mut f64,
        work: *mut f64,
        iwork: *mut c_int,
        info: *mut c_int,
    );
    fn dgesvd_(
        jobu: *const u8,
        jobvt: *const u8,
        m: *const c_int,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        s: *mut f64,
        u: *mut f64,
        ldu: *const c_int,
        vt: *mut f64,
        ldvt: *const c_int,
        work: *mut f64,
        lwork: *const c_int,
        info: *mut c_int,
    );
    fn dgelss_(
        m: *const c_int,
        n: *const c_int,
        nrhs: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        b: *mut f64,
        ldb: *const c_int,
        s: *mut f64,
        rcond: *const f64,
        rank: *mut c_int,
        work: *mut f64,
        lwork: *const c_int,
        info: *mut c_int,
    );
}

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = &self.data[j * self.rows..(j + 1) * self.rows];
            for i in 0..self.rows {
                y[i] += col[i] * xj;
            }
        }
        y
    }

    /// y = A^T x
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for j in 0..self.cols {
            let col = &self.data[j * self.rows..(j + 1) * self.rows];
            let mut acc = 0.0;
            for i in 0..self.rows {
                acc += col[i] * x[i];
            }
            y[j] = acc;
        }
        y
    }

    /// C = A B (small sizes only; used for projected Hessians)
    pub fn matmul(&self, b: &DMat) -> DMat {
        assert_eq!(self.cols, b.rows);
        let mut c = DMat::zeros(self.rows, b.cols);
        for j in 0..b.cols {
            for k in 0..self.cols {
                let bkj = b.get(k, j);
                if bkj == 0.0 {
                    continue;
                }
                for i in 0..self.rows {
                    c.data[j * self.rows + i] += self.data[k * self.rows + i] * bkj;
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> DMat {
        DMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Max-abs norm, used for scaling checks.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// 1-norm (max column sum), matching LAPACK's '1' norm.
    pub fn norm_one(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..self.cols {
            let s: f64 = self.data[j * self.rows..(j + 1) * self.rows]
                .iter()
                .map(|v| v.abs())
                .sum();
            best = best.max(s);
        }
        best
    }
}

/// Solve A x = b by LU with partial pivoting. Consumes both (LAPACK overwrites).
pub fn solve_lu(mut a: DMat, mut b: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    keep_interposers();
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(LinalgError::Shape(format!(
            "solve_lu: A is {}x{}, b has length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    if n == 0 {
        return Ok(b);
    }
    let ni = n as c_int;
    let nrhs: c_int = 1;
    let mut ipiv = vec![0 as c_int; n];
    let mut info: c_int = 0;
    unsafe {
        dgesv_(
            &ni,
            &nrhs,
            a.data.as_mut_ptr(),
            &ni,
            ipiv.as_mut_ptr(),
            b.as_mut_ptr(),
            &ni,
            &mut info,
        );
    }
    match info {
        0 => Ok(b),
        i if i > 0 => Err(LinalgError::Singular(i as usize)),
        i => Err(LinalgError::BadArgument {
            routine: "dgesv",
            arg: -i,
        }),
    }
}

/// Reciprocal condition number estimate in the 1-norm.
pub fn rcond(a: &DMat) -> Result<f64, LinalgError> {
    keep_interposers();
    let n = a.rows;
    if a.cols != n {
        return Err(LinalgError::Shape("rcond: matrix not square".into()));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let anorm = a.norm_one();
    let mut lu = a.clone();
    let ni = n as c_int;
    let mut ipiv = vec![0 as c_int; n];
    let mut info: c_int = 0;
    unsafe {
        dgetrf_(&ni, &ni, lu.data.as_mut_ptr(), &ni, ipiv.as_mut_ptr(), &mut info);
    }
    if info < 0 {
        return Err(LinalgError::BadArgument {
            routine: "dgetrf",
            arg: -info,
        });
    }
    if info > 0 {
        return Ok(0.0); // exactly singular
    }
    let mut rc = 0.0f64;
    let mut work = vec![0.0f64; 4 * n];
    let mut iwork = vec![0 as c_int; n];
    let norm = b'1';
    unsafe {
        dgecon_(
            &norm,
            &ni,
            lu.data.as_ptr(),
            &ni,
            &anorm,
            &mut rc,
            work.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::BadArgument {
            routine: "dgecon",
            arg: -info,
        });
    }
    Ok(rc)
}

/// Full SVD: A = U diag(s) V^T. Returns (u, s, vt).
pub fn svd(a: &DMat) -> Result<(DMat, Vec<f64>, DMat), LinalgError> {
    keep_interposers();
    let (m, n) = (a.rows, a.cols);
    let mut work_a = a.clone();
    let k = m.min(n);
    let mut s = vec![0.0f64; k.max(1)];
    let mut u = DMat::zeros(m, m);
    let mut vt = DMat::zeros(n, n);
    let (mi, ni) = (m as c_int, n as c_int);
    let jobu = b'A';
    let jobvt = b'A';
    let mut info: c_int = 0;
    // workspace query
    let mut wkopt = 0.0f64;
    let lwork_query: c_int = -1;
    unsafe {
        dgesvd_(
            &jobu,
            &jobvt,
            &mi,
            &ni,
            work_a.data.as_mut_ptr(),
            &mi.max(1),
            s.as_mut_ptr(),
            u.data.as_mut_ptr(),
            &mi.max(1),
            vt.data.as_mut_ptr(),
            &ni.max(1),
            &mut wkopt,
            &lwork_query,
            &mut info,
        );
    }
    let lwork = wkopt as c_int;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        dgesvd_(
            &jobu,
            &jobvt,
            &mi,
            &ni,
            work_a.data.as_mut_ptr(),
            &mi.max(1),
            s.as_mut_ptr(),
            u.data.as_mut_ptr(),
            &mi.max(1),
            vt.data.as_mut_ptr(),
            &ni.max(1),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    match info {
        0 => Ok((u, s, vt)),
        i if i > 0 => Err(LinalgError::SvdNoConvergence(i)),
        i => Err(LinalgError::BadArgument {
            routine: "dgesvd",
            arg: -i,
        }),
    }
}

/// Minimum-norm least squares solve of A x = b (SVD based).
pub fn lstsq(a: &DMat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    keep_interposers();
    let (m, n) = (a.rows, a.cols);
    if b.len() != m {
        return Err(LinalgError::Shape("lstsq: rhs length != rows".into()));
    }
    let mut work_a = a.clone();
    let ldb = m.max(n);
    let mut rhs = vec![0.0f64; ldb];
    rhs[..m].copy_from_slice(b);
    let mut s = vec![0.0f64; m.min(n).max(1)];
    let rcond_in = -1.0f64; // machine-precision rank cutoff
    let mut rank: c_int = 0;
    let (mi, ni, ldbi) = (m as c_int, n as c_int, ldb as c_int);
    let nrhs: c_int = 1;
    let mut info: c_int = 0;
    let mut wkopt = 0.0f64;
    let lwork_query: c_int = -1;
    unsafe {
        dgelss_(
            &mi,
            &ni,
            &nrhs,
            work_a.data.as_mut_ptr(),
            &mi.max(1),
            rhs.as_mut_ptr(),
            &ldbi.max(1),
            s.as_mut_ptr(),
            &rcond_in,
            &mut rank,
            &mut wkopt,
            &lwork_query,
            &mut info,
        );
    }
    let lwork = wkopt as c_int;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        dgelss_(
            &mi,
            &ni,
            &nrhs,
            work_a.data.as_mut_ptr(),
            &mi.max(1),
            rhs.as_mut_ptr(),
            &ldbi.max(1),
            s.as_mut_ptr(),
            &rcond_in,
            &mut rank,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    match info {
        0 => {
            rhs.truncate(n);
            Ok(rhs)
        }
        i if i > 0 => Err(LinalgError::SvdNoConvergence(i)),
        i => Err(LinalgError::BadArgument {
            routine: "dgelss",
            arg: -i,
        }),
    }
}

/// Orthonormal basis of the null space of A (columns), via SVD of A.
pub fn null_space(a: &DMat, tol_rel: f64) -> Result<DMat, LinalgError> {
    let (_u, s, vt) = svd(a)?;
    let n = a.cols;
    let smax = s.first().copied().unwrap_or(0.0);
    let cutoff = smax * tol_rel;
    let rank = s.iter().filter(|&&x| x > cutoff).count();
    let dim = n - rank;
    let mut z = DMat::zeros(n, dim);
    for (kz, k) in (rank..n).enumerate() {
        for i in 0..n {
            z.set(i, kz, vt.get(k, i)); // rows of V^T are right singular vectors
        }
    }
    Ok(z)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
