//! C ABI over `dilation-core`.
//!
//! Objects cross the boundary as opaque handles created by `dil_*_new` or by
//! a computation and released with the matching `dil_*_free`. Every fallible
//! call returns a [`DilStatus`]; on failure `dil_last_error_message` holds a
//! description for the calling thread. Complex matrices are exchanged as
//! row-major interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dilation_core::dilation::{arveson_pure, frazho_bunce, DilationResult};
use dilation_core::lifting::{arveson_lifting, min_norm_lifting, LiftingProblem, LiftingSide, SolverOptions, Verdict};
use dilation_core::linalg::{c, spectral_norm, CMatrix};
use dilation_core::operator::{counterexample_obstruction, counterexample_operators, RowOperator};
use dilation_core::pick::{model_x, pick_matrix, psd_test, solve_np, NpOutcome, PickSystem};
use dilation_core::{fock::TruncatedFock, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotAContraction = 4,
    NotCommuting = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilDilationMode {
    FrazhoBunce = 0,
    Arveson = 1,
}

/// Same numbering as the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilVerdict {
    Feasible = 0,
    Infeasible = 2,
    Indeterminate = 3,
}

impl From<Verdict> for DilVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Feasible => DilVerdict::Feasible,
            Verdict::Infeasible => DilVerdict::Infeasible,
            Verdict::Indeterminate => DilVerdict::Indeterminate,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DilLiftResult {
    pub achieved_norm: f64,
    pub lower_bound: f64,
    pub norm_x: f64,
    pub commutation_residual: f64,
    pub dilation_residual: f64,
    pub iterations: usize,
    /// A `DilVerdict` value.
    pub verdict: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DilCounterexampleResult {
    pub algebraic_margin: f64,
    pub lower_bound: f64,
    pub solver_margin: f64,
    pub row_norm: f64,
    pub certified: bool,
    pub margins_agree: bool,
    /// A `DilVerdict` value.
    pub verdict: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DilNpResult {
    pub pick_min_eigenvalue: f64,
    pub norm_x: f64,
    pub achieved_norm: f64,
    pub max_node_residual: f64,
    /// A `DilVerdict` value.
    pub verdict: i32,
}

/// Opaque complex matrix.
pub struct DilMatrix(CMatrix);

/// Opaque row `[T_1 … T_n]` of square matrices.
pub struct DilRow(RowOperator);

/// Opaque dilation of a row.
pub struct DilDilation(DilationResult);

struct Failure(DilStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension(_) => DilStatus::DimensionMismatch,
            Error::NotAContraction { .. } => DilStatus::NotAContraction,
            Error::NotCommuting { .. } => DilStatus::NotCommuting,
            Error::NotPositive(_)
            | Error::NotIsometric(_)
            | Error::InfeasibleAffine { .. }
            | Error::IllConditioned { .. }
            | Error::Overflow(_) => DilStatus::Numerical,
            Error::Io(_) | Error::Json(_) | Error::Format(_) => DilStatus::Io,
            _ => DilStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let s = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DilStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DilStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DilStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DilStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(DilStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn complex_slice<'a>(data: *const f64, count: usize, what: &str) -> Result<&'a [f64], Failure> {
    if count == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, 2 * count))
}

unsafe fn write_handle<T>(p: *mut *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dil_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// NUL-terminated crate version; static storage.
#[no_mangle]
pub extern "C" fn dil_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New `rows × cols` matrix from `2·rows·cols` interleaved doubles.
///
/// # Safety
/// `data` must be valid for `2·rows·cols` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut DilMatrix) -> DilStatus {
    guard(|| {
        let count = rows.checked_mul(cols).ok_or_else(|| invalid("matrix size overflows"))?;
        let v = complex_slice(data, count, "data")?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        let m = CMatrix::from_row_iterator(rows, cols, v.chunks_exact(2).map(|p| c(p[0], p[1])));
        write_handle(out, DilMatrix(m), "out")
    })
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn dil_matrix_rows(m: *const DilMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn dil_matrix_cols(m: *const DilMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.ncols())
}

/// Copy the entries into `data` (row-major, interleaved); `len` counts doubles.
///
/// # Safety
/// `m` must be a live handle and `data` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dil_matrix_copy(m: *const DilMatrix, data: *mut f64, len: usize) -> DilStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if len < 2 * m.len() {
            return Err(invalid(format!("buffer holds {len} doubles, need {}", 2 * m.len())));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        let buf = std::slice::from_raw_parts_mut(data, 2 * m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let k = 2 * (i * m.ncols() + j);
                buf[k] = m[(i, j)].re;
                buf[k + 1] = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_matrix_norm(m: *const DilMatrix, out: *mut f64) -> DilStatus {
    guard(|| write_out(out, spectral_norm(&deref(m, "matrix")?.0), "out"))
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dil_matrix_free(m: *mut DilMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// New row from `n` square matrices of equal size; the matrices are copied.
///
/// # Safety
/// `blocks` must hold `n` live matrix handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_row_new(blocks: *const *const DilMatrix, n: usize, out: *mut *mut DilRow) -> DilStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("a row needs at least one operator"));
        }
        if blocks.is_null() {
            return Err(null("blocks"));
        }
        let mats = std::slice::from_raw_parts(blocks, n)
            .iter()
            .map(|&b| deref(b, "block").map(|m| m.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        write_handle(out, DilRow(RowOperator::new(mats)?), "out")
    })
}

/// # Safety
/// `t` must be null or a live row handle.
#[no_mangle]
pub unsafe extern "C" fn dil_row_len(t: *const DilRow) -> usize {
    t.as_ref().map_or(0, |t| t.0.n())
}

/// # Safety
/// `t` must be null or a live row handle.
#[no_mangle]
pub unsafe extern "C" fn dil_row_dim(t: *const DilRow) -> usize {
    t.as_ref().map_or(0, |t| t.0.dim())
}

/// `‖Σ T_i T_i*‖^{1/2}`.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_row_norm(t: *const DilRow, out: *mut f64) -> DilStatus {
    guard(|| write_out(out, deref(t, "row")?.0.row_norm(), "out"))
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dil_row_free(t: *mut DilRow) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Dimensions of the full and symmetric Fock spaces truncated at degree `d`.
///
/// # Safety
/// `n_full` and `n_sym` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_fock_dims(n: usize, d: usize, n_full: *mut usize, n_sym: *mut usize) -> DilStatus {
    guard(|| {
        let f = TruncatedFock::new(n, d)?;
        write_out(n_full, f.n_full(), "n_full")?;
        write_out(n_sym, f.n_sym(), "n_sym")
    })
}

/// Dilate a row contraction at truncation degree `d`.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_dilate(
    t: *const DilRow,
    mode: DilDilationMode,
    d: usize,
    tol: f64,
    out: *mut *mut DilDilation,
) -> DilStatus {
    guard(|| {
        let t = &deref(t, "row")?.0;
        t.check_contraction(tol)?;
        let dil = match mode {
            DilDilationMode::FrazhoBunce => frazho_bunce(t, d, tol)?,
            DilDilationMode::Arveson => {
                let (ok, residual) = t.is_commuting(1e-8);
                if !ok {
                    return Err(Error::NotCommuting { residual }.into());
                }
                arveson_pure(t, d, tol)?
            }
        };
        write_handle(out, DilDilation(dil), "out")
    })
}

/// # Safety
/// `dil` must be null or a live dilation handle.
#[no_mangle]
pub unsafe extern "C" fn dil_dilation_dim(dil: *const DilDilation) -> usize {
    dil.as_ref().map_or(0, |d| d.0.dim())
}

/// The `i`-th dilating operator `V_i`, as a new matrix handle.
///
/// # Safety
/// `dil` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_dilation_operator(dil: *const DilDilation, i: usize, out: *mut *mut DilMatrix) -> DilStatus {
    guard(|| {
        let v = &deref(dil, "dilation")?.0.v;
        if i >= v.n() {
            return Err(invalid(format!("operator index {i} out of range for {} operators", v.n())));
        }
        write_handle(out, DilMatrix(v.block(i).clone()), "out")
    })
}

/// The isometric embedding of the original space, as a new matrix handle.
///
/// # Safety
/// `dil` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_dilation_embedding(dil: *const DilDilation, out: *mut *mut DilMatrix) -> DilStatus {
    guard(|| write_handle(out, DilMatrix(deref(dil, "dilation")?.0.embed.clone()), "out"))
}

/// # Safety
/// `dil` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dil_dilation_free(dil: *mut DilDilation) {
    if !dil.is_null() {
        drop(Box::from_raw(dil));
    }
}

/// Minimal-norm lifting of `X` (commuting with `T`) through the dilation of
/// `T` at degree `d`. The verdict is feasible once a lifting of norm at most
/// `‖X‖ + slack` is found. `z_out` may be null.
///
/// # Safety
/// `t` and `x` must be live handles; `result` must be writable; `z_out`
/// must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dil_lift(
    t: *const DilRow,
    x: *const DilMatrix,
    mode: DilDilationMode,
    d: usize,
    tol: f64,
    slack: f64,
    result: *mut DilLiftResult,
    z_out: *mut *mut DilMatrix,
) -> DilStatus {
    guard(|| {
        let t = &deref(t, "row")?.0;
        let x = &deref(x, "x")?.0;
        if !(tol > 0.0) || !(slack > 0.0) {
            return Err(invalid("tol and slack must be positive"));
        }
        t.check_contraction(1e-10)?;
        let opts = SolverOptions { tol, target: Some(spectral_norm(x) + slack), ..Default::default() };
        let sol = match mode {
            DilDilationMode::Arveson => arveson_lifting(t, x, d, 1e-8, &opts)?.2,
            DilDilationMode::FrazhoBunce => {
                let dil = frazho_bunce(t, d, 1e-10)?;
                let problem = LiftingProblem::commutant(
                    LiftingSide::from_dilation(&dil),
                    x.clone(),
                    dilation_core::lifting::ConstraintKind::CoExtension,
                )?
                .with_originals(t.clone(), t.clone());
                problem.check_hypothesis(1e-8)?;
                min_norm_lifting(&problem, &opts)?
            }
        };
        let r = DilLiftResult {
            achieved_norm: sol.achieved_norm,
            lower_bound: sol.lower_bound,
            norm_x: sol.norm_x,
            commutation_residual: sol.residuals.commutation,
            dilation_residual: sol.residuals.dilation,
            iterations: sol.iterations,
            verdict: DilVerdict::from(sol.status.verdict()) as i32,
        };
        write_out(result, r, "result")?;
        if !z_out.is_null() {
            z_out.write(Box::into_raw(Box::new(DilMatrix(sol.z))));
        }
        Ok(())
    })
}

/// The commuting counterexample with parameters `r`, `eps`: algebraic
/// obstruction margin and the solver's certified bound at target norm 1.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_counterexample(
    r: f64,
    eps: f64,
    d: usize,
    tol: f64,
    result: *mut DilCounterexampleResult,
) -> DilStatus {
    guard(|| {
        if !(tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        let obs = counterexample_obstruction(r, eps)?;
        let cx = counterexample_operators(r, eps)?;
        if !cx.contractive {
            return Err(Error::NotAContraction { norm: cx.row_norm_b, tol: 0.0 }.into());
        }
        let dil = arveson_pure(&cx.b, d, 1e-10)?;
        let side = LiftingSide::arveson_compressed(&dil, &cx.embed)?;
        let problem =
            LiftingProblem::commutant(side, cx.x.clone(), dilation_core::lifting::ConstraintKind::Compression)?;
        let opts = SolverOptions { tol, target: Some(1.0), ..Default::default() };
        let sol = min_norm_lifting(&problem, &opts)?;
        let solver_margin = sol.lower_bound - 1.0;
        let verdict = sol.status.verdict();
        let out = DilCounterexampleResult {
            algebraic_margin: obs.minimax,
            lower_bound: sol.lower_bound,
            solver_margin,
            row_norm: cx.row_norm_b,
            certified: verdict == Verdict::Infeasible && solver_margin > 10.0 * tol,
            margins_agree: (obs.minimax > 0.0) == (solver_margin > 0.0),
            verdict: DilVerdict::from(verdict) as i32,
        };
        write_out(result, out, "result")
    })
}

/// Scalar Nevanlinna-Pick problem with `count` nodes in the unit ball of
/// `ℂⁿ`. `nodes` holds `count·n` interleaved complex coordinates, `targets`
/// holds `count`. When `coefficients` is non-null it receives the
/// multiplier's coefficients in the degree-graded multi-index order
/// (`2·coefficients_len` doubles; `coefficients_len` must equal the
/// symmetric Fock dimension at degree `d`).
///
/// # Safety
/// Pointers must be valid for the stated lengths; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dil_np_scalar(
    n: usize,
    count: usize,
    nodes: *const f64,
    targets: *const f64,
    d: usize,
    tol: f64,
    result: *mut DilNpResult,
    coefficients: *mut f64,
    coefficients_len: usize,
) -> DilStatus {
    guard(|| {
        if n == 0 || count == 0 {
            return Err(invalid("n and count must be positive"));
        }
        if !(tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        let total = count.checked_mul(n).ok_or_else(|| invalid("size overflows"))?;
        let coords = complex_slice(nodes, total, "nodes")?;
        let vals = complex_slice(targets, count, "targets")?;
        let pts: Vec<Vec<_>> = coords.chunks_exact(2 * n).map(|p| p.chunks_exact(2).map(|z| c(z[0], z[1])).collect()).collect();
        let w: Vec<_> = vals.chunks_exact(2).map(|z| c(z[0], z[1])).collect();
        let sys = PickSystem::scalar(pts, &w)?;
        let test = psd_test(&pick_matrix(&sys));
        let norm_x = model_x(&sys).norm;
        let opts = SolverOptions { tol, ..Default::default() };
        let mut out = DilNpResult { pick_min_eigenvalue: test.min_eigenvalue, norm_x, ..Default::default() };
        match solve_np(&sys, d, &opts)? {
            NpOutcome::Infeasible { .. } => {
                out.verdict = DilVerdict::Infeasible as i32;
                out.achieved_norm = f64::NAN;
                out.max_node_residual = f64::NAN;
            }
            NpOutcome::Solved(sol) => {
                out.achieved_norm = sol.achieved_norm;
                out.max_node_residual = sol.max_residual();
                out.verdict = DilVerdict::Feasible as i32;
                if !coefficients.is_null() {
                    if coefficients_len != sol.coefficients.len() {
                        return Err(invalid(format!(
                            "coefficient buffer holds {coefficients_len} entries, need {}",
                            sol.coefficients.len()
                        )));
                    }
                    let buf = std::slice::from_raw_parts_mut(coefficients, 2 * coefficients_len);
                    for (k, (_, ck)) in sol.coefficients.iter().enumerate() {
                        buf[2 * k] = ck[(0, 0)].re;
                        buf[2 * k + 1] = ck[(0, 0)].im;
                    }
                }
            }
        }
        write_out(result, out, "result")
    })
}
