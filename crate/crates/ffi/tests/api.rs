use std::ptr;

use dilation_ffi::*;

fn matrix(rows: usize, cols: usize, data: &[f64]) -> *mut DilMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { dil_matrix_new(rows, cols, data.as_ptr(), &mut m) }, DilStatus::Ok);
    m
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { dil_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

/// `diag(a, b)` as a 2 × 2 complex matrix.
fn diag(a: f64, b: f64) -> *mut DilMatrix {
    matrix(2, 2, &[a, 0.0, 0.0, 0.0, 0.0, 0.0, b, 0.0])
}

#[test]
fn matrix_round_trip() {
    let data = [1.0, -2.0, 0.5, 0.25, -0.0, 3.0];
    let m = matrix(1, 3, &data);
    unsafe {
        assert_eq!(dil_matrix_rows(m), 1);
        assert_eq!(dil_matrix_cols(m), 3);
        let mut back = [0.0; 6];
        assert_eq!(dil_matrix_copy(m, back.as_mut_ptr(), back.len()), DilStatus::Ok);
        assert_eq!(back.map(f64::to_bits), data.map(f64::to_bits));
        assert_eq!(dil_matrix_copy(m, back.as_mut_ptr(), 4), DilStatus::InvalidArgument);
        dil_matrix_free(m);
    }
}

#[test]
fn null_and_invalid_inputs() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(dil_matrix_new(2, 2, ptr::null(), &mut m), DilStatus::NullPointer);
        assert!(last_error().contains("null"));
        let nan = [f64::NAN, 0.0];
        assert_eq!(dil_matrix_new(1, 1, nan.as_ptr(), &mut m), DilStatus::InvalidArgument);
        let mut x = 0.0;
        assert_eq!(dil_matrix_norm(ptr::null(), &mut x), DilStatus::NullPointer);
        assert_eq!(dil_row_dim(ptr::null()), 0);
        dil_matrix_free(ptr::null_mut());
        dil_row_free(ptr::null_mut());
        dil_dilation_free(ptr::null_mut());
        let mut row = ptr::null_mut();
        let a = diag(0.1, 0.2);
        let b = matrix(1, 1, &[0.1, 0.0]);
        let blocks = [a as *const DilMatrix, b as *const DilMatrix];
        assert_eq!(dil_row_new(blocks.as_ptr(), 2, &mut row), DilStatus::DimensionMismatch);
        dil_matrix_free(a);
        dil_matrix_free(b);
    }
}

#[test]
fn fock_dims() {
    let (mut full, mut sym) = (0, 0);
    unsafe {
        assert_eq!(dil_fock_dims(2, 3, &mut full, &mut sym), DilStatus::Ok);
        assert_eq!((full, sym), (15, 10));
        assert_eq!(dil_fock_dims(4, 40, &mut full, &mut sym), DilStatus::InvalidArgument);
    }
}

#[test]
fn dilation_and_lifting() {
    unsafe {
        let a = diag(0.3, -0.4);
        let b = diag(0.5, 0.2);
        let blocks = [a as *const DilMatrix, b as *const DilMatrix];
        let mut row = ptr::null_mut();
        assert_eq!(dil_row_new(blocks.as_ptr(), 2, &mut row), DilStatus::Ok);
        let mut norm = 0.0;
        assert_eq!(dil_row_norm(row, &mut norm), DilStatus::Ok);
        assert!((norm - (0.34f64).sqrt()).abs() < 1e-12);

        let mut dil = ptr::null_mut();
        assert_eq!(dil_dilate(row, DilDilationMode::FrazhoBunce, 3, 1e-10, &mut dil), DilStatus::Ok);
        let mut v0 = ptr::null_mut();
        assert_eq!(dil_dilation_operator(dil, 0, &mut v0), DilStatus::Ok);
        assert_eq!(dil_matrix_rows(v0), dil_dilation_dim(dil));
        assert_eq!(dil_dilation_operator(dil, 2, &mut v0), DilStatus::InvalidArgument);
        let mut e = ptr::null_mut();
        assert_eq!(dil_dilation_embedding(dil, &mut e), DilStatus::Ok);
        assert_eq!(dil_matrix_cols(e), 2);
        dil_matrix_free(v0);
        dil_matrix_free(e);
        dil_dilation_free(dil);

        let x = diag(0.3, 0.1);
        let mut res = DilLiftResult::default();
        let mut z = ptr::null_mut();
        let st = dil_lift(row, x, DilDilationMode::Arveson, 4, 1e-6, 1e-3, &mut res, &mut z);
        assert_eq!(st, DilStatus::Ok, "{}", last_error());
        assert_eq!(res.verdict, DilVerdict::Feasible as i32);
        assert!(res.achieved_norm <= res.norm_x + 1e-3);
        assert!(res.commutation_residual < 1e-6 && res.dilation_residual < 1e-6);
        assert!(!z.is_null());
        dil_matrix_free(z);
        dil_matrix_free(x);
        dil_row_free(row);
        dil_matrix_free(a);
        dil_matrix_free(b);
    }
}

#[test]
fn arveson_mode_needs_commuting_row() {
    unsafe {
        let a = matrix(2, 2, &[0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = matrix(2, 2, &[0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0]);
        let blocks = [a as *const DilMatrix, b as *const DilMatrix];
        let mut row = ptr::null_mut();
        assert_eq!(dil_row_new(blocks.as_ptr(), 2, &mut row), DilStatus::Ok);
        let mut dil = ptr::null_mut();
        assert_eq!(dil_dilate(row, DilDilationMode::Arveson, 3, 1e-10, &mut dil), DilStatus::NotCommuting);
        assert!(dil.is_null());
        let big = diag(2.0, 0.0);
        let blocks = [big as *const DilMatrix];
        let mut row2 = ptr::null_mut();
        assert_eq!(dil_row_new(blocks.as_ptr(), 1, &mut row2), DilStatus::Ok);
        assert_eq!(dil_dilate(row2, DilDilationMode::FrazhoBunce, 3, 1e-10, &mut dil), DilStatus::NotAContraction);
        for m in [a, b, big] {
            dil_matrix_free(m);
        }
        dil_row_free(row);
        dil_row_free(row2);
    }
}

#[test]
fn counterexample_certificate() {
    let mut res = DilCounterexampleResult::default();
    unsafe {
        assert_eq!(dil_counterexample(0.5, 0.1, 8, 1e-6, &mut res), DilStatus::Ok);
        assert_eq!(dil_counterexample(0.5, 0.5, 4, 1e-6, &mut res), DilStatus::InvalidArgument);
    }
    let mut res = DilCounterexampleResult::default();
    unsafe { dil_counterexample(0.5, 0.1, 8, 1e-6, &mut res) };
    assert!(res.algebraic_margin > 0.0);
    assert!(res.certified && res.margins_agree);
    assert_eq!(res.verdict, DilVerdict::Infeasible as i32);
}

#[test]
fn np_identity_and_infeasible() {
    let nodes = [0.0, 0.0, 0.5, 0.0];
    let targets = [0.0, 0.0, 0.5, 0.0];
    let mut res = DilNpResult::default();
    let mut coeffs = [0.0; 2 * 9];
    unsafe {
        let st = dil_np_scalar(1, 2, nodes.as_ptr(), targets.as_ptr(), 8, 1e-6, &mut res, coeffs.as_mut_ptr(), 9);
        assert_eq!(st, DilStatus::Ok);
    }
    assert_eq!(res.verdict, DilVerdict::Feasible as i32);
    assert!(res.max_node_residual < 1e-10);
    assert!((coeffs[2] - 1.0).abs() < 1e-5 && coeffs[0].abs() < 1e-5);
    let bad = [0.0, 0.0, 0.9, 0.0];
    unsafe {
        let st = dil_np_scalar(1, 2, nodes.as_ptr(), bad.as_ptr(), 4, 1e-6, &mut res, ptr::null_mut(), 0);
        assert_eq!(st, DilStatus::Ok);
    }
    assert_eq!(res.verdict, DilVerdict::Infeasible as i32);
    assert!(res.pick_min_eigenvalue < 0.0);
}
