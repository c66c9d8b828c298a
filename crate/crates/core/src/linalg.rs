//! Dense complex linear algebra helpers. Storage is nalgebra; singular value
//! decompositions go through faer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default tolerance for identities that hold up to roundoff.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Singular values at or below this count as zero when taking ranks.
pub const RANK_TOL: f64 = 1e-8;
/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as roundoff in PSD square roots.
pub const CLAMP_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin singular value decomposition `a = U diag(s) V*`, `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Thin SVD. Non-finite input or a failed iteration is a `Format` error
/// (never expected for finite input).
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd { u: zeros(r, 0), s: Vec::new(), v: zeros(c, 0) });
    }
    if !is_finite(a) {
        return Err(Error::Format("non-finite matrix passed to SVD".into()));
    }
    let f = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Format(format!("SVD did not converge: {e:?}")))?;
    let diag = f.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| diag[j].re.total_cmp(&diag[i].re));
    let (uf, vf) = (from_faer(f.U()), from_faer(f.V()));
    let mut u = zeros(r, k);
    let mut v = zeros(c, k);
    let mut s = Vec::with_capacity(k);
    for (col, &j) in order.iter().enumerate() {
        u.set_column(col, &uf.column(j));
        v.set_column(col, &vf.column(j));
        s.push(diag[j].re);
    }
    Ok(Svd { u, s, v })
}

/// Singular values in descending order; NaN entries for non-finite input.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return Vec::new();
    }
    if !is_finite(a) {
        return vec![f64::NAN; k];
    }
    let mut s: Vec<f64> = match to_faer(a).singular_values() {
        Ok(s) => s,
        Err(_) => return vec![f64::NAN; k],
    };
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn vector_norm(v: &CVector) -> f64 {
    v.norm()
}

/// Hermitian part `(A + A*) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * real(0.5)
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0.first().copied().unwrap_or(0.0)
}

/// Rebuild `V diag(f(λ)) V*` from an eigen-decomposition.
fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = f(v);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Positive square root of a PSD matrix. Eigenvalues in `[-CLAMP_TOL, 0)` are
/// clamped to zero; anything more negative is an error.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(a);
    if let Some(&lo) = values.first() {
        if lo < -CLAMP_TOL {
            return Err(Error::NotPositive(lo));
        }
    }
    Ok(spectral_map(&values, &vectors, |v| v.max(0.0).sqrt()))
}

/// Inverse square root of a positive definite matrix.
pub fn inv_sqrt_pd(a: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(a);
    if let Some(&lo) = values.first() {
        if lo <= 0.0 {
            return Err(Error::NotPositive(lo));
        }
    }
    Ok(spectral_map(&values, &vectors, |v| 1.0 / v.sqrt()))
}

/// Orthonormal basis of the column space, from singular vectors with singular
/// value above `tol`.
pub fn range_basis(a: &CMatrix, tol: f64) -> CMatrix {
    if a.is_empty() {
        return zeros(a.nrows(), 0);
    }
    match svd(a) {
        Ok(f) => {
            let keep = f.s.iter().filter(|&&s| s > tol).count();
            f.u.columns(0, keep).into_owned()
        }
        Err(_) => zeros(a.nrows(), 0),
    }
}

pub fn rank(a: &CMatrix, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the null space (columns), singular values `<= tol`.
pub fn null_space(a: &CMatrix, tol: f64) -> CMatrix {
    let (r, n) = a.shape();
    if n == 0 {
        return zeros(0, 0);
    }
    if r == 0 {
        return identity(n);
    }
    // Pad to at least square so that the SVD returns a full right basis.
    let padded = if r < n {
        let mut p = zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    match svd(&padded) {
        Ok(f) => {
            let keep = f.s.iter().filter(|&&s| s > tol).count();
            f.v.columns(keep, n - keep).into_owned()
        }
        Err(_) => zeros(n, 0),
    }
}

/// Moore-Penrose pseudo-inverse, singular values `<= tol` dropped.
pub fn pinv(a: &CMatrix, tol: f64) -> CMatrix {
    let (r, n) = a.shape();
    if r == 0 || n == 0 {
        return zeros(n, r);
    }
    let Ok(f) = svd(a) else {
        return zeros(n, r);
    };
    let keep = f.s.iter().filter(|&&s| s > tol).count();
    let mut vs = f.v.columns(0, keep).into_owned();
    for (j, mut col) in vs.column_iter_mut().enumerate() {
        col *= real(1.0 / f.s[j]);
    }
    vs * f.u.columns(0, keep).adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal direct sum.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hstack(blocks: &[&CMatrix]) -> Result<CMatrix> {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    if blocks.iter().any(|b| b.nrows() != rows) {
        return Err(Error::Dimension("hstack row counts differ".into()));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.view_mut((0, c0), b.shape()).copy_from(*b);
        c0 += b.ncols();
    }
    Ok(out)
}

/// Vertical concatenation; all blocks must share a column count.
pub fn vstack(blocks: &[&CMatrix]) -> Result<CMatrix> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    if blocks.iter().any(|b| b.ncols() != cols) {
        return Err(Error::Dimension("vstack column counts differ".into()));
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), b.shape()).copy_from(*b);
        r0 += b.nrows();
    }
    Ok(out)
}

/// Frobenius inner product `tr(a* b)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Isometric part of a polar decomposition `a (a* a)^{-1/2}`.
pub fn orthonormalize(a: &CMatrix) -> Result<CMatrix> {
    let g = a.adjoint() * a;
    Ok(a * inv_sqrt_pd(&g)?)
}

/// `‖a* a − I‖`, how far the columns of `a` are from orthonormal.
pub fn isometry_defect(a: &CMatrix) -> f64 {
    spectral_norm(&(a.adjoint() * a - identity(a.ncols())))
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Generalized eigenvalues of the pencil `(a, g)` with `g` positive definite,
/// ascending. Computed as eigenvalues of `g^{-1/2} a g^{-1/2}`.
pub fn generalized_hermitian_eigenvalues(a: &CMatrix, g: &CMatrix) -> Result<Vec<f64>> {
    let gi = inv_sqrt_pd(g)?;
    Ok(hermitian_eigen(&(&gi * a * &gi)).0)
}
