//! Row operators, defects, polynomial calculus, von Neumann checks and the
//! three-dimensional commuting counterexample.

use crate::error::{Error, Result};
use crate::fock::{MultiIndex, TruncatedFock};
use crate::linalg::{
    block_diag, hstack, identity, isometry_defect, kron, psd_sqrt, range_basis, real,
    spectral_norm, zeros, CMatrix, C64, DEFAULT_TOL, RANK_TOL,
};

/// An `n`-tuple of `m × m` matrices viewed as the block row `[T_1 … T_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowOperator {
    blocks: Vec<CMatrix>,
}

impl RowOperator {
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("row operator needs at least one block".into()))?;
        let m = first.nrows();
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != m || b.ncols() != m {
                return Err(Error::Dimension(format!(
                    "block {i} is {}x{}, expected {m}x{m}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        if blocks.iter().any(|b| !crate::linalg::is_finite(b)) {
            return Err(Error::InvalidParameter("non-finite entry".into()));
        }
        Ok(RowOperator { blocks })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        RowOperator { blocks: vec![zeros(dim, dim); n.max(1)] }
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    /// The `m × nm` block row.
    pub fn row_matrix(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.blocks.iter().collect();
        hstack(&refs).expect("blocks share a row count")
    }

    /// Operator norm of the block row.
    pub fn row_norm(&self) -> f64 {
        spectral_norm(&self.row_matrix())
    }

    /// `Σ T_i T_i*`.
    pub fn gram(&self) -> CMatrix {
        self.blocks.iter().fold(zeros(self.dim(), self.dim()), |acc, b| acc + b * b.adjoint())
    }

    /// Maximal pairwise commutator norm `max_{i<j} ‖T_iT_j − T_jT_i‖`.
    pub fn commutator_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let c = &self.blocks[i] * &self.blocks[j] - &self.blocks[j] * &self.blocks[i];
                worst = worst.max(spectral_norm(&c));
            }
        }
        worst
    }

    /// Returns whether all entries commute to `tol`, with the residual.
    pub fn is_commuting(&self, tol: f64) -> (bool, f64) {
        let r = self.commutator_residual();
        (r <= tol, r)
    }

    pub fn check_contraction(&self, tol: f64) -> Result<f64> {
        let norm = self.row_norm();
        if norm > 1.0 + tol {
            return Err(Error::NotAContraction { norm, tol });
        }
        Ok(norm)
    }

    fn check_letters(&self, w: &[usize]) -> Result<()> {
        if let Some(&l) = w.iter().find(|&&l| l >= self.n()) {
            return Err(Error::LetterOutOfRange { letter: l, n: self.n() });
        }
        Ok(())
    }

    /// `T_w = T_{w_1} ⋯ T_{w_k}`; the empty word gives the identity.
    pub fn apply_word(&self, w: &[usize]) -> Result<CMatrix> {
        self.check_letters(w)?;
        let mut acc = identity(self.dim());
        for &l in w.iter().rev() {
            acc = &self.blocks[l] * acc;
        }
        Ok(acc)
    }

    /// `T^k`; requires commuting entries.
    pub fn apply_multiindex(&self, k: &MultiIndex, tol: f64) -> Result<CMatrix> {
        if k.n() != self.n() {
            return Err(Error::Dimension(format!(
                "multi-index has {} entries for {} operators",
                k.n(),
                self.n()
            )));
        }
        let (ok, residual) = self.is_commuting(tol);
        if !ok {
            return Err(Error::NotCommuting { residual });
        }
        let mut acc = identity(self.dim());
        for (i, &ki) in k.0.iter().enumerate() {
            for _ in 0..ki {
                acc = &self.blocks[i] * acc;
            }
        }
        Ok(acc)
    }

    pub fn poly_eval(&self, p: &PolynomialSpec, tol: f64) -> Result<CMatrix> {
        let mut acc = zeros(self.dim(), self.dim());
        if p.commuting {
            let (ok, residual) = self.is_commuting(tol);
            if !ok {
                return Err(Error::NotCommuting { residual });
            }
        }
        for (idx, coeff) in &p.terms {
            let term = if p.commuting {
                if idx.len() != self.n() {
                    return Err(Error::Dimension("multi-index length differs from n".into()));
                }
                self.apply_word(&MultiIndex(idx.clone()).word().0)?
            } else {
                self.apply_word(idx)?
            };
            acc += term * *coeff;
        }
        Ok(acc)
    }

    /// `Φ^k(I)` where `Φ(A) = Σ T_i A T_i*`.
    pub fn phi_power(&self, k: usize) -> CMatrix {
        let mut a = identity(self.dim());
        for _ in 0..k {
            a = self.blocks.iter().fold(zeros(self.dim(), self.dim()), |acc, t| acc + t * &a * t.adjoint());
        }
        a
    }

    /// `‖Φ^k(I)‖ = ‖Σ_{|w|=k} T_w T_w*‖`.
    pub fn purity_index(&self, k: usize) -> f64 {
        spectral_norm(&self.phi_power(k))
    }

    pub fn adjoint_blocks(&self) -> Vec<CMatrix> {
        self.blocks.iter().map(|b| b.adjoint()).collect()
    }

    /// Entrywise direct sum `T ⊕ S`.
    pub fn direct_sum(&self, other: &RowOperator) -> Result<RowOperator> {
        if self.n() != other.n() {
            return Err(Error::Dimension("direct sum of rows of different length".into()));
        }
        RowOperator::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| block_diag(&[a, b]))
                .collect(),
        )
    }

    /// `T ⊗ I_α`.
    pub fn ampliate(&self, alpha: usize) -> RowOperator {
        let id = identity(alpha);
        RowOperator { blocks: self.blocks.iter().map(|b| kron(b, &id)).collect() }
    }

    /// `V* T_i V` for every block.
    pub fn compress(&self, v: &CMatrix) -> Result<RowOperator> {
        if v.nrows() != self.dim() {
            return Err(Error::Dimension("compression basis has wrong row count".into()));
        }
        RowOperator::new(self.blocks.iter().map(|b| v.adjoint() * b * v).collect())
    }

    pub fn scaled(&self, s: f64) -> RowOperator {
        RowOperator { blocks: self.blocks.iter().map(|b| b * real(s)).collect() }
    }
}

/// `D_T = (I − T*T)^{1/2}` on `ℋ^n` and its range.
#[derive(Clone, Debug)]
pub struct DefectData {
    pub defect_op: CMatrix,
    pub defect_rank: usize,
    pub range_basis: CMatrix,
}

/// Defect of the column `T*`: `D_T = (I_{nm} − T*T)^{1/2}`.
pub fn defect(t: &RowOperator, tol: f64) -> Result<DefectData> {
    t.check_contraction(tol)?;
    let row = t.row_matrix();
    let nm = row.ncols();
    let d = psd_sqrt(&(identity(nm) - row.adjoint() * &row))?;
    let basis = range_basis(&d, RANK_TOL);
    Ok(DefectData { defect_rank: basis.ncols(), defect_op: d, range_basis: basis })
}

/// `Δ = (I_m − Σ T_iT_i*)^{1/2}` and its range.
pub fn co_defect(t: &RowOperator, tol: f64) -> Result<DefectData> {
    t.check_contraction(tol)?;
    let d = psd_sqrt(&(identity(t.dim()) - t.gram()))?;
    let basis = range_basis(&d, RANK_TOL);
    Ok(DefectData { defect_rank: basis.ncols(), defect_op: d, range_basis: basis })
}

/// A polynomial in `n` variables. Commuting polynomials index terms by
/// multi-indices, free ones by words (0-based letters).
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSpec {
    pub commuting: bool,
    pub terms: Vec<(Vec<usize>, C64)>,
}

impl PolynomialSpec {
    pub fn commuting(terms: Vec<(Vec<usize>, C64)>) -> Self {
        PolynomialSpec { commuting: true, terms }
    }

    pub fn free(terms: Vec<(Vec<usize>, C64)>) -> Self {
        PolynomialSpec { commuting: false, terms }
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(idx, _)| if self.commuting { idx.iter().sum() } else { idx.len() })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VonNeumannReport {
    /// `‖p(T)‖`.
    pub lhs: f64,
    /// `‖p(model)‖` at truncation `d`.
    pub rhs: f64,
    /// Same at `d + 1`.
    pub rhs_next: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Compare `‖p(T)‖` with `‖p(M)‖` (commuting `p`) or `‖p(L)‖` (free `p`), the
/// model truncated at degree `d`.
pub fn von_neumann_check(t: &RowOperator, p: &PolynomialSpec, d: usize, tol: f64) -> Result<VonNeumannReport> {
    if p.degree() > d {
        return Err(Error::DegreeOutOfRange { degree: p.degree(), max: d });
    }
    let lhs = spectral_norm(&t.poly_eval(p, DEFAULT_TOL)?);
    let model_norm = |deg: usize| -> Result<f64> {
        let f = TruncatedFock::new(t.n(), deg)?;
        Ok(spectral_norm(&crate::fock::model_poly(p, &f)?))
    };
    let rhs = model_norm(d)?;
    let rhs_next = model_norm(d + 1)?;
    let margin = rhs - lhs;
    Ok(VonNeumannReport { lhs, rhs, rhs_next, margin, pass: lhs <= rhs + tol })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DilationRelation {
    pub extension: bool,
    pub co_extension: bool,
    pub sarason_dilation: bool,
    /// `‖B E − E A‖`.
    pub extension_residual: f64,
    /// `‖E* B − A E*‖`.
    pub co_extension_residual: f64,
    /// `max_{k ≤ k_max} ‖E* B^k E − A^k‖`.
    pub power_residual: f64,
}

fn check_isometry(embed: &CMatrix, tol: f64) -> Result<()> {
    let r = isometry_defect(embed);
    if r > tol.max(1e-8) {
        return Err(Error::NotIsometric(r));
    }
    Ok(())
}

/// Test whether `B` on `𝒦` extends, co-extends or dilates `A` on `ℋ`, where
/// `embed: ℋ → 𝒦` is an isometry.
pub fn dilation_relation(a: &CMatrix, b: &CMatrix, embed: &CMatrix, k_max: usize, tol: f64) -> Result<DilationRelation> {
    if embed.ncols() != a.nrows() || embed.nrows() != b.nrows() {
        return Err(Error::Dimension("embedding does not match operator sizes".into()));
    }
    check_isometry(embed, tol)?;
    let ext = spectral_norm(&(b * embed - embed * a));
    let coext = spectral_norm(&(embed.adjoint() * b - a * embed.adjoint()));
    let mut power: f64 = 0.0;
    let mut bk = identity(b.nrows());
    let mut ak = identity(a.nrows());
    for k in 0..=k_max {
        if k > 0 {
            bk = b * bk;
            ak = a * ak;
        }
        power = power.max(spectral_norm(&(embed.adjoint() * &bk * embed - &ak)));
    }
    Ok(DilationRelation {
        extension: ext <= tol,
        co_extension: coext <= tol,
        sarason_dilation: power <= tol,
        extension_residual: ext,
        co_extension_residual: coext,
        power_residual: power,
    })
}

/// Row version: per-block relations plus the word condition
/// `E* V_w E = T_w` for every word with `|w| ≤ k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowDilationRelation {
    pub blocks: Vec<DilationRelation>,
    pub word_residual: f64,
}

pub fn row_dilation_relation(t: &RowOperator, v: &RowOperator, embed: &CMatrix, k_max: usize, tol: f64) -> Result<RowDilationRelation> {
    if t.n() != v.n() {
        return Err(Error::Dimension("rows of different length".into()));
    }
    let blocks = t
        .blocks()
        .iter()
        .zip(v.blocks())
        .map(|(a, b)| dilation_relation(a, b, embed, 1, tol))
        .collect::<Result<Vec<_>>>()?;
    // Breadth-first over words, carrying V_w E and T_w.
    let mut level = vec![(embed.clone(), identity(t.dim()))];
    let mut word_residual: f64 = 0.0;
    for depth in 0..=k_max {
        for (vw_e, tw) in &level {
            word_residual = word_residual.max(spectral_norm(&(embed.adjoint() * vw_e - tw)));
        }
        if depth == k_max {
            break;
        }
        let mut next = Vec::with_capacity(level.len() * t.n());
        for (vw_e, tw) in &level {
            for i in 0..t.n() {
                next.push((v.block(i) * vw_e, t.block(i) * tw));
            }
        }
        level = next;
    }
    Ok(RowDilationRelation { blocks, word_residual })
}

/// The pair `T` on `ℂ²`, its commuting extension `B` on `ℂ³` and the unitary
/// `X = diag(1, −1)` commuting with `T`.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub r: f64,
    pub eps: f64,
    pub t: RowOperator,
    pub b: RowOperator,
    pub x: CMatrix,
    /// Isometry `ℂ² → ℂ³` onto the last two coordinates, where `B` restricts to `T`.
    pub embed: CMatrix,
    pub row_norm_b: f64,
    pub contractive: bool,
}

fn check_counterexample_params(r: f64, eps: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must lie in (0, 1)")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    if eps == r {
        return Err(Error::InvalidParameter("eps must differ from r".into()));
    }
    Ok(())
}

fn counterexample_b(r: f64, e: f64) -> RowOperator {
    let b1 = CMatrix::from_row_slice(3, 3, &[e, 0.0, 0.0, e * (e - r), r, 0.0, e * e, 0.0, 0.0].map(real));
    let b2 = CMatrix::from_row_slice(3, 3, &[e, 0.0, 0.0, e * e, 0.0, 0.0, e * (e - r), 0.0, r].map(real));
    RowOperator::new(vec![b1, b2]).expect("3x3 blocks")
}

pub fn counterexample_operators(r: f64, eps: f64) -> Result<Counterexample> {
    check_counterexample_params(r, eps)?;
    let t1 = CMatrix::from_row_slice(2, 2, &[r, 0.0, 0.0, 0.0].map(real));
    let t2 = CMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, r].map(real));
    let t = RowOperator::new(vec![t1, t2])?;
    let b = counterexample_b(r, eps);
    let x = CMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(real));
    let mut embed = zeros(3, 2);
    embed[(1, 0)] = real(1.0);
    embed[(2, 1)] = real(1.0);
    let row_norm_b = b.row_norm();
    Ok(Counterexample { r, eps, t, b, x, embed, row_norm_b, contractive: row_norm_b <= 1.0 })
}

/// Largest `ε*` such that `B(r, ε)` is a row contraction for every
/// `ε ∈ (0, ε*]`, located by a scan followed by bisection.
pub fn admissible_eps_threshold(r: f64) -> Result<f64> {
    check_counterexample_params(r, r / 2.0)?;
    let excess = |e: f64| counterexample_b(r, e).row_norm() - 1.0;
    let step = 1e-3;
    let mut lo = 0.0;
    let mut hi = step;
    while excess(hi) <= 0.0 {
        lo = hi;
        hi += step;
        if hi > 10.0 {
            return Err(Error::InvalidParameter("no contractivity threshold below 10".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The two affine functions forced into the lower-left column of any
/// commuting norm-one dilation, and how far they are from vanishing together.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ObstructionReport {
    /// `y ↦ a (y − 1)` with `a = ε(ε − r)`.
    pub a: f64,
    /// `y ↦ b (y + 1)` with `b = ε²`.
    pub b: f64,
    pub zero_a: f64,
    pub zero_b: f64,
    pub zeros_disjoint: bool,
    /// `min_y max(|a||y−1|, |b||y+1|)`.
    pub minimax: f64,
    pub minimizer: f64,
}

pub fn counterexample_obstruction(r: f64, eps: f64) -> Result<ObstructionReport> {
    check_counterexample_params(r, eps)?;
    let a = eps * (eps - r);
    let b = eps * eps;
    let (aa, bb) = (a.abs(), b.abs());
    // On [-1, 1] the first branch decreases and the second increases; they
    // cross where |a|(1 − y) = |b|(1 + y). Off the real line both grow.
    let minimizer = (aa - bb) / (aa + bb);
    let minimax = 2.0 * aa * bb / (aa + bb);
    Ok(ObstructionReport {
        a,
        b,
        zero_a: 1.0,
        zero_b: -1.0,
        zeros_disjoint: true,
        minimax,
        minimizer,
    })
}
