//! Truncated isometric co-extensions, pure Arveson dilations, spherical
//! unitaries and Wold decomposition data.

use crate::error::{Error, Result};
use crate::fock::{creation_row, multiplier_row, TruncatedFock};
use crate::linalg::{
    hstack, identity, isometry_defect, kron, null_space, orthonormalize, range_basis,
    spectral_norm, zeros, CMatrix, C64, RANK_TOL,
};
use crate::operator::{co_defect, defect, RowOperator};

pub const PURITY_TOL: f64 = 1e-8;
pub const SPHERE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DilationKind {
    IsometricCoext,
    ArvesonPure,
    Assembled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ShiftKind {
    /// `M_z ⊗ I_α` on truncated `H²_n ⊗ ℂ^α`.
    Symmetric,
    /// `L ⊗ I_α` on truncated `F_n ⊗ ℂ^α`.
    Free,
}

/// Joint eigenvalues on the unit sphere with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalUnitary {
    pub points: Vec<Vec<C64>>,
    pub multiplicities: Vec<usize>,
}

impl SphericalUnitary {
    pub fn new(points: Vec<Vec<C64>>, multiplicities: Vec<usize>) -> Result<Self> {
        if points.len() != multiplicities.len() {
            return Err(Error::Dimension("one multiplicity per point is required".into()));
        }
        if let Some(p) = points.first() {
            if points.iter().any(|q| q.len() != p.len()) {
                return Err(Error::Dimension("points of different dimension".into()));
            }
        }
        for p in &points {
            let norm = crate::fock::ball_norm(p);
            if (norm - 1.0).abs() > SPHERE_TOL {
                return Err(Error::OffSphere { norm });
            }
        }
        Ok(SphericalUnitary { points, multiplicities })
    }

    /// Single-multiplicity points.
    pub fn simple(points: Vec<Vec<C64>>) -> Result<Self> {
        let m = vec![1; points.len()];
        Self::new(points, m)
    }

    pub fn empty() -> Self {
        SphericalUnitary { points: Vec::new(), multiplicities: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// Joint eigenvalue of every basis coordinate, in realization order.
    pub fn coordinate_points(&self) -> Vec<&[C64]> {
        self.points
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(p, &m)| std::iter::repeat_n(p.as_slice(), m))
            .collect()
    }

    /// Dimension of the joint commutant `{U_i, U_i*}'`: the sum of squared
    /// multiplicities of distinct joint eigenvalues.
    pub fn commutant_dim(&self) -> usize {
        let coords = self.coordinate_points();
        let mut seen = vec![false; coords.len()];
        let mut total = 0;
        for i in 0..coords.len() {
            if seen[i] {
                continue;
            }
            let mut count = 0;
            for j in i..coords.len() {
                if !seen[j] && same_point(coords[i], coords[j]) {
                    seen[j] = true;
                    count += 1;
                }
            }
            total += count * count;
        }
        total
    }
}

pub(crate) fn same_point(a: &[C64], b: &[C64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= SPHERE_TOL)
}

/// `U_i = diag(μ_i)` repeated by multiplicity.
pub fn spherical_unitary_realize(s: &SphericalUnitary, n: usize) -> Result<RowOperator> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("spherical unitary has no points".into()));
    }
    if s.points[0].len() != n {
        return Err(Error::Dimension(format!("points live in C^{}, expected C^{n}", s.points[0].len())));
    }
    let coords = s.coordinate_points();
    let blocks = (0..n)
        .map(|i| CMatrix::from_diagonal(&crate::linalg::CVector::from_iterator(coords.len(), coords.iter().map(|p| p[i]))))
        .collect();
    RowOperator::new(blocks)
}

/// One direct summand of a structured dilation space.
#[derive(Clone, Debug, PartialEq)]
pub enum Summand {
    Shift { kind: ShiftKind, n: usize, d: usize, multiplicity: usize },
    Spherical(SphericalUnitary),
    Opaque { dim: usize },
}

impl Summand {
    pub fn dim(&self) -> usize {
        match self {
            Summand::Shift { kind, n, d, multiplicity } => {
                let f = TruncatedFock::new(*n, *d).expect("validated at construction");
                let base = match kind {
                    ShiftKind::Symmetric => f.n_sym(),
                    ShiftKind::Free => f.n_full(),
                };
                base * multiplicity
            }
            Summand::Spherical(s) => s.dim(),
            Summand::Opaque { dim } => *dim,
        }
    }
}

/// Start offsets of each summand.
pub fn layout_offsets(layout: &[Summand]) -> Vec<usize> {
    let mut out = Vec::with_capacity(layout.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in layout {
        acc += s.dim();
        out.push(acc);
    }
    out
}

#[derive(Clone, Debug)]
pub struct DilationResult {
    pub v: RowOperator,
    /// Isometry `ℋ → 𝒦`.
    pub embed: CMatrix,
    pub trunc_degree: usize,
    pub kind: DilationKind,
    pub multiplicity: usize,
    pub layout: Vec<Summand>,
    /// Orthonormal basis of the coordinates below the top degree.
    pub interior: CMatrix,
    /// For Arveson dilations, the unnormalized map `W` whose polar part is `embed`.
    pub generator_map: Option<CMatrix>,
    /// `‖Φ^{d+1}(I)‖` for Arveson dilations.
    pub purity_tail: Option<f64>,
    pub warnings: Vec<String>,
}

impl DilationResult {
    pub fn dim(&self) -> usize {
        self.v.dim()
    }
}

fn coordinate_selection(dim: usize, keep: &[usize]) -> CMatrix {
    let mut e = zeros(dim, keep.len());
    for (col, &row) in keep.iter().enumerate() {
        e[(row, col)] = C64::new(1.0, 0.0);
    }
    e
}

/// Minimal isometric co-extension on `ℋ ⊕ (F_n^{≤ d−1} ⊗ 𝒟)`, `𝒟 = ran D_T`.
/// A vector in `ℋ` has degree 0 and `ξ_w ⊗ g` has degree `|w| + 1`; the top
/// degree `d` is annihilated.
pub fn frazho_bunce(t: &RowOperator, d: usize, tol: f64) -> Result<DilationResult> {
    if d == 0 {
        return Err(Error::InvalidParameter("truncation degree must be at least 1".into()));
    }
    let dd = defect(t, tol)?;
    let (n, m) = (t.n(), t.dim());
    let alpha = dd.defect_rank;
    let f = TruncatedFock::new(n, d - 1)?;
    let dim = m + f.n_full() * alpha;
    // Q* D_T, restricted to the i-th input block.
    let qd = dd.range_basis.adjoint() * &dd.defect_op;
    let off = |widx: usize| m + widx * alpha;
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = zeros(dim, dim);
        v.view_mut((0, 0), (m, m)).copy_from(t.block(i));
        v.view_mut((off(0), 0), (alpha, m)).copy_from(&qd.columns(i * m, m));
        for (widx, w) in f.words().iter().enumerate() {
            if w.len() + 1 < d {
                let mut iw = Vec::with_capacity(w.len() + 1);
                iw.push(i);
                iw.extend_from_slice(&w.0);
                let target = f.word_index(&crate::fock::Word(iw))?;
                for a in 0..alpha {
                    v[(off(target) + a, off(widx) + a)] = C64::new(1.0, 0.0);
                }
            }
        }
        blocks.push(v);
    }
    let mut interior: Vec<usize> = (0..m).collect();
    for (widx, w) in f.words().iter().enumerate() {
        if w.len() + 1 < d {
            interior.extend(off(widx)..off(widx) + alpha);
        }
    }
    Ok(DilationResult {
        v: RowOperator::new(blocks)?,
        embed: coordinate_selection(dim, &(0..m).collect::<Vec<_>>()),
        trunc_degree: d,
        kind: DilationKind::IsometricCoext,
        multiplicity: alpha,
        layout: vec![Summand::Opaque { dim }],
        interior: coordinate_selection(dim, &interior),
        generator_map: None,
        purity_tail: None,
        warnings: Vec::new(),
    })
}

/// Contract residuals of an isometric co-extension.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CoextensionReport {
    /// `max_{i,j} ‖E_int*(V_i*V_j − δ_ij)E_int‖`.
    pub isometry_residual: f64,
    /// `max_{i≠j} ‖V_i* V_j‖` on the interior, included in the line above but
    /// reported separately.
    pub orthogonality_residual: f64,
    /// `max_i ‖E* V_i − T_i E*‖`.
    pub co_extension_residual: f64,
    /// `max_{|w| ≤ d} ‖E* V_w E − T_w‖`.
    pub word_residual: f64,
    /// `dim span{V_w ℋ : |w| ≤ d}` and `dim 𝒦`.
    pub span_rank: usize,
    pub dim: usize,
}

pub fn verify_coextension(t: &RowOperator, dil: &DilationResult) -> Result<CoextensionReport> {
    let v = &dil.v;
    let e = &dil.embed;
    let p = &dil.interior;
    let mut iso: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for i in 0..v.n() {
        for j in 0..v.n() {
            let g = p.adjoint() * v.block(i).adjoint() * v.block(j) * p;
            if i == j {
                iso = iso.max(spectral_norm(&(g - identity(p.ncols()))));
            } else {
                let r = spectral_norm(&g);
                orth = orth.max(r);
                iso = iso.max(r);
            }
        }
    }
    let co = t
        .blocks()
        .iter()
        .zip(v.blocks())
        .map(|(ti, vi)| spectral_norm(&(e.adjoint() * vi - ti * e.adjoint())))
        .fold(0.0, f64::max);
    let rel = crate::operator::row_dilation_relation(t, v, e, dil.trunc_degree, f64::INFINITY)?;
    // Minimality: grow span{V_w ℋ} level by level.
    let mut span = range_basis(e, RANK_TOL);
    let mut frontier = span.clone();
    for _ in 0..dil.trunc_degree {
        let cands: Vec<CMatrix> = v.blocks().iter().map(|b| b * &frontier).collect();
        let refs: Vec<&CMatrix> = cands.iter().collect();
        let c = hstack(&refs)?;
        let resid = &c - &span * (span.adjoint() * &c);
        frontier = range_basis(&resid, RANK_TOL);
        if frontier.ncols() == 0 {
            break;
        }
        span = hstack(&[&span, &frontier])?;
    }
    Ok(CoextensionReport {
        isometry_residual: iso,
        orthogonality_residual: orth,
        co_extension_residual: co,
        word_residual: rel.word_residual,
        span_rank: span.ncols(),
        dim: v.dim(),
    })
}

/// Pure Arveson dilation `T̃ = M_z ⊗ I_α` with
/// `W h = Σ_k sqrt|P_k| e_k ⊗ Q* Δ T^{*k} h`, `Δ = (I − Σ T_iT_i*)^{1/2}`.
pub fn arveson_pure(t: &RowOperator, d: usize, tol: f64) -> Result<DilationResult> {
    let (ok, residual) = t.is_commuting(tol.max(crate::linalg::DEFAULT_TOL));
    if !ok {
        return Err(Error::NotCommuting { residual });
    }
    let cd = co_defect(t, tol)?;
    let alpha = cd.defect_rank;
    if alpha == 0 {
        return Err(Error::Hypothesis("Σ T_iT_i* = I: no pure part to dilate".into()));
    }
    let (n, m) = (t.n(), t.dim());
    let f = TruncatedFock::new(n, d)?;
    let qd = cd.range_basis.adjoint() * &cd.defect_op;
    let adj = RowOperator::new(t.adjoint_blocks())?;
    let mut w = zeros(f.n_sym() * alpha, m);
    for (pos, k) in f.multi_indices().iter().enumerate() {
        let tk = adj.apply_multiindex(k, f64::INFINITY)?;
        let row = (&qd * tk) * C64::new((f.count_at(pos) as f64).sqrt(), 0.0);
        w.view_mut((pos * alpha, 0), (alpha, m)).copy_from(&row);
    }
    let tail = t.purity_index(d + 1);
    let mut warnings = Vec::new();
    if tail > PURITY_TOL {
        warnings.push(format!("purity tail ‖Φ^{}(I)‖ = {tail:e} exceeds {PURITY_TOL:e}", d + 1));
    }
    let embed = orthonormalize(&w)
        .map_err(|_| Error::Hypothesis("Arveson map is rank deficient; T has a non-pure part".into()))?;
    let v = multiplier_row(&f).ampliate(alpha);
    let interior: Vec<usize> = (0..f.multi_degree_range(d).start * alpha).collect();
    let dim = v.dim();
    Ok(DilationResult {
        v,
        embed,
        trunc_degree: d,
        kind: DilationKind::ArvesonPure,
        multiplicity: alpha,
        layout: vec![Summand::Shift { kind: ShiftKind::Symmetric, n, d, multiplicity: alpha }],
        interior: coordinate_selection(dim, &interior),
        generator_map: Some(w),
        purity_tail: Some(tail),
        warnings,
    })
}

/// Residuals of the Arveson map.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ArvesonReport {
    /// `‖W*W − (I − Φ^{d+1}(I))‖`.
    pub truncation_identity: f64,
    /// `max_i ‖P_{<d}(T̃_i* W − W T_i*)‖`.
    pub intertwining: f64,
    /// `max_i ‖P_d W T_i*‖`, the top-degree spill.
    pub top_degree_spill: f64,
    /// `max_i ‖(I − EE*) T̃_i* E‖`.
    pub co_invariance: f64,
    pub isometry_defect: f64,
}

pub fn verify_arveson(t: &RowOperator, dil: &DilationResult) -> Result<ArvesonReport> {
    let w = dil
        .generator_map
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("not an Arveson dilation".into()))?;
    let m = t.dim();
    let gram = w.adjoint() * w;
    let ident = spectral_norm(&(gram - (identity(m) - t.phi_power(dil.trunc_degree + 1))));
    let p_in = &dil.interior;
    let k = dil.dim();
    let mut inter: f64 = 0.0;
    let mut spill: f64 = 0.0;
    let mut coinv: f64 = 0.0;
    let proj_out = identity(k) - &dil.embed * dil.embed.adjoint();
    let p_top = identity(k) - p_in * p_in.adjoint();
    for (ti, vi) in t.blocks().iter().zip(dil.v.blocks()) {
        let wt = w * ti.adjoint();
        inter = inter.max(spectral_norm(&(p_in.adjoint() * (vi.adjoint() * w - &wt))));
        spill = spill.max(spectral_norm(&(&p_top * &wt)));
        coinv = coinv.max(spectral_norm(&(&proj_out * vi.adjoint() * &dil.embed)));
    }
    Ok(ArvesonReport {
        truncation_identity: ident,
        intertwining: inter,
        top_degree_spill: spill,
        co_invariance: coinv,
        isometry_defect: isometry_defect(&dil.embed),
    })
}

/// `M^{(α)} ⊕ U` (or `L^{(α)} ⊕ U`) with `ℋ = 𝒦`.
pub fn assemble_dilation(kind: ShiftKind, n: usize, alpha: usize, u: &SphericalUnitary, d: usize) -> Result<DilationResult> {
    let f = TruncatedFock::new(n, d)?;
    let mut parts: Vec<RowOperator> = Vec::new();
    let mut layout = Vec::new();
    let mut interior = Vec::new();
    if alpha > 0 {
        let (row, top_start) = match kind {
            ShiftKind::Symmetric => (multiplier_row(&f), f.multi_degree_range(d).start),
            ShiftKind::Free => (creation_row(&f), f.word_degree_range(d).start),
        };
        parts.push(row.ampliate(alpha));
        layout.push(Summand::Shift { kind, n, d, multiplicity: alpha });
        interior.extend(0..top_start * alpha);
    }
    if !u.is_empty() {
        let off = parts.first().map_or(0, |p| p.dim());
        parts.push(spherical_unitary_realize(u, n)?);
        layout.push(Summand::Spherical(u.clone()));
        interior.extend(off..off + u.dim());
    }
    let v = match parts.len() {
        0 => return Err(Error::InvalidParameter("empty dilation: α = 0 and no spherical part".into())),
        1 => parts.pop().expect("one part"),
        _ => parts[0].direct_sum(&parts[1])?,
    };
    let dim = v.dim();
    Ok(DilationResult {
        v,
        embed: identity(dim),
        trunc_degree: d,
        kind: DilationKind::Assembled,
        multiplicity: alpha,
        layout,
        interior: coordinate_selection(dim, &interior),
        generator_map: None,
        purity_tail: None,
        warnings: Vec::new(),
    })
}

impl DilationResult {
    /// Replace the embedding by another isometry into `𝒦`.
    pub fn with_embedding(mut self, embed: CMatrix) -> Result<Self> {
        if embed.nrows() != self.dim() {
            return Err(Error::Dimension("embedding has wrong row count".into()));
        }
        let r = isometry_defect(&embed);
        if r > 1e-8 {
            return Err(Error::NotIsometric(r));
        }
        self.embed = embed;
        Ok(self)
    }

    /// Coordinates of degree `≤ j` in the shift summand plus the whole
    /// spherical summand: a co-invariant subspace of an assembled dilation.
    pub fn low_degree_subspace(&self, j: usize) -> Result<CMatrix> {
        let offsets = layout_offsets(&self.layout);
        let mut keep = Vec::new();
        for (s, &off) in self.layout.iter().zip(&offsets) {
            match s {
                Summand::Shift { kind, n, d, multiplicity } => {
                    let f = TruncatedFock::new(*n, *d)?;
                    let end = match kind {
                        ShiftKind::Symmetric => f.multi_degree_range(j.min(*d)).end,
                        ShiftKind::Free => f.word_degree_range(j.min(*d)).end,
                    };
                    keep.extend(off..off + end * multiplicity);
                }
                Summand::Spherical(u) => keep.extend(off..off + u.dim()),
                Summand::Opaque { .. } => {
                    return Err(Error::InvalidParameter("opaque summand has no degree structure".into()))
                }
            }
        }
        Ok(coordinate_selection(self.dim(), &keep))
    }
}

/// Basis of `{A : Σ_j U_j A U_j* = A}`, solved as a linear system on `vec A`.
pub fn davie_jewell_fixed_points(u: &RowOperator, tol: f64) -> CMatrix {
    let k = u.dim();
    let mut op = -identity(k * k);
    for b in u.blocks() {
        op += kron(&b.conjugate(), b);
    }
    null_space(&op, tol)
}

/// Reshape a column-major `vec A` back to `A`.
pub fn unvec(v: &crate::linalg::CVector, k: usize) -> CMatrix {
    CMatrix::from_column_slice(k, k, v.as_slice())
}

#[derive(Clone, Debug)]
pub struct WoldData {
    pub wandering_basis: CMatrix,
    pub shift_part_dim: usize,
    pub cuntz_part_dim: usize,
    /// `max_{i,j} ‖E_int*(V_i*V_j − δ_ij)E_int‖`.
    pub isometry_residual: f64,
    /// `max_i ‖V_i* ℳ‖`.
    pub wandering_residual: f64,
    /// Orthonormal basis of `span{V_w ℳ : |w| ≤ depth}`.
    pub shift_basis: CMatrix,
}

/// Wold data of a row contraction on the given interior. `ℳ` is the range of
/// `I − Σ V_iV_i*`; the shift part is grown level by level up to `depth`.
pub fn wold_data(v: &RowOperator, interior: &CMatrix, depth: usize, tol: f64) -> Result<WoldData> {
    v.check_contraction(tol)?;
    if interior.nrows() != v.dim() {
        return Err(Error::Dimension("interior basis has wrong row count".into()));
    }
    let k = v.dim();
    let mut iso: f64 = 0.0;
    for i in 0..v.n() {
        for j in 0..v.n() {
            let mut g = interior.adjoint() * v.block(i).adjoint() * v.block(j) * interior;
            if i == j {
                g -= identity(interior.ncols());
            }
            iso = iso.max(spectral_norm(&g));
        }
    }
    let defect_proj = identity(k) - v.gram();
    let wandering = range_basis(&defect_proj, RANK_TOL);
    let wres = v
        .blocks()
        .iter()
        .map(|b| spectral_norm(&(b.adjoint() * &wandering)))
        .fold(0.0, f64::max);
    let mut span = wandering.clone();
    let mut frontier = wandering.clone();
    for _ in 0..depth {
        if frontier.ncols() == 0 {
            break;
        }
        let cands: Vec<CMatrix> = v.blocks().iter().map(|b| b * &frontier).collect();
        let refs: Vec<&CMatrix> = cands.iter().collect();
        let c = hstack(&refs)?;
        let resid = &c - &span * (span.adjoint() * &c);
        frontier = range_basis(&resid, RANK_TOL);
        span = hstack(&[&span, &frontier])?;
    }
    let in_span = span.adjoint() * interior;
    let shift_dim = crate::linalg::rank(&in_span, RANK_TOL);
    let outside = interior - &span * in_span;
    let cuntz_dim = crate::linalg::rank(&outside, RANK_TOL);
    Ok(WoldData {
        wandering_basis: wandering,
        shift_part_dim: shift_dim,
        cuntz_part_dim: cuntz_dim,
        isometry_residual: iso,
        wandering_residual: wres,
        shift_basis: span,
    })
}

/// The assembled summands as one block-diagonal matrix per letter; used by
/// tests that need `M^{(α)}` and `U` separately.
pub fn summand_blocks(dil: &DilationResult) -> Vec<(Summand, std::ops::Range<usize>)> {
    let offs = layout_offsets(&dil.layout);
    dil.layout
        .iter()
        .cloned()
        .zip(offs.windows(2).map(|w| w[0]..w[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real, CVector};
    use crate::operator::PolynomialSpec;
    use crate::sampling;

    #[test]
    fn spherical_examples() {
        let s = SphericalUnitary::simple(vec![vec![real(1.0), real(0.0), real(0.0)]]).unwrap();
        let u = spherical_unitary_realize(&s, 3).unwrap();
        assert_eq!(u.block(0)[(0, 0)], real(1.0));
        assert_eq!(u.block(1)[(0, 0)], real(0.0));
        let s = SphericalUnitary::simple(vec![vec![real(1.0), real(0.0)], vec![real(0.0), real(1.0)]]).unwrap();
        let u = spherical_unitary_realize(&s, 2).unwrap();
        assert_eq!(u.block(0), &CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(0.0)])));
        assert_eq!(u.block(1), &CMatrix::from_diagonal(&CVector::from_vec(vec![real(0.0), real(1.0)])));
        assert!(matches!(
            SphericalUnitary::simple(vec![vec![real(0.5), real(0.5)]]),
            Err(Error::OffSphere { .. })
        ));
        let mut rng = sampling::rng(3);
        let pts = (0..5).map(|_| sampling::sphere_point(&mut rng, 3)).collect();
        let s = SphericalUnitary::new(pts, vec![1, 2, 1, 1, 3]).unwrap();
        let u = spherical_unitary_realize(&s, 3).unwrap();
        assert!(spectral_norm(&(u.gram() - identity(8))) < 1e-14);
        assert_eq!(u.commutator_residual(), 0.0);
        assert_eq!(s.commutant_dim(), 1 + 4 + 1 + 1 + 9);
    }

    #[test]
    fn frazho_bunce_of_zero_is_the_shift() {
        let t = RowOperator::zeros(1, 1);
        let dil = frazho_bunce(&t, 4, 1e-10).unwrap();
        assert_eq!(dil.dim(), 5);
        assert_eq!(dil.multiplicity, 1);
        let v = dil.v.block(0);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j + 1 { 1.0 } else { 0.0 };
                assert!((v[(i, j)].norm() - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn frazho_bunce_of_unitary_is_itself() {
        let u = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), c(0.0, 1.0), real(0.0)]);
        let t = RowOperator::new(vec![u.clone()]).unwrap();
        let dil = frazho_bunce(&t, 3, 1e-10).unwrap();
        assert_eq!(dil.multiplicity, 0);
        assert_eq!(dil.dim(), 2);
        assert_eq!(dil.v.block(0), &u);
    }

    #[test]
    fn frazho_bunce_contracts_random() {
        let mut rng = sampling::rng(11);
        for _ in 0..3 {
            let t = sampling::commuting_row(&mut rng, 2, 3, 0.8);
            let dil = frazho_bunce(&t, 5, 1e-10).unwrap();
            let rep = verify_coextension(&t, &dil).unwrap();
            assert!(rep.isometry_residual < 1e-10, "{rep:?}");
            assert!(rep.orthogonality_residual < 1e-10);
            assert!(rep.co_extension_residual < 1e-12);
            assert!(rep.word_residual < 1e-12);
            assert_eq!(rep.span_rank, rep.dim);
        }
    }

    #[test]
    fn defect_inner_products() {
        // ⟨D(e_i⊗h), D(e_j⊗h')⟩ = δ_ij⟨h,h'⟩ − ⟨T_i h, T_j h'⟩.
        let mut rng = sampling::rng(5);
        let t = sampling::free_row(&mut rng, 3, 2, 0.9);
        let d = crate::operator::defect(&t, 1e-10).unwrap().defect_op;
        let m = 2;
        for i in 0..3 {
            for j in 0..3 {
                let lhs = d.columns(i * m, m).adjoint() * d.columns(j * m, m);
                let mut rhs = -(t.block(i).adjoint() * t.block(j));
                if i == j {
                    rhs += identity(m);
                }
                assert!(spectral_norm(&(lhs - rhs)) < 1e-12);
            }
        }
    }

    #[test]
    fn arveson_of_zero() {
        let t = RowOperator::zeros(2, 3);
        let dil = arveson_pure(&t, 4, 1e-10).unwrap();
        assert_eq!(dil.multiplicity, 3);
        let w = dil.generator_map.as_ref().unwrap();
        // Only the vacuum block is populated.
        assert!(spectral_norm(&w.rows(3, w.nrows() - 3).into_owned()) == 0.0);
        assert!(isometry_defect(w) < 1e-14);
    }

    /// Oracle: direct summation of `|P_k| ⟨T^k Δ² T^{*k} h, h⟩`.
    #[test]
    fn arveson_truncation_identity() {
        let mut rng = sampling::rng(21);
        let t = sampling::commuting_row(&mut rng, 2, 3, 0.7);
        let d = 6;
        let dil = arveson_pure(&t, d, 1e-10).unwrap();
        let w = dil.generator_map.as_ref().unwrap();
        let delta2 = identity(3) - t.gram();
        let f = TruncatedFock::new(2, d).unwrap();
        for _ in 0..5 {
            let h = sampling::complex_matrix(&mut rng, 3, 1);
            let wh = (w * &h).norm_squared();
            let mut sum = 0.0;
            for (pos, k) in f.multi_indices().iter().enumerate() {
                let tk = t.apply_multiindex(k, 1e-10).unwrap();
                let v = tk.adjoint() * &h;
                sum += f.count_at(pos) as f64 * (v.adjoint() * &delta2 * &v)[(0, 0)].re;
            }
            assert!((wh - sum).abs() < 1e-12);
            let phi = t.phi_power(d + 1);
            let expect = h.norm_squared() - (h.adjoint() * phi * &h)[(0, 0)].re;
            assert!((wh - expect).abs() < 1e-10);
        }
        let rep = verify_arveson(&t, &dil).unwrap();
        assert!(rep.truncation_identity < 1e-12);
        assert!(rep.intertwining < 1e-12);
        assert!(rep.co_invariance <= 2.0 * rep.top_degree_spill / (1.0 - 0.7f64.powi(14)).sqrt() + 1e-12);
    }

    #[test]
    fn arveson_compression_inequality() {
        let mut rng = sampling::rng(8);
        let t = sampling::commuting_row(&mut rng, 2, 2, 0.5);
        let dil = arveson_pure(&t, 8, 1e-10).unwrap();
        for _ in 0..5 {
            let p = sampling::polynomial(&mut rng, 2, 3, true);
            let lhs = spectral_norm(&t.poly_eval(&p, 1e-10).unwrap());
            let rhs = spectral_norm(&dil.v.poly_eval(&p, 1e-10).unwrap());
            assert!(lhs <= rhs + 1e-10);
        }
        let one = PolynomialSpec::commuting(vec![(vec![0, 0], real(2.0))]);
        assert!((spectral_norm(&dil.v.poly_eval(&one, 1e-10).unwrap()) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn arveson_rejects_noncommuting() {
        let mut rng = sampling::rng(2);
        let t = sampling::free_row(&mut rng, 2, 3, 0.5);
        assert!(matches!(arveson_pure(&t, 3, 1e-10), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn assemble_examples() {
        let f = TruncatedFock::new(2, 3).unwrap();
        let dil = assemble_dilation(ShiftKind::Symmetric, 2, 1, &SphericalUnitary::empty(), 3).unwrap();
        assert_eq!(dil.v, multiplier_row(&f));
        let s = SphericalUnitary::simple(vec![vec![real(1.0), real(0.0)]]).unwrap();
        let dil = assemble_dilation(ShiftKind::Symmetric, 2, 0, &s, 3).unwrap();
        assert_eq!(dil.dim(), 1);
        let dil = assemble_dilation(ShiftKind::Symmetric, 2, 1, &s, 3).unwrap();
        assert_eq!(dil.dim(), f.n_sym() + 1);
        assert!((dil.v.row_norm() - 1.0).abs() < 1e-14);
        assert!(dil.v.commutator_residual() < 1e-15);
        assert!(assemble_dilation(ShiftKind::Free, 2, 0, &SphericalUnitary::empty(), 3).is_err());
    }

    #[test]
    fn wold_of_creation_row() {
        let f = TruncatedFock::new(2, 4).unwrap();
        let l = creation_row(&f);
        let wd = wold_data(&l, &identity(f.n_full()), 4, 1e-10).unwrap();
        assert_eq!(wd.wandering_basis.ncols(), 1);
        assert!((wd.wandering_basis[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert_eq!(wd.shift_part_dim, f.n_full());
        assert_eq!(wd.cuntz_part_dim, 0);
    }

    #[test]
    fn wold_of_spherical_unitary() {
        let mut rng = sampling::rng(4);
        let s = SphericalUnitary::simple((0..4).map(|_| sampling::sphere_point(&mut rng, 2)).collect()).unwrap();
        let u = spherical_unitary_realize(&s, 2).unwrap();
        let wd = wold_data(&u, &identity(4), 3, 1e-10).unwrap();
        assert_eq!(wd.wandering_basis.ncols(), 0);
        assert_eq!(wd.shift_part_dim, 0);
        assert_eq!(wd.cuntz_part_dim, 4);
        assert!(wd.isometry_residual > 0.1);
    }

    #[test]
    fn wold_of_assembled_recovers_multiplicity() {
        let mut rng = sampling::rng(6);
        let s = SphericalUnitary::new((0..2).map(|_| sampling::sphere_point(&mut rng, 2)).collect(), vec![2, 1]).unwrap();
        for kind in [ShiftKind::Symmetric, ShiftKind::Free] {
            let dil = assemble_dilation(kind, 2, 2, &s, 3).unwrap();
            let wd = wold_data(&dil.v, &identity(dil.dim()), 3, 1e-10).unwrap();
            assert_eq!(wd.wandering_basis.ncols(), 2);
            assert_eq!(wd.cuntz_part_dim, 3);
            assert_eq!(wd.shift_part_dim, dil.dim() - 3);
            assert!(wd.wandering_residual < 1e-14);
        }
    }

    #[test]
    fn wold_of_frazho_bunce() {
        // ran(I − ΣV_iV_i*) has dimension m + rank D_T − nm.
        let mut rng = sampling::rng(9);
        let t = sampling::commuting_row(&mut rng, 2, 3, 0.6);
        let dil = frazho_bunce(&t, 4, 1e-10).unwrap();
        let wd = wold_data(&dil.v, &dil.interior, 4, 1e-10).unwrap();
        assert_eq!(dil.multiplicity, 6);
        assert_eq!(wd.wandering_basis.ncols(), 3 + 6 - 6);
        assert!(wd.isometry_residual < 1e-10);
    }

    #[test]
    fn davie_jewell_matches_commutant() {
        let mut rng = sampling::rng(13);
        let p = sampling::sphere_point(&mut rng, 2);
        let q = sampling::sphere_point(&mut rng, 2);
        let s = SphericalUnitary::new(vec![p, q], vec![2, 1]).unwrap();
        let u = spherical_unitary_realize(&s, 2).unwrap();
        let basis = davie_jewell_fixed_points(&u, 1e-10);
        assert_eq!(basis.ncols(), s.commutant_dim());
        for col in basis.column_iter() {
            let a = unvec(&col.into_owned(), 3);
            for b in u.blocks() {
                assert!(spectral_norm(&(&a * b - b * &a)) < 1e-10);
                assert!(spectral_norm(&(&a * b.adjoint() - b.adjoint() * &a)) < 1e-10);
            }
            // Block structure: entries linking different eigenvalues vanish.
            assert!(a[(0, 2)].norm() < 1e-10 && a[(2, 0)].norm() < 1e-10);
        }
    }
}
