//! Commutant lifting as spectral-norm minimization over an affine subspace of
//! the commutant, solved by ADMM with certified upper and lower bounds.

use crate::dilation::{layout_offsets, same_point, DilationResult, ShiftKind, Summand};
use crate::error::{Error, Result};
use crate::fock::{multiplier_power_entries, sym_embedding, TruncatedFock, Word};
use crate::linalg::{
    block_diag, identity, isometry_defect, kron, null_space, pinv, rank, singular_values, spectral_norm, svd,
    vstack, zeros, CMatrix, CVector, C64,
};
use crate::operator::RowOperator;

/// One side (domain or codomain) of a lifting problem.
#[derive(Clone, Debug)]
pub struct LiftingSide {
    pub v: RowOperator,
    pub layout: Vec<Summand>,
    /// Map `ℋ → 𝒦`; isometric except for the generated form.
    pub embed: CMatrix,
    /// Columns of `𝒦` on which the generated constraint is imposed.
    pub generator: Option<CMatrix>,
}

impl LiftingSide {
    pub fn new(v: RowOperator, layout: Vec<Summand>, embed: CMatrix) -> Result<Self> {
        let total = *layout_offsets(&layout).last().expect("offsets are non-empty");
        if total != v.dim() || embed.nrows() != v.dim() {
            return Err(Error::Dimension(format!(
                "layout covers {total} coordinates, operator acts on {}, embedding has {} rows",
                v.dim(),
                embed.nrows()
            )));
        }
        Ok(LiftingSide { v, layout, embed, generator: None })
    }

    pub fn from_dilation(d: &DilationResult) -> Self {
        LiftingSide { v: d.v.clone(), layout: d.layout.clone(), embed: d.embed.clone(), generator: None }
    }

    /// Generated form of an Arveson dilation: the raw map `W` and the vacuum
    /// columns `e_0 ⊗ ℂ^α`.
    pub fn arveson(d: &DilationResult) -> Result<Self> {
        let w = d
            .generator_map
            .clone()
            .ok_or_else(|| Error::InvalidParameter("dilation has no Arveson map".into()))?;
        let alpha = d.multiplicity;
        let mut g = zeros(d.dim(), alpha);
        for a in 0..alpha {
            g[(a, a)] = C64::new(1.0, 0.0);
        }
        Ok(LiftingSide { v: d.v.clone(), layout: d.layout.clone(), embed: w, generator: Some(g) })
    }

    /// Arveson dilation with the isometric embedding `polar(W ι)` of a
    /// subspace `ι: ℋ₀ → ℋ`.
    pub fn arveson_compressed(d: &DilationResult, iota: &CMatrix) -> Result<Self> {
        let w = d
            .generator_map
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("dilation has no Arveson map".into()))?;
        if iota.nrows() != w.ncols() {
            return Err(Error::Dimension("subspace map has the wrong row count".into()));
        }
        let embed = crate::linalg::orthonormalize(&(w * iota))?;
        LiftingSide::new(d.v.clone(), d.layout.clone(), embed)
    }

    pub fn with_generator(mut self, g: CMatrix) -> Result<Self> {
        if g.nrows() != self.v.dim() {
            return Err(Error::Dimension("generator has wrong row count".into()));
        }
        self.generator = Some(g);
        Ok(self)
    }

    pub fn direct_sum(&self, other: &LiftingSide) -> Result<LiftingSide> {
        let generator = match (&self.generator, &other.generator) {
            (Some(a), Some(b)) => Some(block_diag(&[a, b])),
            (None, None) => None,
            _ => return Err(Error::InvalidParameter("generator present on one side only".into())),
        };
        let mut layout = self.layout.clone();
        layout.extend(other.layout.iter().cloned());
        Ok(LiftingSide {
            v: self.v.direct_sum(&other.v)?,
            layout,
            embed: block_diag(&[&self.embed, &other.embed]),
            generator,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    fn check_block_diagonal(&self) -> Result<()> {
        let offs = layout_offsets(&self.layout);
        for b in self.v.blocks() {
            for p in 0..self.layout.len() {
                for q in 0..self.layout.len() {
                    if p == q {
                        continue;
                    }
                    let blk = b.view((offs[p], offs[q]), (offs[p + 1] - offs[p], offs[q + 1] - offs[q]));
                    if blk.iter().any(|z| z.norm() > 0.0) {
                        return Err(Error::InvalidParameter("operator is not block diagonal over its layout".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ConstraintKind {
    /// `E_c* Z = X E_d*`, i.e. `P_ℋ Z = X P_ℋ`.
    CoExtension,
    /// `E_c* Z E_d = X`.
    Compression,
    /// `E_c* Z G = X E_d* G` on the generator columns `G` of the domain.
    Generated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutantMethod {
    /// Closed-form bases from the summand types; dense only for opaque pairs.
    Structured,
    /// Sylvester null space for every summand pair.
    Dense,
}

#[derive(Clone, Debug)]
pub struct LiftingProblem {
    pub dom: LiftingSide,
    pub cod: LiftingSide,
    /// `ℋ_dom → ℋ_cod`; in the generated form, the right-hand side map.
    pub x: CMatrix,
    pub kind: ConstraintKind,
    /// The norm the lifting is compared against.
    pub norm_x: f64,
    pub max_symbol_degree: Option<usize>,
    pub method: CommutantMethod,
    /// Original `(S, T)` for the hypothesis `S_i X = X T_i`.
    pub originals: Option<(RowOperator, RowOperator)>,
}

/// Above this many unknowns a dense Sylvester null space is refused.
pub const DENSE_PAIR_LIMIT: usize = 1600;

impl LiftingProblem {
    pub fn commutant(side: LiftingSide, x: CMatrix, kind: ConstraintKind) -> Result<Self> {
        Self::intertwiner(side.clone(), side, x, kind)
    }

    pub fn intertwiner(cod: LiftingSide, dom: LiftingSide, x: CMatrix, kind: ConstraintKind) -> Result<Self> {
        if cod.v.n() != dom.v.n() {
            return Err(Error::Dimension("dilations have rows of different length".into()));
        }
        if x.nrows() != cod.embed.ncols() || x.ncols() != dom.embed.ncols() {
            return Err(Error::Dimension(format!(
                "X is {}x{}, embeddings give {}x{}",
                x.nrows(),
                x.ncols(),
                cod.embed.ncols(),
                dom.embed.ncols()
            )));
        }
        if kind == ConstraintKind::Generated && dom.generator.is_none() {
            return Err(Error::InvalidParameter("generated constraint needs generator columns".into()));
        }
        if kind == ConstraintKind::Compression {
            for e in [&cod.embed, &dom.embed] {
                let r = isometry_defect(e);
                if r > 1e-8 {
                    return Err(Error::NotIsometric(r));
                }
            }
        }
        cod.check_block_diagonal()?;
        dom.check_block_diagonal()?;
        let norm_x = spectral_norm(&x);
        Ok(LiftingProblem {
            dom,
            cod,
            x,
            kind,
            norm_x,
            max_symbol_degree: None,
            method: CommutantMethod::Structured,
            originals: None,
        })
    }

    pub fn with_symbol_degree(mut self, s: usize) -> Self {
        self.max_symbol_degree = Some(s);
        self
    }

    pub fn with_method(mut self, m: CommutantMethod) -> Self {
        self.method = m;
        self
    }

    pub fn with_norm_x(mut self, norm: f64) -> Self {
        self.norm_x = norm;
        self
    }

    pub fn with_originals(mut self, s: RowOperator, t: RowOperator) -> Self {
        self.originals = Some((s, t));
        self
    }

    /// `max_i ‖S_i X − X T_i‖`, using the originals when given and the
    /// compressions `E* Ṽ_i E` otherwise.
    pub fn hypothesis_residual(&self) -> Result<f64> {
        let (s, t) = match &self.originals {
            Some(p) => p.clone(),
            None => (self.cod.v.compress(&self.cod.embed)?, self.dom.v.compress(&self.dom.embed)?),
        };
        Ok(s.blocks()
            .iter()
            .zip(t.blocks())
            .map(|(si, ti)| spectral_norm(&(si * &self.x - &self.x * ti)))
            .fold(0.0, f64::max))
    }

    pub fn check_hypothesis(&self, tol: f64) -> Result<f64> {
        let r = self.hypothesis_residual()?;
        if r > tol {
            return Err(Error::Hypothesis(format!("S_i X − X T_i has norm {r:e}")));
        }
        Ok(r)
    }

    fn embeds_isometric(&self) -> bool {
        isometry_defect(&self.cod.embed) <= 1e-10 && isometry_defect(&self.dom.embed) <= 1e-10
    }

    /// `‖Z‖ ≥ ‖X‖` whenever the constraint pins a compression of `Z` to `X`.
    fn structural_lower_bound(&self) -> f64 {
        match self.kind {
            ConstraintKind::Generated => 0.0,
            _ if self.embeds_isometric() => spectral_norm(&self.x),
            _ => 0.0,
        }
    }

    /// Right factor `R` with the constraint `E_c* Z R = rhs`; `None` is the identity.
    fn right_factor(&self) -> Option<CMatrix> {
        match self.kind {
            ConstraintKind::CoExtension => None,
            ConstraintKind::Compression => Some(self.dom.embed.clone()),
            ConstraintKind::Generated => self.dom.generator.clone(),
        }
    }

    fn rhs(&self) -> CMatrix {
        match self.kind {
            ConstraintKind::CoExtension => &self.x * self.dom.embed.adjoint(),
            ConstraintKind::Compression => self.x.clone(),
            ConstraintKind::Generated => {
                &self.x * self.dom.embed.adjoint() * self.dom.generator.as_ref().expect("checked at construction")
            }
        }
    }

    /// `E_c* Z R − rhs`.
    pub fn constraint_residual(&self, z: &CMatrix) -> CMatrix {
        let lz = self.cod.embed.adjoint() * z;
        let lhs = match self.right_factor() {
            None => lz,
            Some(r) => lz * r,
        };
        lhs - self.rhs()
    }
}

/// Frobenius-orthogonal basis of an intertwiner space, stored as sparse
/// triplets with disjoint or orthogonal supports.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    idx: Vec<usize>,
    vals: Vec<C64>,
    weights: Vec<f64>,
}

impl CommutantBasis {
    fn new(rows: usize, cols: usize) -> Self {
        CommutantBasis { rows, cols, offsets: vec![0], idx: Vec::new(), vals: Vec::new(), weights: Vec::new() }
    }

    fn push(&mut self, entries: impl IntoIterator<Item = (usize, usize, C64)>) {
        let mut w = 0.0;
        for (r, c, v) in entries {
            if v.norm() == 0.0 {
                continue;
            }
            self.idx.push(r + c * self.rows);
            self.vals.push(v);
            w += v.norm_sqr();
        }
        if w == 0.0 {
            self.idx.truncate(*self.offsets.last().expect("non-empty"));
            self.vals.truncate(self.idx.len());
            return;
        }
        self.offsets.push(self.idx.len());
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn entries(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.offsets[j]..self.offsets[j + 1];
        self.idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Scaled coordinates `u_j = ⟨B_j, Z⟩ / sqrt(w_j)`, so `‖P Z‖_F = ‖u‖`.
    pub fn coordinates(&self, z: &CMatrix) -> CVector {
        let data = z.as_slice();
        CVector::from_iterator(
            self.len(),
            (0..self.len()).map(|j| {
                let s: C64 = self.entries(j).map(|(i, v)| v.conj() * data[i]).sum();
                s / self.weights[j].sqrt()
            }),
        )
    }

    pub fn assemble(&self, u: &CVector) -> CMatrix {
        let mut z = zeros(self.rows, self.cols);
        let data = z.as_mut_slice();
        for j in 0..self.len() {
            let c = u[j] / self.weights[j].sqrt();
            for (i, v) in self.entries(j) {
                data[i] += c * v;
            }
        }
        z
    }

    /// The `j`-th basis matrix, normalized.
    pub fn element(&self, j: usize) -> CMatrix {
        let mut u = CVector::zeros(self.len());
        u[j] = C64::new(1.0, 0.0);
        self.assemble(&u)
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, z: &CMatrix) -> CMatrix {
        self.assemble(&self.coordinates(z))
    }
}

fn shift_basis(
    basis: &mut CommutantBasis,
    kind: ShiftKind,
    n: usize,
    d: usize,
    alpha_row: usize,
    alpha_col: usize,
    (ro, co): (usize, usize),
    max_deg: Option<usize>,
) -> Result<()> {
    let f = TruncatedFock::new(n, d)?;
    let top = max_deg.unwrap_or(d).min(d);
    let patterns: Vec<Vec<(usize, usize, f64)>> = match kind {
        ShiftKind::Symmetric => f.multi_indices()[..f.multi_degree_range(top).end]
            .iter()
            .map(|k| multiplier_power_entries(k, &f))
            .collect(),
        ShiftKind::Free => f.words()[..f.word_degree_range(top).end]
            .iter()
            .map(|w| right_creation_entries(w, &f))
            .collect::<Result<_>>()?,
    };
    for pat in &patterns {
        for a in 0..alpha_row {
            for b in 0..alpha_col {
                basis.push(
                    pat.iter()
                        .map(|&(r, c, v)| (ro + r * alpha_row + a, co + c * alpha_col + b, C64::new(v, 0.0))),
                );
            }
        }
    }
    Ok(())
}

fn right_creation_entries(v: &Word, f: &TruncatedFock) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for (idx, w) in f.words().iter().enumerate() {
        if w.len() + v.len() <= f.d() {
            let mut u = w.0.clone();
            u.extend_from_slice(&v.0);
            out.push((f.word_index(&Word(u))?, idx, 1.0));
        }
    }
    Ok(out)
}

/// Orthonormal basis of `{Y : Y A_i = B_i Y}` for `Y` of size `rows × cols`.
pub fn sylvester_null_space(b: &[CMatrix], a: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    let (rows, cols) = (b[0].nrows(), a[0].nrows());
    if rows * cols > DENSE_PAIR_LIMIT {
        return Err(Error::Dimension(format!(
            "dense intertwiner space with {} unknowns exceeds the limit {DENSE_PAIR_LIMIT}",
            rows * cols
        )));
    }
    let id_r = identity(rows);
    let id_c = identity(cols);
    let ops: Vec<CMatrix> = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| kron(&ai.transpose(), &id_r) - kron(&id_c, bi))
        .collect();
    let refs: Vec<&CMatrix> = ops.iter().collect();
    let stacked = vstack(&refs)?;
    let scale = spectral_norm(&stacked).max(1.0);
    let ns = null_space(&stacked, tol * scale);
    Ok(ns
        .column_iter()
        .map(|c| CMatrix::from_column_slice(rows, cols, c.clone_owned().as_slice()))
        .collect())
}

fn summand_block(v: &RowOperator, range: std::ops::Range<usize>) -> Vec<CMatrix> {
    let len = range.end - range.start;
    v.blocks()
        .iter()
        .map(|b| b.view((range.start, range.start), (len, len)).into_owned())
        .collect()
}

/// Basis of `{Z : Z Ṽ_dom,i = Ṽ_cod,i Z}` built block by block over the layouts.
pub fn commutant_basis(problem: &LiftingProblem) -> Result<CommutantBasis> {
    let (cod, dom) = (&problem.cod, &problem.dom);
    let co = layout_offsets(&cod.layout);
    let dof = layout_offsets(&dom.layout);
    let mut basis = CommutantBasis::new(cod.dim(), dom.dim());
    for (p, sp) in cod.layout.iter().enumerate() {
        for (q, sq) in dom.layout.iter().enumerate() {
            let origin = (co[p], dof[q]);
            if problem.method == CommutantMethod::Structured {
                match (sp, sq) {
                    (
                        Summand::Shift { kind: k1, n: n1, d: d1, multiplicity: a1 },
                        Summand::Shift { kind: k2, n: n2, d: d2, multiplicity: a2 },
                    ) if k1 == k2 && n1 == n2 && d1 == d2 => {
                        shift_basis(&mut basis, *k1, *n1, *d1, *a1, *a2, origin, problem.max_symbol_degree)?;
                        continue;
                    }
                    (Summand::Shift { .. }, Summand::Spherical(_)) | (Summand::Spherical(_), Summand::Shift { .. }) => {
                        continue;
                    }
                    (Summand::Spherical(u1), Summand::Spherical(u2)) => {
                        let (c1, c2) = (u1.coordinate_points(), u2.coordinate_points());
                        for (r, p1) in c1.iter().enumerate() {
                            for (c, p2) in c2.iter().enumerate() {
                                if same_point(p1, p2) {
                                    basis.push([(origin.0 + r, origin.1 + c, C64::new(1.0, 0.0))]);
                                }
                            }
                        }
                        continue;
                    }
                    _ => {}
                }
            }
            let bp = summand_block(&cod.v, co[p]..co[p + 1]);
            let aq = summand_block(&dom.v, dof[q]..dof[q + 1]);
            for y in sylvester_null_space(&bp, &aq, 1e-10)? {
                let mut entries = Vec::new();
                for c in 0..y.ncols() {
                    for r in 0..y.nrows() {
                        entries.push((origin.0 + r, origin.1 + c, y[(r, c)]));
                    }
                }
                basis.push(entries);
            }
        }
    }
    Ok(basis)
}

/// The affine set `{Z ∈ commutant : E_c* Z R = rhs}` in scaled coordinates.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    pub basis: CommutantBasis,
    a_w: CMatrix,
    a_w_pinv: CMatrix,
    b: CVector,
    pub rank: usize,
    /// `‖Ã Ã⁺ b − b‖`.
    pub affine_residual: f64,
    /// Least-Frobenius-norm feasible point.
    pub particular: CMatrix,
}

pub const AFFINE_TOL: f64 = 1e-8;

/// Stack the constraint map applied to every basis element.
pub fn build_constraints(problem: &LiftingProblem) -> Result<AffineSystem> {
    let basis = commutant_basis(problem)?;
    let l = problem.cod.embed.adjoint();
    let r = problem.right_factor();
    let rhs = problem.rhs();
    let (mr, rc) = (rhs.nrows(), rhs.ncols());
    let q = mr * rc;
    let p = basis.len();
    let k_rows = basis.rows;
    let mut a_w = zeros(q, p);
    for j in 0..p {
        let scale = 1.0 / basis.weights[j].sqrt();
        let mut col = zeros(mr, rc);
        for (i, v) in basis.entries(j) {
            let (row, c) = (i % k_rows, i / k_rows);
            let lv = l.column(row) * (v * scale);
            match &r {
                None => {
                    let mut dst = col.column_mut(c);
                    dst += &lv;
                }
                Some(rm) => {
                    col += &lv * rm.row(c);
                }
            }
        }
        a_w.set_column(j, &CVector::from_column_slice(col.as_slice()));
    }
    let b = CVector::from_column_slice(rhs.as_slice());
    let (a_w_pinv, rank) = pinv_with_rank(&a_w, 1e-11);
    let fit = &a_w * (&a_w_pinv * &b);
    let affine_residual = (&fit - &b).norm();
    if affine_residual > AFFINE_TOL * b.norm().max(1.0) {
        return Err(Error::InfeasibleAffine { residual: affine_residual });
    }
    let u0 = &a_w_pinv * &b;
    let particular = basis.assemble(&u0);
    Ok(AffineSystem { basis, a_w, a_w_pinv, b, rank, affine_residual, particular })
}

fn pinv_with_rank(a: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return (zeros(c, r), 0);
    }
    let smax = spectral_norm(a);
    let cut = rel_tol * smax.max(f64::MIN_POSITIVE);
    let p = pinv(a, cut);
    (p, rank(a, cut))
}

impl AffineSystem {
    /// Dimension of the homogeneous solution space.
    pub fn nullity(&self) -> usize {
        self.basis.len() - self.rank
    }

    /// Frobenius projection onto the affine set.
    pub fn project(&self, z: &CMatrix) -> CMatrix {
        let u = self.basis.coordinates(z);
        let r = &self.a_w * &u - &self.b;
        self.basis.assemble(&(u - &self.a_w_pinv * r))
    }

    /// Frobenius projection onto the parallel linear subspace.
    pub fn project_linear(&self, z: &CMatrix) -> CMatrix {
        let u = self.basis.coordinates(z);
        let r = &self.a_w * &u;
        self.basis.assemble(&(u - &self.a_w_pinv * r))
    }

    /// Orthonormal basis of the homogeneous solutions as matrices.
    pub fn homogeneous_basis(&self) -> Vec<CMatrix> {
        let ns = null_space(&self.a_w, 1e-11 * spectral_norm(&self.a_w).max(1.0));
        ns.column_iter().map(|c| self.basis.assemble(&c.clone_owned())).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Absolute gap between certified bounds at which the solve stops.
    pub tol: f64,
    /// Stop as soon as the target is certified reachable or unreachable.
    pub target: Option<f64>,
    pub stall_window: usize,
    pub rho: f64,
    /// Iterations between dual bound evaluations and penalty updates.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 20_000, tol: 1e-6, target: None, stall_window: 200, rho: 1.0, check_every: 25 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    /// Upper and lower bounds within `tol`.
    Optimal,
    /// A feasible point with norm at most the target.
    FeasibleAtTarget,
    /// Certified lower bound above the target.
    InfeasibleAtTarget,
    Stalled,
    MaxIterations,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Feasible,
    Infeasible,
    Indeterminate,
}

impl SolveStatus {
    pub fn verdict(self) -> Verdict {
        match self {
            SolveStatus::Optimal | SolveStatus::FeasibleAtTarget => Verdict::Feasible,
            SolveStatus::InfeasibleAtTarget => Verdict::Infeasible,
            SolveStatus::Stalled | SolveStatus::MaxIterations => Verdict::Indeterminate,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct ResidualReport {
    /// `max_i ‖Z Ṽ_dom,i − Ṽ_cod,i Z‖`.
    pub commutation: f64,
    /// Spectral norm of `E_c* Z R − rhs`.
    pub dilation: f64,
    pub norm: f64,
    pub norm_x: f64,
    pub norm_gap: f64,
    /// `max_{p<q} ‖Z_pq‖` between a shift row block and a spherical column block.
    pub forbidden_upper_right: Option<f64>,
    /// `‖P_𝒩 Z_21|_{antisymmetric}‖` for free shifts.
    pub antisymmetric_block: Option<f64>,
    /// `max_j ‖U_j Z_21 − Z_21 M_j‖` on the symmetric part.
    pub lower_left_intertwining: Option<f64>,
    /// `max_i max(‖[A, U_i]‖, ‖[A, U_i*]‖)` for the spherical corner `A`.
    pub spherical_corner: Option<f64>,
    /// `max ‖[Z_pp, Ṽ_p,i]‖` over diagonal summand blocks.
    pub diagonal_commutation: f64,
}

#[derive(Clone, Debug)]
pub struct LiftingSolution {
    pub z: CMatrix,
    /// `‖Z‖` of the returned point, the best certified upper bound.
    pub achieved_norm: f64,
    /// Certified lower bound on the minimum.
    pub lower_bound: f64,
    pub norm_x: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: ResidualReport,
    /// `(iteration, upper, lower)` at every bound evaluation.
    pub history: Vec<(usize, f64, f64)>,
}

impl LiftingSolution {
    pub fn gap(&self) -> f64 {
        self.achieved_norm - self.lower_bound
    }
}

/// `argmin_W λ‖W‖ + ½‖W − Y‖_F²`: clip the singular values at the level `τ`
/// where the clipped mass equals `λ`.
pub fn prox_spectral(y: &CMatrix, lam: f64) -> Result<CMatrix> {
    let f = svd(y)?;
    let s = &f.s;
    let total: f64 = s.iter().sum();
    if total <= lam {
        return Ok(zeros(y.nrows(), y.ncols()));
    }
    let mut cum = 0.0;
    let mut tau = 0.0;
    let mut clipped = 0;
    for (j, &sj) in s.iter().enumerate() {
        cum += sj;
        let t = (cum - lam) / (j + 1) as f64;
        let next = s.get(j + 1).copied().unwrap_or(0.0);
        if t >= next {
            tau = t;
            clipped = j + 1;
            break;
        }
    }
    let mut us = f.u.columns(0, clipped).into_owned();
    for (j, mut col) in us.column_iter_mut().enumerate() {
        col *= C64::new(s[j] - tau, 0.0);
    }
    Ok(y - us * f.v.columns(0, clipped).adjoint())
}

/// Minimize `‖Z‖` over the affine set by ADMM on `Z = W`, `Z` affine, with
/// the spectral norm on `W`. Every iterate `Z_k` is feasible; the scaled dual
/// gives a certified lower bound `Re⟨Λ', Z_p⟩ / ‖Λ'‖_*`.
pub fn min_norm_lifting(problem: &LiftingProblem, opts: &SolverOptions) -> Result<LiftingSolution> {
    if !(opts.tol > 0.0) || opts.check_every == 0 || !(opts.rho > 0.0) {
        return Err(Error::InvalidParameter("tol, rho and check_every must be positive".into()));
    }
    let sys = build_constraints(problem)?;
    solve_affine(problem, &sys, opts)
}

pub fn solve_affine(problem: &LiftingProblem, sys: &AffineSystem, opts: &SolverOptions) -> Result<LiftingSolution> {
    let (rows, cols) = sys.basis.shape();
    let zp = &sys.particular;
    let mut lb = problem.structural_lower_bound();
    let mut best_z = zp.clone();
    let mut ub = spectral_norm(zp);
    let mut history = vec![(0, ub, lb)];
    // Penalty and primal residual in units of ‖X‖, so that scaling the data
    // scales every iterate.
    let scale = if problem.norm_x > 0.0 { problem.norm_x } else { ub.max(f64::MIN_POSITIVE) };
    let mut rho = opts.rho / scale;
    let mut w = zeros(rows, cols);
    let mut u = zeros(rows, cols);
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut gap_at_check: Vec<(usize, f64)> = Vec::new();
    let ub_every = (opts.check_every / 5).max(1);

    let decide = |ub: f64, lb: f64| -> Option<SolveStatus> {
        if let Some(t) = opts.target {
            if ub <= t {
                return Some(SolveStatus::FeasibleAtTarget);
            }
            if lb > t {
                return Some(SolveStatus::InfeasibleAtTarget);
            }
        }
        if ub - lb <= opts.tol {
            return Some(SolveStatus::Optimal);
        }
        None
    };

    if let Some(s) = decide(ub, lb) {
        status = s;
    } else {
        for it in 1..=opts.max_iter {
            iterations = it;
            let z = sys.project(&(&w - &u));
            let w_old = std::mem::replace(&mut w, prox_spectral(&(&z + &u), 1.0 / rho)?);
            u += &z - &w;

            if it % ub_every == 0 {
                let nz = spectral_norm(&z);
                if nz < ub {
                    ub = nz;
                    best_z = z.clone();
                }
            }
            if it % opts.check_every == 0 {
                let lam = &u * C64::new(rho, 0.0);
                let lam = &lam - sys.project_linear(&lam);
                let nuc: f64 = singular_values(&lam).iter().sum();
                if nuc > 0.0 {
                    let inner = crate::linalg::frobenius_inner(&lam, zp).re;
                    lb = lb.max(inner / nuc);
                }
                history.push((it, ub, lb));
                if let Some(s) = decide(ub, lb) {
                    status = s;
                    break;
                }
                let gap = ub - lb;
                gap_at_check.push((it, gap));
                if gap > 10.0 * opts.tol {
                    if let Some(&(_, old)) = gap_at_check.iter().rev().find(|(i, _)| it - i >= opts.stall_window) {
                        if gap > 0.99 * old {
                            status = SolveStatus::Stalled;
                            break;
                        }
                    }
                }
                let rp = (&z - &w).norm() / scale;
                let rd = rho * (&w - &w_old).norm();
                if rp > 10.0 * rd {
                    rho *= 2.0;
                    u /= C64::new(2.0, 0.0);
                } else if rd > 10.0 * rp {
                    rho /= 2.0;
                    u *= C64::new(2.0, 0.0);
                }
            }
        }
    }
    let residuals = verify_solution(&best_z, problem);
    Ok(LiftingSolution {
        achieved_norm: ub,
        lower_bound: lb,
        norm_x: problem.norm_x,
        converged: matches!(status, SolveStatus::Optimal | SolveStatus::FeasibleAtTarget | SolveStatus::InfeasibleAtTarget),
        status,
        iterations,
        residuals,
        history,
        z: best_z,
    })
}

/// Residuals and block-structure diagnostics of a candidate lifting.
pub fn verify_solution(z: &CMatrix, problem: &LiftingProblem) -> ResidualReport {
    let (cod, dom) = (&problem.cod, &problem.dom);
    let commutation = dom
        .v
        .blocks()
        .iter()
        .zip(cod.v.blocks())
        .map(|(a, b)| spectral_norm(&(z * a - b * z)))
        .fold(0.0, f64::max);
    let dilation = spectral_norm(&problem.constraint_residual(z));
    let norm = spectral_norm(z);
    let mut rep = ResidualReport {
        commutation,
        dilation,
        norm,
        norm_x: problem.norm_x,
        norm_gap: norm - problem.norm_x,
        ..Default::default()
    };
    if z.nrows() != cod.dim() || z.ncols() != dom.dim() {
        return rep;
    }
    let co = layout_offsets(&cod.layout);
    let dof = layout_offsets(&dom.layout);
    let block = |p: usize, q: usize| -> CMatrix {
        z.view((co[p], dof[q]), (co[p + 1] - co[p], dof[q + 1] - dof[q])).into_owned()
    };
    let mut diag: f64 = 0.0;
    if cod.layout == dom.layout {
        for p in 0..cod.layout.len() {
            let zp = block(p, p);
            let vp = summand_block(&cod.v, co[p]..co[p + 1]);
            for b in &vp {
                diag = diag.max(spectral_norm(&(&zp * b - b * &zp)));
            }
        }
    }
    rep.diagonal_commutation = diag;
    for (p, sp) in cod.layout.iter().enumerate() {
        for (q, sq) in dom.layout.iter().enumerate() {
            match (sp, sq) {
                (Summand::Shift { .. }, Summand::Spherical(_)) => {
                    let v = spectral_norm(&block(p, q));
                    rep.forbidden_upper_right = Some(rep.forbidden_upper_right.unwrap_or(0.0).max(v));
                }
                (Summand::Spherical(u), Summand::Shift { kind, n, d, multiplicity }) => {
                    let z21 = block(p, q);
                    let f = TruncatedFock::new(*n, *d).expect("validated layout");
                    let uu = crate::dilation::spherical_unitary_realize(u, *n).expect("validated layout");
                    let (sym_part, shift) = match kind {
                        ShiftKind::Free => {
                            let e = kron(&sym_embedding(&f), &identity(*multiplicity));
                            let anti = &z21 * (identity(e.nrows()) - &e * e.adjoint());
                            rep.antisymmetric_block =
                                Some(rep.antisymmetric_block.unwrap_or(0.0).max(spectral_norm(&anti)));
                            let m = crate::fock::multiplier_row(&f).ampliate(*multiplicity);
                            (&z21 * &e, m)
                        }
                        ShiftKind::Symmetric => (z21.clone(), crate::fock::multiplier_row(&f).ampliate(*multiplicity)),
                    };
                    // Only degrees below the top are free of truncation effects.
                    let lower = if *d > 0 { f.multi_degree_range(*d - 1).end * multiplicity } else { 0 };
                    let mut worst: f64 = 0.0;
                    for (uj, mj) in uu.blocks().iter().zip(shift.blocks()) {
                        let r = uj * &sym_part - &sym_part * mj;
                        worst = worst.max(spectral_norm(&r.columns(0, lower).into_owned()));
                    }
                    rep.lower_left_intertwining = Some(rep.lower_left_intertwining.unwrap_or(0.0).max(worst));
                }
                (Summand::Spherical(u1), Summand::Spherical(_)) if p == q && cod.layout == dom.layout => {
                    let a = block(p, q);
                    let uu = crate::dilation::spherical_unitary_realize(u1, cod.v.n()).expect("validated layout");
                    let mut worst: f64 = 0.0;
                    for b in uu.blocks() {
                        worst = worst.max(spectral_norm(&(&a * b - b * &a)));
                        worst = worst.max(spectral_norm(&(&a * b.adjoint() - b.adjoint() * &a)));
                    }
                    rep.spherical_corner = Some(rep.spherical_corner.unwrap_or(0.0).max(worst));
                }
                _ => {}
            }
        }
    }
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntertwinerPath {
    Direct,
    /// Commutant lifting of `[[0, X], [0, 0]]` against `S̃ ⊕ T̃`.
    TwoByTwo,
}

/// Lifting of `X` with `S_i X = X T_i` to `Z` with `S̃_i Z = Z T̃_i`.
pub fn intertwiner_lifting(
    cod: &LiftingSide,
    dom: &LiftingSide,
    x: &CMatrix,
    kind: ConstraintKind,
    opts: &SolverOptions,
    path: IntertwinerPath,
) -> Result<LiftingSolution> {
    let direct = LiftingProblem::intertwiner(cod.clone(), dom.clone(), x.clone(), kind)?;
    match path {
        IntertwinerPath::Direct => min_norm_lifting(&direct, opts),
        IntertwinerPath::TwoByTwo => {
            let side = cod.direct_sum(dom)?;
            let (h1, h2) = (cod.embed.ncols(), dom.embed.ncols());
            let mut big_x = zeros(h1 + h2, h1 + h2);
            big_x.view_mut((0, h1), (h1, h2)).copy_from(x);
            let big = LiftingProblem::commutant(side, big_x, kind)?.with_norm_x(direct.norm_x);
            let sol = min_norm_lifting(&big, opts)?;
            let z = sol.z.view((0, cod.dim()), (cod.dim(), dom.dim())).into_owned();
            let residuals = verify_solution(&z, &direct);
            Ok(LiftingSolution { z, residuals, ..sol })
        }
    }
}

/// Commutant lifting of `X ∈ {T}'` through the truncated Arveson dilation of
/// `T`, in the generated form.
pub fn arveson_lifting(
    t: &RowOperator,
    x: &CMatrix,
    d: usize,
    hypothesis_tol: f64,
    opts: &SolverOptions,
) -> Result<(DilationResult, LiftingProblem, LiftingSolution)> {
    let dil = crate::dilation::arveson_pure(t, d, crate::linalg::DEFAULT_TOL)?;
    let side = LiftingSide::arveson(&dil)?;
    let problem = LiftingProblem::commutant(side, x.clone(), ConstraintKind::Generated)?
        .with_originals(t.clone(), t.clone());
    problem.check_hypothesis(hypothesis_tol)?;
    let sol = min_norm_lifting(&problem, opts)?;
    Ok((dil, problem, sol))
}
