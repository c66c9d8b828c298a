//! Nevanlinna-Pick interpolation on the Drury-Arveson kernel: Pick matrices,
//! the model operators on the span of kernel functions, and multiplier
//! recovery through commutant lifting.
//!
//! Coordinates: a vector `Σ a_j k_{λ_j} ⊗ e_a` is stored as `a[j·m + a]`
//! where `m` is the target dimension. Operators are returned in orthonormal
//! coordinates `(G^{1/2} ⊗ I) a`.

use crate::dilation::{ShiftKind, Summand};
use crate::error::{Error, Result};
use crate::fock::{evaluate, kernel_value, kernel_vector, multiplier_row, MultiIndex, TruncatedFock};
use crate::lifting::{min_norm_lifting, ConstraintKind, LiftingProblem, LiftingSide, SolveStatus, SolverOptions};
use crate::linalg::{hermitian_eigen, identity, kron, real, spectral_norm, zeros, CMatrix, CVector, C64};
use crate::operator::RowOperator;

/// Largest accepted condition number of the Gram matrix.
pub const GRAM_COND_LIMIT: f64 = 1e12;
/// Relative tolerance of the PSD test on Pick matrices.
pub const PSD_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct PickSystem {
    n: usize,
    nodes: Vec<Vec<C64>>,
    targets: Vec<CMatrix>,
    target_dim: usize,
    gram: CMatrix,
    gram_sqrt: CMatrix,
    gram_inv_sqrt: CMatrix,
}

impl PickSystem {
    /// Nodes in the open ball of `ℂⁿ` and square targets of a common size.
    pub fn new(nodes: Vec<Vec<C64>>, targets: Vec<CMatrix>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != targets.len() {
            return Err(Error::InvalidParameter(format!(
                "{} nodes and {} targets",
                nodes.len(),
                targets.len()
            )));
        }
        let n = nodes[0].len();
        if n == 0 || nodes.iter().any(|p| p.len() != n) {
            return Err(Error::Dimension("nodes must share a positive dimension".into()));
        }
        let target_dim = targets[0].nrows();
        if target_dim == 0 || targets.iter().any(|w| w.nrows() != target_dim || w.ncols() != target_dim) {
            return Err(Error::Dimension("targets must be square of a common size".into()));
        }
        if targets.iter().any(|w| !crate::linalg::is_finite(w)) {
            return Err(Error::InvalidParameter("targets must be finite".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            for q in &nodes[..i] {
                if crate::dilation::same_point(p, q) {
                    return Err(Error::InvalidParameter(format!("node {i} repeats an earlier node")));
                }
            }
        }
        let len = nodes.len();
        let mut gram = zeros(len, len);
        for i in 0..len {
            for j in 0..len {
                gram[(i, j)] = kernel_value(&nodes[i], &nodes[j])?;
            }
        }
        let (values, vectors) = hermitian_eigen(&gram);
        let (lo, hi) = (values[0], values[len - 1]);
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cond > GRAM_COND_LIMIT {
            return Err(Error::IllConditioned { cond });
        }
        let map = |f: fn(f64) -> f64| {
            let mut s = vectors.clone();
            for (j, &v) in values.iter().enumerate() {
                let mut col = s.column_mut(j);
                col *= real(f(v));
            }
            &s * vectors.adjoint()
        };
        let gram_sqrt = map(f64::sqrt);
        let gram_inv_sqrt = map(|v| 1.0 / v.sqrt());
        Ok(PickSystem { n, nodes, targets, target_dim, gram, gram_sqrt, gram_inv_sqrt })
    }

    pub fn scalar(nodes: Vec<Vec<C64>>, targets: &[C64]) -> Result<Self> {
        let targets = targets.iter().map(|&w| CMatrix::from_element(1, 1, w)).collect();
        Self::new(nodes, targets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn nodes(&self) -> &[Vec<C64>] {
        &self.nodes
    }

    pub fn targets(&self) -> &[CMatrix] {
        &self.targets
    }

    /// `[k(λ_i, λ_j)]`.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// The same nodes with every target multiplied by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        PickSystem { targets: self.targets.iter().map(|w| w * c).collect(), ..self.clone() }
    }

    fn coords_sqrt(&self) -> CMatrix {
        kron(&self.gram_sqrt, &identity(self.target_dim))
    }

    fn coords_inv_sqrt(&self) -> CMatrix {
        kron(&self.gram_inv_sqrt, &identity(self.target_dim))
    }

    fn target_block_diag(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.targets.iter().collect();
        crate::linalg::block_diag(&refs)
    }
}

/// Block `(i, j)` is `(I − W_i W_j*) k(λ_i, λ_j)`.
pub fn pick_matrix(sys: &PickSystem) -> CMatrix {
    let m = sys.target_dim;
    let len = sys.len();
    let mut p = zeros(len * m, len * m);
    for i in 0..len {
        for j in 0..len {
            let blk = (identity(m) - &sys.targets[i] * sys.targets[j].adjoint()) * sys.gram[(i, j)];
            p.view_mut((i * m, j * m), (m, m)).copy_from(&blk);
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdTest {
    pub min_eigenvalue: f64,
    pub norm: f64,
    pub psd: bool,
}

/// PSD test with the relative threshold `−PSD_REL_TOL · ‖P‖`.
pub fn psd_test(p: &CMatrix) -> PsdTest {
    let (values, _) = hermitian_eigen(p);
    let min_eigenvalue = values.first().copied().unwrap_or(0.0);
    let norm = spectral_norm(p);
    PsdTest { min_eigenvalue, norm, psd: min_eigenvalue >= -PSD_REL_TOL * norm }
}

#[derive(Clone, Debug)]
pub struct ModelOperators {
    /// `T_i*` on the kernel basis is `diag(adjoint_diag[i])`.
    pub adjoint_diag: Vec<Vec<C64>>,
    pub gram: CMatrix,
    /// `T_i = P_ℳ M_{z_i}|_ℳ` in orthonormal coordinates.
    pub t: RowOperator,
}

/// Compressions of the coordinate multipliers to `span{k_{λ_j}} ⊗ ℂ^m`.
pub fn model_operators(sys: &PickSystem) -> ModelOperators {
    let (s, si) = (sys.coords_sqrt(), sys.coords_inv_sqrt());
    let m = sys.target_dim;
    let adjoint_diag: Vec<Vec<C64>> =
        (0..sys.n).map(|i| sys.nodes.iter().map(|p| p[i].conj()).collect()).collect();
    let blocks = (0..sys.n)
        .map(|i| {
            let d = CMatrix::from_diagonal(&CVector::from_iterator(
                sys.len() * m,
                sys.nodes.iter().flat_map(|p| std::iter::repeat_n(p[i], m)),
            ));
            &si * d * &s
        })
        .collect();
    ModelOperators {
        adjoint_diag,
        gram: sys.gram.clone(),
        t: RowOperator::new(blocks).expect("square blocks of equal size"),
    }
}

#[derive(Clone, Debug)]
pub struct ModelX {
    /// `X` in orthonormal coordinates; `X*` is `diag(W_j*)` on the kernel basis.
    pub x: CMatrix,
    /// `‖X‖` in the Gram inner product.
    pub norm: f64,
}

pub fn model_x(sys: &PickSystem) -> ModelX {
    let x = sys.coords_inv_sqrt() * sys.target_block_diag() * sys.coords_sqrt();
    let norm = spectral_norm(&x);
    ModelX { x, norm }
}

#[derive(Clone, Debug)]
pub struct NpSolution {
    pub degree: usize,
    /// Taylor coefficients `ĥ(k)` of the multiplier, `|k| ≤ degree`.
    pub coefficients: Vec<(MultiIndex, CMatrix)>,
    pub achieved_norm: f64,
    pub lower_bound: f64,
    pub norm_x: f64,
    /// `‖h(λ_j) − W_j‖` per node.
    pub node_residuals: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl NpSolution {
    pub fn evaluate(&self, lambda: &[C64]) -> CMatrix {
        let m = self.coefficients.first().map(|(_, c)| c.nrows()).unwrap_or(0);
        let mut out = zeros(m, m);
        for (k, c) in &self.coefficients {
            out += c * k.monomial(lambda);
        }
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.node_residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub enum NpOutcome {
    Solved(NpSolution),
    /// The Pick matrix has a certified negative eigenvalue.
    Infeasible { min_eigenvalue: f64, norm_x: f64 },
}

/// Find a multiplier `h` of degree at most `d` with `h(λ_j) = W_j` and
/// minimal truncated multiplier norm.
///
/// The lifting acts on `H²_n^{≤d} ⊗ ℂ^m` with the embedding of the kernel
/// functions and the generated constraint on the constants, which reads
/// `h(λ_j) = W_j` exactly.
pub fn solve_np(sys: &PickSystem, d: usize, opts: &SolverOptions) -> Result<NpOutcome> {
    let test = psd_test(&pick_matrix(sys));
    let mx = model_x(sys);
    if !test.psd {
        return Ok(NpOutcome::Infeasible { min_eigenvalue: test.min_eigenvalue, norm_x: mx.norm });
    }
    let m = sys.target_dim;
    let f = TruncatedFock::new(sys.n, d)?;
    let ns = f.n_sym();
    let mut kv = zeros(ns, sys.len());
    for (j, p) in sys.nodes.iter().enumerate() {
        kv.set_column(j, &kernel_vector(p, &f)?);
    }
    let embed = kron(&kv, &identity(m));
    let v = multiplier_row(&f).ampliate(m);
    let layout = vec![Summand::Shift { kind: ShiftKind::Symmetric, n: sys.n, d, multiplicity: m }];
    let mut g = zeros(ns * m, m);
    g.view_mut((0, 0), (m, m)).copy_from(&identity(m));
    let side = LiftingSide::new(v, layout, embed)?.with_generator(g)?;
    let problem = LiftingProblem::commutant(side, sys.target_block_diag(), ConstraintKind::Generated)?
        .with_norm_x(mx.norm);
    let sol = min_norm_lifting(&problem, opts)?;

    let col = sol.z.columns(0, m);
    let coefficients: Vec<(MultiIndex, CMatrix)> = f
        .multi_indices()
        .iter()
        .enumerate()
        .map(|(pos, k)| {
            let w = (f.count_at(pos) as f64).sqrt();
            (k.clone(), col.rows(pos * m, m).into_owned() * real(w))
        })
        .collect();
    let mut node_residuals = Vec::with_capacity(sys.len());
    for (p, w) in sys.nodes.iter().zip(&sys.targets) {
        let mut h = zeros(m, m);
        for b in 0..m {
            for a in 0..m {
                let c = CVector::from_iterator(ns, (0..ns).map(|pos| col[(pos * m + a, b)]));
                h[(a, b)] = evaluate(&c, p, &f)?;
            }
        }
        node_residuals.push(spectral_norm(&(h - w)));
    }
    Ok(NpOutcome::Solved(NpSolution {
        degree: d,
        coefficients,
        achieved_norm: sol.achieved_norm,
        lower_bound: sol.lower_bound,
        norm_x: mx.norm,
        node_residuals,
        status: sol.status,
        iterations: sol.iterations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::multiplier_matrix;
    use crate::linalg::{c, orthonormalize};
    use crate::sampling;

    fn half_system() -> PickSystem {
        PickSystem::scalar(vec![vec![real(0.0)], vec![real(0.5)]], &[real(0.0), real(0.5)]).unwrap()
    }

    fn random_system(seed: u64, n: usize, len: usize, scale: f64) -> PickSystem {
        let mut rng = sampling::rng(seed);
        let nodes = (0..len).map(|_| sampling::ball_point(&mut rng, n, 0.9)).collect();
        let w: Vec<C64> = (0..len).map(|_| sampling::complex_normal(&mut rng) * scale).collect();
        PickSystem::scalar(nodes, &w).unwrap()
    }

    #[test]
    fn zero_targets_give_gram() {
        let sys = random_system(1, 2, 4, 0.0);
        assert!((pick_matrix(&sys) - sys.gram()).norm() < 1e-15);
        assert!(psd_test(&pick_matrix(&sys)).psd);
    }

    #[test]
    fn single_point_pick_value() {
        let lam = vec![c(0.3, 0.1), c(-0.2, 0.4)];
        for w in [c(0.6, 0.7), c(0.9, 0.5)] {
            let sys = PickSystem::scalar(vec![lam.clone()], &[w]).unwrap();
            let expect = (1.0 - w.norm_sqr()) / (1.0 - crate::fock::ball_norm(&lam).powi(2));
            let p = pick_matrix(&sys);
            assert!((p[(0, 0)] - real(expect)).norm() < 1e-14);
            assert_eq!(psd_test(&p).psd, w.norm() <= 1.0);
        }
    }

    #[test]
    fn identity_interpolant_pick_matrix() {
        let sys = half_system();
        let p = pick_matrix(&sys);
        for z in p.iter() {
            assert!((z - real(1.0)).norm() < 1e-14);
        }
        let mx = model_x(&sys);
        assert!((mx.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_targets_have_norm_modulus() {
        let mut rng = sampling::rng(5);
        let nodes: Vec<Vec<C64>> = (0..4).map(|_| sampling::ball_point(&mut rng, 2, 0.8)).collect();
        let cst = c(0.3, -0.4);
        let sys = PickSystem::scalar(nodes, &[cst; 4]).unwrap();
        assert!((model_x(&sys).norm - 0.5).abs() < 1e-12);
    }

    #[test]
    fn model_row_is_a_commuting_contraction() {
        for seed in 0..10 {
            let sys = random_system(seed, 3, 5, 1.0);
            let t = model_operators(&sys).t;
            assert!(t.row_norm() <= 1.0 + 1e-10);
            assert!(t.commutator_residual() <= 1e-10);
            let x = model_x(&sys).x;
            for b in t.blocks() {
                assert!(spectral_norm(&(b * &x - &x * b)) <= 1e-10);
            }
        }
    }

    #[test]
    fn single_node_model_is_scalar() {
        let lam = vec![c(0.3, 0.1), c(-0.2, 0.4)];
        let sys = PickSystem::scalar(vec![lam.clone()], &[real(0.2)]).unwrap();
        let t = model_operators(&sys).t;
        for i in 0..2 {
            assert!((t.block(i)[(0, 0)] - lam[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn model_matches_compressed_multipliers() {
        let mut rng = sampling::rng(9);
        let nodes: Vec<Vec<C64>> = (0..3).map(|_| sampling::ball_point(&mut rng, 2, 0.25)).collect();
        let sys = PickSystem::scalar(nodes.clone(), &[real(0.0); 3]).unwrap();
        let f = TruncatedFock::new(2, 16).unwrap();
        let mut kv = zeros(f.n_sym(), 3);
        for (j, p) in nodes.iter().enumerate() {
            kv.set_column(j, &kernel_vector(p, &f).unwrap());
        }
        // Orthonormal basis Q = K (K*K)^{-1/2} carries kernel coordinates a to (K*K)^{1/2} a.
        let q = orthonormalize(&kv).unwrap();
        let t = model_operators(&sys).t;
        for i in 0..2 {
            let m = multiplier_matrix(i, &f).unwrap();
            let compressed = q.adjoint() * m * &q;
            assert!(spectral_norm(&(compressed - t.block(i))) < 1e-8);
        }
    }

    #[test]
    fn pick_identity_in_orthonormal_coordinates() {
        // G^{1/2} (I − X X*) G^{1/2} equals the Pick matrix entrywise.
        for (seed, len) in [(2, 2), (3, 4)] {
            let sys = random_system(seed, 2, len, 0.7);
            let x = model_x(&sys).x;
            let s = sys.coords_sqrt();
            let lhs = &s * (identity(len) - &x * x.adjoint()) * &s;
            assert!((lhs - pick_matrix(&sys)).norm() < 1e-10);
        }
    }

    #[test]
    fn pick_sign_matches_model_norm() {
        for seed in 0..40 {
            let sys = random_system(100 + seed, 2, 3, 0.6);
            let test = psd_test(&pick_matrix(&sys));
            let norm = model_x(&sys).norm;
            if (norm - 1.0).abs() > 1e-8 {
                assert_eq!(test.psd, norm < 1.0, "seed {seed}: {test:?} norm {norm}");
            }
        }
    }

    #[test]
    fn matrix_targets_tensor_the_kernel_basis() {
        let nodes = vec![vec![c(0.1, 0.2)], vec![c(-0.4, 0.1)]];
        let w = CMatrix::from_fn(2, 2, |i, j| c(0.2 * i as f64, 0.1 * j as f64));
        let sys = PickSystem::new(nodes.clone(), vec![w.clone(), w.clone()]).unwrap();
        assert!((model_x(&sys).norm - spectral_norm(&w)).abs() < 1e-12);
        let p = pick_matrix(&sys);
        assert_eq!(p.shape(), (4, 4));
        let blk = (identity(2) - &w * w.adjoint()) * sys.gram()[(0, 1)];
        assert!((p.view((0, 2), (2, 2)) - blk).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(matches!(
            PickSystem::scalar(vec![vec![real(1.0)]], &[real(0.0)]),
            Err(Error::OutOfBall { .. })
        ));
        assert!(PickSystem::scalar(vec![vec![real(0.1)], vec![real(0.1)]], &[real(0.0); 2]).is_err());
        let close = vec![vec![real(0.1)], vec![real(0.1 + 1e-9)]];
        assert!(matches!(PickSystem::scalar(close, &[real(0.0); 2]), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn constant_targets_recover_constant() {
        let mut rng = sampling::rng(12);
        let nodes: Vec<Vec<C64>> = (0..3).map(|_| sampling::ball_point(&mut rng, 2, 0.8)).collect();
        let cst = c(0.3, 0.2);
        let sys = PickSystem::scalar(nodes, &[cst; 3]).unwrap();
        let NpOutcome::Solved(sol) = solve_np(&sys, 6, &SolverOptions::default()).unwrap() else {
            panic!("feasible system reported infeasible");
        };
        assert!(sol.max_residual() < 1e-10);
        assert!((sol.coefficients[0].1[(0, 0)] - cst).norm() < 1e-6);
        for (_, ck) in &sol.coefficients[1..] {
            assert!(ck.norm() < 1e-6);
        }
    }

    #[test]
    fn recovers_identity_multiplier() {
        let NpOutcome::Solved(sol) = solve_np(&half_system(), 10, &SolverOptions::default()).unwrap() else {
            panic!("feasible system reported infeasible");
        };
        for (k, ck) in &sol.coefficients {
            let expect = if k.0 == [1] { 1.0 } else { 0.0 };
            assert!((ck[(0, 0)] - real(expect)).norm() < 1e-6, "{k:?}: {}", ck[(0, 0)]);
        }
    }

    #[test]
    fn random_two_variable_system() {
        let mut rng = sampling::rng(31);
        let nodes: Vec<Vec<C64>> = (0..3).map(|_| sampling::ball_point(&mut rng, 2, 0.7)).collect();
        let w: Vec<C64> = (0..3).map(|_| sampling::complex_normal(&mut rng)).collect();
        let sys0 = PickSystem::scalar(nodes, &w).unwrap();
        let sys = sys0.scaled(real(0.95 / model_x(&sys0).norm));
        let opts = SolverOptions { target: Some(model_x(&sys).norm + 1e-3), ..Default::default() };
        let NpOutcome::Solved(sol) = solve_np(&sys, 10, &opts).unwrap() else {
            panic!("feasible system reported infeasible");
        };
        assert!(sol.max_residual() <= 1e-5);
        assert!(sol.achieved_norm <= sol.norm_x + 1e-3);
    }

    #[test]
    fn infeasible_system_is_certified() {
        let sys = PickSystem::scalar(vec![vec![real(0.0)], vec![real(0.5)]], &[real(0.0), real(0.9)]).unwrap();
        match solve_np(&sys, 6, &SolverOptions::default()).unwrap() {
            NpOutcome::Infeasible { min_eigenvalue, norm_x } => {
                assert!(min_eigenvalue < 0.0);
                assert!(norm_x > 1.0);
            }
            NpOutcome::Solved(_) => panic!("infeasible system solved"),
        }
    }

    #[test]
    fn scaling_covariance() {
        let sys0 = random_system(44, 2, 3, 1.0);
        let sys = sys0.scaled(real(0.8 / model_x(&sys0).norm));
        let cst = c(0.6, -0.8) * 0.5;
        let scaled = sys.scaled(cst);
        assert!((model_x(&scaled).norm - 0.5 * model_x(&sys).norm).abs() < 1e-12);
        let opts = SolverOptions { tol: 1e-7, ..Default::default() };
        let (NpOutcome::Solved(a), NpOutcome::Solved(b)) =
            (solve_np(&sys, 4, &opts).unwrap(), solve_np(&scaled, 4, &opts).unwrap())
        else {
            panic!("feasible system reported infeasible");
        };
        let lhs: f64 = a.coefficients.iter().map(|(_, c)| c[(0, 0)].norm_sqr()).sum::<f64>().sqrt();
        let diff: f64 = a
            .coefficients
            .iter()
            .zip(&b.coefficients)
            .map(|((_, x), (_, y))| (x[(0, 0)] * cst - y[(0, 0)]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-3 * lhs.max(1.0), "{diff}");
        assert!((b.achieved_norm - 0.5 * a.achieved_norm).abs() < 1e-5);
    }
}
