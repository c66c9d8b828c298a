//! Seeded random instances for tests, the CLI self-test and sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fock::multi_indices_of_degree;
use crate::linalg::{c, identity, CMatrix, C64};
use crate::operator::{PolynomialSpec, RowOperator};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn complex_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Commuting row: every entry is a random polynomial of degree ≤ 2 in one
/// random matrix, scaled to the given row norm.
pub fn commuting_row<R: Rng>(rng: &mut R, n: usize, m: usize, row_norm: f64) -> RowOperator {
    let a = complex_matrix(rng, m, m);
    let a2 = &a * &a;
    let blocks: Vec<CMatrix> = (0..n)
        .map(|i| {
            if i == 0 {
                a.clone()
            } else {
                identity(m) * complex_normal(rng) + &a * complex_normal(rng) + &a2 * complex_normal(rng)
            }
        })
        .collect();
    scale_to(RowOperator::new(blocks).expect("square blocks"), row_norm)
}

/// Unstructured row with the given row norm.
pub fn free_row<R: Rng>(rng: &mut R, n: usize, m: usize, row_norm: f64) -> RowOperator {
    let blocks = (0..n).map(|_| complex_matrix(rng, m, m)).collect();
    scale_to(RowOperator::new(blocks).expect("square blocks"), row_norm)
}

fn scale_to(t: RowOperator, row_norm: f64) -> RowOperator {
    let s = t.row_norm();
    if s == 0.0 {
        t
    } else {
        t.scaled(row_norm / s)
    }
}

/// Polynomial with a random coefficient on every monomial of degree ≤ `deg`.
pub fn polynomial<R: Rng>(rng: &mut R, n: usize, deg: usize, commuting: bool) -> PolynomialSpec {
    let mut terms = Vec::new();
    if commuting {
        for j in 0..=deg {
            for k in multi_indices_of_degree(n, j) {
                terms.push((k.0, complex_normal(rng)));
            }
        }
        PolynomialSpec::commuting(terms)
    } else {
        let mut level: Vec<Vec<usize>> = vec![Vec::new()];
        for j in 0..=deg {
            for w in &level {
                terms.push((w.clone(), complex_normal(rng)));
            }
            if j < deg {
                level = level
                    .iter()
                    .flat_map(|w| {
                        (0..n).map(move |l| {
                            let mut v = w.clone();
                            v.push(l);
                            v
                        })
                    })
                    .collect();
            }
        }
        PolynomialSpec::free(terms)
    }
}

/// Uniform point on the unit sphere of `ℂⁿ`.
pub fn sphere_point<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
    let norm = crate::fock::ball_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

/// Point of the ball with norm uniform in `[0, radius)`.
pub fn ball_point<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<C64> {
    let r: f64 = rng.gen::<f64>() * radius;
    sphere_point(rng, n).into_iter().map(|z| z * r).collect()
}
