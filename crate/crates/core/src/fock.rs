//! Truncated full Fock space, truncated symmetric Fock (Drury-Arveson) space,
//! and the operators and kernel vectors realized on them.
//!
//! Letters are 0-based: a word over `n` letters uses `0..n`. Both bases are
//! ordered degree-major; words are lexicographic within a degree, and
//! multi-indices are ordered with the first coordinate decreasing, so
//! `(1,0)` precedes `(0,1)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{real, CMatrix, CVector, C64};
use crate::operator::{PolynomialSpec, RowOperator};

/// A word in the free semigroup on `n` letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter counts: the multi-index `k` with `w(λ) = λ^k`.
    pub fn content(&self, n: usize) -> Result<MultiIndex> {
        let mut k = vec![0; n];
        for &l in &self.0 {
            if l >= n {
                return Err(Error::LetterOutOfRange { letter: l, n });
            }
            k[l] += 1;
        }
        Ok(MultiIndex(k))
    }
}

/// A multi-index `k ∈ ℕ₀ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut k = vec![0; n];
        k[i] = 1;
        MultiIndex(k)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// A representative word: letters in increasing order.
    pub fn word(&self) -> Word {
        let mut w = Vec::with_capacity(self.degree());
        for (i, &ki) in self.0.iter().enumerate() {
            w.extend(std::iter::repeat_n(i, ki));
        }
        Word(w)
    }

    /// `λ^k = Π λ_i^{k_i}`.
    pub fn monomial(&self, lambda: &[C64]) -> C64 {
        self.0
            .iter()
            .zip(lambda)
            .fold(real(1.0), |acc, (&ki, &l)| acc * l.powu(ki as u32))
    }
}

fn binomial(a: u64, b: u64) -> Option<u128> {
    let b = b.min(a - b);
    let mut r: u128 = 1;
    for i in 0..b {
        r = r.checked_mul((a - i) as u128)? / (i as u128 + 1);
    }
    Some(r)
}

/// `|P_k| = |k|! / (k_1! ⋯ k_n!)`, the number of words with letter content `k`.
/// Computed as a product of binomials; overflow of `u64` is an error.
pub fn multinomial_count(k: &MultiIndex) -> Result<u64> {
    let mut total: u64 = 0;
    let mut acc: u128 = 1;
    for &ki in &k.0 {
        total = total
            .checked_add(ki as u64)
            .ok_or_else(|| Error::Overflow(k.0.clone()))?;
        let b = binomial(total, ki as u64).ok_or_else(|| Error::Overflow(k.0.clone()))?;
        acc = acc.checked_mul(b).ok_or_else(|| Error::Overflow(k.0.clone()))?;
        if acc > u64::MAX as u128 {
            return Err(Error::Overflow(k.0.clone()));
        }
    }
    Ok(acc as u64)
}

/// Multi-indices of exact degree `deg`, first coordinate decreasing.
pub fn multi_indices_of_degree(n: usize, deg: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, deg: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(deg);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=deg).rev() {
            prefix.push(first);
            rec(n, deg - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if deg == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Largest number of words `Σ_{j ≤ d} nʲ` a truncation may enumerate.
pub const MAX_WORDS: usize = 1 << 22;

/// Index tables for the truncated full and symmetric Fock spaces.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    n: usize,
    d: usize,
    words: Vec<Word>,
    multi: Vec<MultiIndex>,
    multi_pos: HashMap<MultiIndex, usize>,
    word_offsets: Vec<usize>,
    multi_offsets: Vec<usize>,
    counts: Vec<u64>,
}

impl TruncatedFock {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let mut total: usize = 0;
        let mut level_size: usize = 1;
        for j in 0..=d {
            total = total.saturating_add(level_size);
            if total > MAX_WORDS {
                return Err(Error::InvalidParameter(format!(
                    "n = {n}, d = {d} needs more than {MAX_WORDS} words (exceeded at degree {j})"
                )));
            }
            level_size = level_size.saturating_mul(n);
        }
        let mut words = vec![Word::empty()];
        let mut word_offsets = vec![0];
        let mut level = vec![Word::empty()];
        for _ in 0..d {
            word_offsets.push(words.len());
            let mut next = Vec::with_capacity(level.len() * n);
            for w in &level {
                for l in 0..n {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            words.extend(next.iter().cloned());
            level = next;
        }
        word_offsets.push(words.len());

        let mut multi = Vec::new();
        let mut multi_offsets = Vec::new();
        for deg in 0..=d {
            multi_offsets.push(multi.len());
            multi.extend(multi_indices_of_degree(n, deg));
        }
        multi_offsets.push(multi.len());
        let multi_pos = multi.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let counts = multi.iter().map(multinomial_count).collect::<Result<Vec<_>>>()?;
        Ok(TruncatedFock {
            n,
            d,
            words,
            multi,
            multi_pos,
            word_offsets,
            multi_offsets,
            counts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `Σ_{j≤d} n^j`.
    pub fn n_full(&self) -> usize {
        self.words.len()
    }

    /// `C(n+d, d)`.
    pub fn n_sym(&self) -> usize {
        self.multi.len()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn multi_indices(&self) -> &[MultiIndex] {
        &self.multi
    }

    pub fn word(&self, idx: usize) -> &Word {
        &self.words[idx]
    }

    pub fn multi_index(&self, idx: usize) -> &MultiIndex {
        &self.multi[idx]
    }

    /// `|P_k|` for the multi-index at position `idx`.
    pub fn count_at(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    /// Range of word positions of exact degree `deg`.
    pub fn word_degree_range(&self, deg: usize) -> std::ops::Range<usize> {
        self.word_offsets[deg]..self.word_offsets[deg + 1]
    }

    /// Range of multi-index positions of exact degree `deg`.
    pub fn multi_degree_range(&self, deg: usize) -> std::ops::Range<usize> {
        self.multi_offsets[deg]..self.multi_offsets[deg + 1]
    }

    pub fn word_index(&self, w: &Word) -> Result<usize> {
        if w.len() > self.d {
            return Err(Error::DegreeOutOfRange { degree: w.len(), max: self.d });
        }
        let mut idx = 0usize;
        for &l in &w.0 {
            if l >= self.n {
                return Err(Error::LetterOutOfRange { letter: l, n: self.n });
            }
            idx = idx * self.n + l;
        }
        Ok(self.word_offsets[w.len()] + idx)
    }

    pub fn multi_index_position(&self, k: &MultiIndex) -> Result<usize> {
        if k.n() != self.n {
            return Err(Error::Dimension(format!(
                "multi-index has {} entries, expected {}",
                k.n(),
                self.n
            )));
        }
        if k.degree() > self.d {
            return Err(Error::DegreeOutOfRange { degree: k.degree(), max: self.d });
        }
        Ok(self.multi_pos[k])
    }

    fn check_letter(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::LetterOutOfRange { letter: i, n: self.n });
        }
        Ok(())
    }
}

/// `ζ^k` in full Fock coordinates: `1/|P_k|` on every word with content `k`.
pub fn sym_basis_vector(k: &MultiIndex, f: &TruncatedFock) -> Result<CVector> {
    let pos = f.multi_index_position(k)?;
    let coeff = 1.0 / f.count_at(pos) as f64;
    let mut v = CVector::zeros(f.n_full());
    for idx in f.word_degree_range(k.degree()) {
        if f.word(idx).content(f.n)? == *k {
            v[idx] = real(coeff);
        }
    }
    Ok(v)
}

/// Isometry `H²_n → F_n` whose columns are the orthonormal vectors
/// `e_k = sqrt|P_k| ζ^k`.
pub fn sym_embedding(f: &TruncatedFock) -> CMatrix {
    let mut e = CMatrix::zeros(f.n_full(), f.n_sym());
    for (idx, w) in f.words().iter().enumerate() {
        let k = w.content(f.n).expect("letters in range");
        let pos = f.multi_pos[&k];
        e[(idx, pos)] = real(1.0 / (f.count_at(pos) as f64).sqrt());
    }
    e
}

/// Orthogonal projection of `F_n` onto the symmetric subspace.
pub fn symmetric_projection(f: &TruncatedFock) -> CMatrix {
    let e = sym_embedding(f);
    &e * e.adjoint()
}

/// Left creation operator `L_i ξ_w = ξ_{iw}`, annihilating the top degree.
pub fn left_creation(i: usize, f: &TruncatedFock) -> Result<CMatrix> {
    f.check_letter(i)?;
    let mut l = CMatrix::zeros(f.n_full(), f.n_full());
    for (idx, w) in f.words().iter().enumerate() {
        if w.len() < f.d {
            let mut v = Vec::with_capacity(w.len() + 1);
            v.push(i);
            v.extend_from_slice(&w.0);
            l[(f.word_index(&Word(v))?, idx)] = real(1.0);
        }
    }
    Ok(l)
}

/// Right creation operator `R_v ξ_w = ξ_{wv}` (zero past the top degree).
/// These span the commutant of the truncated left creation operators.
pub fn right_creation(v: &Word, f: &TruncatedFock) -> Result<CMatrix> {
    let mut r = CMatrix::zeros(f.n_full(), f.n_full());
    for (idx, w) in f.words().iter().enumerate() {
        if w.len() + v.len() <= f.d {
            let mut u = w.0.clone();
            u.extend_from_slice(&v.0);
            r[(f.word_index(&Word(u))?, idx)] = real(1.0);
        }
    }
    Ok(r)
}

/// Weight of `M_{z_i}` from `e_k` to `e_{k+e_i}`.
pub fn multiplier_weight(k: &MultiIndex, i: usize) -> f64 {
    ((k.0[i] + 1) as f64 / (k.degree() + 1) as f64).sqrt()
}

/// `M_{z_i}` in the orthonormal basis `e_k`, annihilating the top degree.
pub fn multiplier_matrix(i: usize, f: &TruncatedFock) -> Result<CMatrix> {
    f.check_letter(i)?;
    let mut m = CMatrix::zeros(f.n_sym(), f.n_sym());
    for (pos, k) in f.multi_indices().iter().enumerate() {
        if k.degree() < f.d {
            let target = k.plus(&MultiIndex::unit(f.n, i));
            m[(f.multi_pos[&target], pos)] = real(multiplier_weight(k, i));
        }
    }
    Ok(m)
}

/// The row `[M_{z_1} … M_{z_n}]` on truncated `H²_n`.
pub fn multiplier_row(f: &TruncatedFock) -> RowOperator {
    let blocks = (0..f.n)
        .map(|i| multiplier_matrix(i, f).expect("letter in range"))
        .collect();
    RowOperator::new(blocks).expect("square blocks of equal size")
}

/// The row `[L_1 … L_n]` on truncated `F_n`.
pub fn creation_row(f: &TruncatedFock) -> RowOperator {
    let blocks = (0..f.n)
        .map(|i| left_creation(i, f).expect("letter in range"))
        .collect();
    RowOperator::new(blocks).expect("square blocks of equal size")
}

/// Nonzero entries of `M^k = M_{z_1}^{k_1} ⋯ M_{z_n}^{k_n}` as
/// `(row, col, weight)`, composed from the single-step weights.
pub fn multiplier_power_entries(k: &MultiIndex, f: &TruncatedFock) -> Vec<(usize, usize, f64)> {
    let word = k.word();
    let mut out = Vec::new();
    for (pos, s) in f.multi_indices().iter().enumerate() {
        if s.degree() + k.degree() > f.d {
            continue;
        }
        let mut cur = s.clone();
        let mut w = 1.0;
        for &i in word.0.iter().rev() {
            w *= multiplier_weight(&cur, i);
            cur.0[i] += 1;
        }
        out.push((f.multi_pos[&cur], pos, w));
    }
    out
}

/// `p(M)` for commuting `p`, or `p(L)` for free `p`, assembled entrywise from
/// the shift structure instead of by matrix products.
pub fn model_poly(p: &PolynomialSpec, f: &TruncatedFock) -> Result<CMatrix> {
    let mut acc = if p.commuting { CMatrix::zeros(f.n_sym(), f.n_sym()) } else { CMatrix::zeros(f.n_full(), f.n_full()) };
    for (idx, coeff) in &p.terms {
        if p.commuting {
            if idx.len() != f.n {
                return Err(Error::Dimension("multi-index length differs from n".into()));
            }
            for (r, c, w) in multiplier_power_entries(&MultiIndex(idx.clone()), f) {
                acc[(r, c)] += coeff * w;
            }
        } else {
            for &l in idx {
                f.check_letter(l)?;
            }
            for (col, w) in f.words().iter().enumerate() {
                if w.len() + idx.len() <= f.d {
                    let mut v = idx.clone();
                    v.extend_from_slice(&w.0);
                    acc[(f.word_index(&Word(v))?, col)] += coeff;
                }
            }
        }
    }
    Ok(acc)
}

fn inner(lambda: &[C64], mu: &[C64]) -> C64 {
    lambda.iter().zip(mu).map(|(l, m)| l * m.conj()).sum()
}

pub fn ball_norm(lambda: &[C64]) -> f64 {
    lambda.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Truncated kernel vector `k_λ`, coordinates `λ̄^k sqrt|P_k|` in the `e_k` basis.
pub fn kernel_vector(lambda: &[C64], f: &TruncatedFock) -> Result<CVector> {
    if lambda.len() != f.n {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, expected {}",
            lambda.len(),
            f.n
        )));
    }
    let norm = ball_norm(lambda);
    if norm >= 1.0 {
        return Err(Error::OutOfBall { norm });
    }
    let conj: Vec<C64> = lambda.iter().map(|z| z.conj()).collect();
    Ok(CVector::from_iterator(
        f.n_sym(),
        f.multi_indices()
            .iter()
            .enumerate()
            .map(|(pos, k)| k.monomial(&conj) * (f.count_at(pos) as f64).sqrt()),
    ))
}

/// Drury-Arveson kernel `1 / (1 − ⟨λ, μ⟩)`.
pub fn kernel_value(lambda: &[C64], mu: &[C64]) -> Result<C64> {
    if lambda.len() != mu.len() {
        return Err(Error::Dimension("points of different dimension".into()));
    }
    for p in [lambda, mu] {
        let norm = ball_norm(p);
        if norm >= 1.0 {
            return Err(Error::OutOfBall { norm });
        }
    }
    Ok(real(1.0) / (real(1.0) - inner(lambda, mu)))
}

/// Evaluate the polynomial whose `e_k`-coordinates are `coords` at `λ`, using
/// `⟨f, k_λ⟩ = f(λ)`.
pub fn evaluate(coords: &CVector, lambda: &[C64], f: &TruncatedFock) -> Result<C64> {
    let k = kernel_vector(lambda, f)?;
    Ok(k.dotc(coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, spectral_norm};
    use crate::sampling;

    /// Oracle: count words of length |k| with content k by brute force.
    fn brute_count(k: &[usize]) -> u64 {
        let n = k.len();
        let len: usize = k.iter().sum();
        let mut count = 0;
        let total = n.pow(len as u32);
        for code in 0..total {
            let mut c = vec![0; n];
            let mut x = code;
            for _ in 0..len {
                c[x % n] += 1;
                x /= n;
            }
            if c == k {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn multinomial_matches_word_enumeration() {
        assert_eq!(multinomial_count(&MultiIndex(vec![0, 0])).unwrap(), 1);
        assert_eq!(multinomial_count(&MultiIndex(vec![2, 1])).unwrap(), brute_count(&[2, 1]));
        assert_eq!(multinomial_count(&MultiIndex(vec![2, 1])).unwrap(), 3);
        assert_eq!(
            multinomial_count(&MultiIndex(vec![1, 1, 1])).unwrap(),
            brute_count(&[1, 1, 1])
        );
        assert_eq!(multinomial_count(&MultiIndex(vec![1, 1, 1])).unwrap(), 6);
        for k in [[3, 2, 1], [0, 4, 2], [2, 2, 2]] {
            assert_eq!(multinomial_count(&MultiIndex(k.to_vec())).unwrap(), brute_count(&k));
        }
    }

    #[test]
    fn multinomial_overflow_is_an_error() {
        assert!(matches!(
            multinomial_count(&MultiIndex(vec![40, 40, 40])),
            Err(Error::Overflow(_))
        ));
        // 66 choose 33 fits in 64 bits.
        assert!(multinomial_count(&MultiIndex(vec![33, 33])).is_ok());
    }

    #[test]
    fn dimensions() {
        let f = TruncatedFock::new(2, 3).unwrap();
        assert_eq!(f.n_full(), 15);
        assert_eq!(f.n_sym(), 10);
        let f = TruncatedFock::new(1, 5).unwrap();
        assert_eq!((f.n_full(), f.n_sym()), (6, 6));
        let f = TruncatedFock::new(3, 0).unwrap();
        assert_eq!((f.n_full(), f.n_sym()), (1, 1));
    }

    #[test]
    fn ordering_is_degree_major() {
        let f = TruncatedFock::new(2, 2).unwrap();
        let ks: Vec<Vec<usize>> = f.multi_indices().iter().map(|k| k.0.clone()).collect();
        assert_eq!(
            ks,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        let ws: Vec<Vec<usize>> = f.words().iter().map(|w| w.0.clone()).collect();
        assert_eq!(ws[3..7], [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (i, w) in f.words().iter().enumerate() {
            assert_eq!(f.word_index(w).unwrap(), i);
        }
    }

    #[test]
    fn sym_basis_vector_examples() {
        let f = TruncatedFock::new(2, 3).unwrap();
        let z = sym_basis_vector(&MultiIndex(vec![0, 0]), &f).unwrap();
        assert_eq!(z[0], real(1.0));
        assert!((z.norm() - 1.0).abs() < 1e-15);
        let z = sym_basis_vector(&MultiIndex(vec![1, 1]), &f).unwrap();
        let i12 = f.word_index(&Word(vec![0, 1])).unwrap();
        let i21 = f.word_index(&Word(vec![1, 0])).unwrap();
        assert_eq!(z[i12], real(0.5));
        assert_eq!(z[i21], real(0.5));
        assert!((z.norm_squared() - 0.5).abs() < 1e-15);
        let z = sym_basis_vector(&MultiIndex(vec![2, 0]), &f).unwrap();
        assert_eq!(z[f.word_index(&Word(vec![0, 0])).unwrap()], real(1.0));
        assert!(matches!(
            sym_basis_vector(&MultiIndex(vec![2, 2]), &f),
            Err(Error::DegreeOutOfRange { .. })
        ));
    }

    #[test]
    fn left_creation_examples() {
        let f = TruncatedFock::new(1, 2).unwrap();
        let l = left_creation(0, &f).unwrap();
        let expect = CMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0].map(real),
        );
        assert_eq!(l, expect);

        let f = TruncatedFock::new(2, 1).unwrap();
        let l = left_creation(0, &f).unwrap();
        assert_eq!(l[(1, 0)], real(1.0));
        assert_eq!(l.column(1).norm(), 0.0);
        assert_eq!(l.column(2).norm(), 0.0);
        assert!(left_creation(2, &f).is_err());
    }

    #[test]
    fn symmetric_projection_examples() {
        let f = TruncatedFock::new(1, 4).unwrap();
        assert!(spectral_norm(&(symmetric_projection(&f) - CMatrix::identity(5, 5))) < 1e-15);
        let f = TruncatedFock::new(2, 1).unwrap();
        assert!(spectral_norm(&(symmetric_projection(&f) - CMatrix::identity(3, 3))) < 1e-15);

        // Oracle: orthonormalize the ζ^k by Gram-Schmidt-free construction,
        // i.e. normalize them (they are already mutually orthogonal).
        let f = TruncatedFock::new(2, 2).unwrap();
        let mut oracle = CMatrix::zeros(f.n_full(), f.n_full());
        for k in f.multi_indices() {
            let z = sym_basis_vector(k, &f).unwrap();
            let e = &z / real(z.norm());
            oracle += &e * e.adjoint();
        }
        let p = symmetric_projection(&f);
        assert!(spectral_norm(&(&p - &oracle)) < 1e-14);
        let rank = crate::linalg::rank(&p, 1e-8);
        assert_eq!(rank, 6);
        let i12 = f.word_index(&Word(vec![0, 1])).unwrap();
        let i21 = f.word_index(&Word(vec![1, 0])).unwrap();
        for (a, b) in [(i12, i12), (i12, i21), (i21, i12), (i21, i21)] {
            assert!((p[(a, b)] - real(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn multiplier_matches_compression_of_creation() {
        for (n, d) in [(1, 4), (2, 3), (3, 2)] {
            let f = TruncatedFock::new(n, d).unwrap();
            let e = sym_embedding(&f);
            for i in 0..n {
                let l = left_creation(i, &f).unwrap();
                let compressed = e.adjoint() * l * &e;
                let m = multiplier_matrix(i, &f).unwrap();
                assert!(spectral_norm(&(compressed - m)) < 1e-12);
            }
        }
    }

    #[test]
    fn multiplier_examples() {
        let f = TruncatedFock::new(2, 3).unwrap();
        let m1 = multiplier_matrix(0, &f).unwrap();
        let m2 = multiplier_matrix(1, &f).unwrap();
        let p = |k: [usize; 2]| f.multi_index_position(&MultiIndex(k.to_vec())).unwrap();
        assert_eq!(m1[(p([1, 0]), p([0, 0]))], real(1.0));
        assert_eq!(m1[(p([2, 0]), p([1, 0]))], real(1.0));
        assert!((m2[(p([1, 1]), p([1, 0]))] - real(0.5f64.sqrt())).norm() < 1e-15);
        for (n, d) in [(1, 3), (2, 1), (2, 4), (3, 3)] {
            let f = TruncatedFock::new(n, d).unwrap();
            assert!((multiplier_row(&f).row_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplier_power_entries_match_products() {
        let f = TruncatedFock::new(2, 4).unwrap();
        let m = multiplier_row(&f);
        let k = MultiIndex(vec![2, 1]);
        let dense = m.apply_word(&k.word().0).unwrap();
        let mut sparse = CMatrix::zeros(f.n_sym(), f.n_sym());
        for (r, s, w) in multiplier_power_entries(&k, &f) {
            sparse[(r, s)] = real(w);
        }
        assert!(spectral_norm(&(dense - sparse)) < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let f = TruncatedFock::new(2, 6).unwrap();
        let k0 = kernel_vector(&[real(0.0), real(0.0)], &f).unwrap();
        assert_eq!(k0[0], real(1.0));
        assert!((k0.norm() - 1.0).abs() < 1e-15);
        assert_eq!(kernel_value(&[real(0.0)], &[real(0.0)]).unwrap(), real(1.0));
        let half = [real(0.5), real(0.0)];
        let v = kernel_value(&half, &half).unwrap();
        assert!((v - real(4.0 / 3.0)).norm() < 1e-15);
        // Szegő kernel in one variable.
        let z = c(0.3, 0.2);
        let w = c(-0.1, 0.5);
        let v = kernel_value(&[z], &[w]).unwrap();
        assert!((v - real(1.0) / (real(1.0) - z * w.conj())).norm() < 1e-15);
        assert!(matches!(
            kernel_vector(&[real(0.8), real(0.6)], &f),
            Err(Error::OutOfBall { .. })
        ));
    }

    #[test]
    fn kernel_reproduces_monomials() {
        let f = TruncatedFock::new(2, 5).unwrap();
        let lambda = [c(0.3, -0.2), c(0.1, 0.4)];
        let kl = kernel_vector(&lambda, &f).unwrap();
        for k in f.multi_indices() {
            // ζ^k in e-coordinates is e_k / sqrt|P_k|.
            let pos = f.multi_index_position(k).unwrap();
            let mut zeta = CVector::zeros(f.n_sym());
            zeta[pos] = real(1.0 / (f.count_at(pos) as f64).sqrt());
            let val = kl.dotc(&zeta);
            assert!((val - k.monomial(&lambda)).norm() < 1e-14);
        }
    }

    #[test]
    fn kernel_eigenvector_residual_is_top_degree() {
        let d = 7;
        let f = TruncatedFock::new(2, d).unwrap();
        let lambda = [c(0.4, 0.1), c(-0.2, 0.3)];
        let kl = kernel_vector(&lambda, &f).unwrap();
        let norm = ball_norm(&lambda);
        for i in 0..2 {
            let m = multiplier_matrix(i, &f).unwrap();
            let res = m.adjoint() * &kl - &kl * lambda[i].conj();
            assert!(res.norm() <= norm.powi(d as i32) * ((d + 1) as f64).sqrt());
            // Below the top degree the eigen-relation is exact.
            for pos in 0..f.multi_degree_range(d).start {
                assert!(res[pos].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn kernel_vector_inner_product_tail() {
        let d = 8;
        let f = TruncatedFock::new(3, d).unwrap();
        let lambda = [c(0.3, 0.1), c(-0.2, 0.2), c(0.1, 0.0)];
        let mu = [c(0.1, -0.3), c(0.25, 0.1), c(0.0, 0.2)];
        let kl = kernel_vector(&lambda, &f).unwrap();
        let km = kernel_vector(&mu, &f).unwrap();
        let exact = kernel_value(&lambda, &mu).unwrap();
        let q = inner(&lambda, &mu).norm();
        let tail = q.powi(d as i32 + 1) / (1.0 - q);
        assert!((kl.dotc(&km) - exact).norm() <= tail + 1e-14);
    }

    #[test]
    fn model_poly_matches_dense_products() {
        let mut rng = sampling::rng(9);
        for (n, d) in [(1, 5), (2, 4), (3, 3)] {
            let f = TruncatedFock::new(n, d).unwrap();
            for commuting in [true, false] {
                let p = sampling::polynomial(&mut rng, n, 3, commuting);
                let model = if commuting { multiplier_row(&f) } else { creation_row(&f) };
                let dense = model.poly_eval(&p, 1e-10).unwrap();
                assert!((model_poly(&p, &f).unwrap() - dense).norm() < 1e-12);
            }
        }
    }
}
