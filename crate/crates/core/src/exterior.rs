//! Dense exterior algebra over `R^n`: index combinations, k-vectors, wedge
//! and inner products, second compound matrices and Plücker coordinates.
//!
//! Indices are 1-based throughout and combinations are stored in
//! lexicographic order, so the coefficient of `e_{i1} ∧ … ∧ e_{ik}` lives at
//! the lexicographic rank of `{i1 < … < ik}`.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Strictly increasing list of 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexCombo(Vec<usize>);

impl IndexCombo {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidCombo("indices are 1-based".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCombo(format!("{indices:?} is not strictly increasing")));
        }
        Ok(Self(indices))
    }

    /// Sorts and de-duplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i > 0, "indices are 1-based");
        Self(vec![i])
    }

    /// `{lo, lo+1, …, hi}`; empty when `hi < lo`.
    pub fn range(lo: usize, hi: usize) -> Self {
        assert!(lo > 0, "indices are 1-based");
        Self((lo..=hi).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.max() {
            Some(m) if m > n => Err(Error::IndexOutOfRange { index: m, max: n }),
            _ => Ok(()),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &[usize]) -> bool {
        self.0.iter().all(|i| other.binary_search(i).is_ok())
    }

    /// Zero-based positions, for indexing into slices.
    pub fn zero_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i - 1).collect()
    }
}

impl TryFrom<Vec<usize>> for IndexCombo {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<IndexCombo> for Vec<usize> {
    fn from(c: IndexCombo) -> Self {
        c.0
    }
}

impl fmt::Display for IndexCombo {
    /// Dash-joined, e.g. `1-3-4`; the empty combination prints as the empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("-"))
    }
}

impl FromStr for IndexCombo {
    type Err = Error;

    /// Accepts `1,2,3`, `1-2-3`, `{1,2}` and the empty string.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        if body.trim().is_empty() {
            return Ok(Self::empty());
        }
        let idx = body
            .split([',', '-', ' '])
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad index `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_unsorted(idx)
    }
}

/// Binomial coefficient (saturating at `u128::MAX`, which never occurs for
/// the ground-set sizes used here).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lexicographic iterator over the `k`-subsets of `{1..n}`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let cur = if k <= n { Some((1..=k).collect()) } else { None };
        Self { n, cur }
    }
}

impl Iterator for Combinations {
    type Item = IndexCombo;

    fn next(&mut self) -> Option<IndexCombo> {
        let cur = self.cur.as_mut()?;
        let out = IndexCombo(cur.clone());
        let k = cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n - (k - 1 - i) {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Lexicographic rank of a `k`-combination of `{1..n}`.
pub fn combo_rank(n: usize, combo: &[usize]) -> usize {
    let k = combo.len();
    let mut rank: u128 = 0;
    let mut prev = 0;
    for (i, &c) in combo.iter().enumerate() {
        for v in prev + 1..c {
            rank += binomial(n - v, k - i - 1);
        }
        prev = c;
    }
    rank as usize
}

/// Inverse of [`combo_rank`].
pub fn combo_unrank(n: usize, k: usize, mut rank: usize) -> IndexCombo {
    let mut out = Vec::with_capacity(k);
    let mut v = 1;
    for i in 0..k {
        loop {
            let count = binomial(n - v, k - i - 1) as usize;
            if rank < count {
                break;
            }
            rank -= count;
            v += 1;
        }
        out.push(v);
        v += 1;
    }
    IndexCombo(out)
}

/// A homogeneous multivector of fixed grade in `⋀^k R^n`, stored densely by
/// lexicographic combination rank.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    grade: usize,
    ambient_dim: usize,
    coeffs: Vec<f64>,
}

impl KVector {
    pub fn zero(grade: usize, ambient_dim: usize) -> Self {
        let len = binomial(ambient_dim, grade) as usize;
        Self { grade, ambient_dim, coeffs: vec![0.0; len] }
    }

    /// Grade-0 element with the given value.
    pub fn scalar(value: f64, ambient_dim: usize) -> Self {
        Self { grade: 0, ambient_dim, coeffs: vec![value] }
    }

    /// Grade-1 element with the given coordinates.
    pub fn from_vector(v: &[f64]) -> Self {
        Self { grade: 1, ambient_dim: v.len(), coeffs: v.to_vec() }
    }

    /// `e_{i1} ∧ … ∧ e_{ik}`.
    pub fn basis(combo: &IndexCombo, ambient_dim: usize) -> Result<Self> {
        combo.check_within(ambient_dim)?;
        let mut out = Self::zero(combo.len(), ambient_dim);
        out.coeffs[combo_rank(ambient_dim, combo.as_slice())] = 1.0;
        Ok(out)
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Coefficients in lexicographic combination order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, combo: &IndexCombo) -> f64 {
        if combo.len() != self.grade || combo.max().is_some_and(|m| m > self.ambient_dim) {
            return 0.0;
        }
        self.coeffs[combo_rank(self.ambient_dim, combo.as_slice())]
    }

    /// Non-zero terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (IndexCombo, f64)> + '_ {
        let (n, k) = (self.ambient_dim, self.grade);
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(move |(r, &c)| (combo_unrank(n, k, r), c))
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// Sign of `e_A ∧ e_B` relative to `e_{A∪B}`, or `None` when they overlap.
fn merge_sign(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            merged.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            // b[j] jumps over the remaining elements of a
            inversions += a.len() - i;
            merged.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    Some((merged, sign))
}

/// Exterior product. The result has grade `grade(a) + grade(b)`; when that
/// exceeds the ambient dimension it is the (empty) zero element.
pub fn wedge(a: &KVector, b: &KVector) -> Result<KVector> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch(a.ambient_dim, b.ambient_dim));
    }
    let n = a.ambient_dim;
    let mut out = KVector::zero(a.grade + b.grade, n);
    if out.coeffs.is_empty() {
        return Ok(out);
    }
    for (ca, xa) in a.terms() {
        for (cb, xb) in b.terms() {
            if let Some((merged, sign)) = merge_sign(ca.as_slice(), cb.as_slice()) {
                out.coeffs[combo_rank(n, &merged)] += sign * xa * xb;
            }
        }
    }
    Ok(out)
}

/// Euclidean inner product on `⋀^k R^n` (the basis `e_S` is orthonormal).
pub fn inner(a: &KVector, b: &KVector) -> Result<f64> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch(a.ambient_dim, b.ambient_dim));
    }
    if a.grade != b.grade {
        return Err(Error::GradeMismatch(a.grade, b.grade));
    }
    Ok(linalg::dot(&a.coeffs, &b.coeffs))
}

/// `z_{s1} ∧ z_{s2} ∧ …` for the columns selected by `s` (1-based), taken in
/// increasing index order. All columns must share the same length.
pub fn wedge_columns(columns: &[Vec<f64>], s: &IndexCombo) -> Result<KVector> {
    s.check_within(columns.len())?;
    let dim = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch(bad.len(), dim));
    }
    let mut acc = KVector::scalar(1.0, dim);
    for i in s.iter() {
        acc = wedge(&acc, &KVector::from_vector(&columns[i - 1]))?;
    }
    Ok(acc)
}

/// Position of the pair `(i, j)`, `1 <= i < j <= n`, in lexicographic order.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(0 < i && i < j && j <= n);
    combo_rank(n, &[i, j])
}

/// All pairs `(i, j)`, `i < j`, of `{1..n}` in lexicographic order.
pub fn lex_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 1..=n {
        for j in i + 1..=n {
            out.push((i, j));
        }
    }
    out
}

/// Second compound matrix: all 2x2 minors, rows indexed by lexicographic
/// pairs of rows and columns by lexicographic pairs of columns.
pub fn compound2(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.rows() < 2 || m.cols() < 2 {
        return Err(Error::InvalidMatrix(format!(
            "second compound needs at least 2x2, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let rp = lex_pairs(m.rows());
    let cp = lex_pairs(m.cols());
    let mut out = DenseMatrix::zeros(rp.len(), cp.len());
    for (a, &(i, j)) in rp.iter().enumerate() {
        for (b, &(k, l)) in cp.iter().enumerate() {
            let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
            out.set(a, b, m.get(i, k) * m.get(j, l) - m.get(i, l) * m.get(j, k));
        }
    }
    Ok(out)
}

/// Coefficients `t(i,j) = x_i y_j - x_j y_i`, `i < j`, of `x ∧ y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluckerVector {
    dim: usize,
    coeffs: Vec<f64>,
}

impl PluckerVector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lexicographically ordered coefficients, usable as a row vector
    /// against a second compound matrix.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `t(i,j)` for any 1-based `i, j`, extended antisymmetrically.
    pub fn t(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.coeffs[pair_index(self.dim, i, j)],
            std::cmp::Ordering::Greater => -self.coeffs[pair_index(self.dim, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

pub fn plucker_coords(x: &[f64], y: &[f64]) -> Result<PluckerVector> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidCombo("Plücker coordinates need length >= 2".into()));
    }
    let n = x.len();
    let coeffs = lex_pairs(n)
        .into_iter()
        .map(|(i, j)| x[i - 1] * y[j - 1] - x[j - 1] * y[i - 1])
        .collect();
    Ok(PluckerVector { dim: n, coeffs })
}

/// `‖x ∧ y‖²` as a sum of squares of Plücker coordinates (never negative).
pub fn wedge2_norm_sq(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(plucker_coords(x, y)?.norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, n: usize) -> KVector {
        KVector::basis(&IndexCombo::singleton(i), n).unwrap()
    }

    #[test]
    fn basis_wedge_and_antisymmetry() {
        let w = wedge(&e(1, 3), &e(2, 3)).unwrap();
        assert_eq!(w.coeff(&IndexCombo::new(vec![1, 2]).unwrap()), 1.0);
        let w = wedge(&e(2, 3), &e(1, 3)).unwrap();
        assert_eq!(w.coeff(&IndexCombo::new(vec![1, 2]).unwrap()), -1.0);
        assert!(wedge(&e(2, 3), &e(2, 3)).unwrap().is_zero());
    }

    #[test]
    fn wedge_of_vectors_is_2x2_determinants() {
        let a = KVector::from_vector(&[1.0, 2.0, 3.0, 4.0]);
        let b = KVector::from_vector(&[5.0, 6.0, 7.0, 8.0]);
        let w = wedge(&a, &b).unwrap();
        let expect = [-4.0, -8.0, -12.0, -4.0, -8.0, -4.0];
        assert_eq!(w.coeffs(), &expect);
    }

    #[test]
    fn wedge_rejects_mismatched_ambient() {
        assert!(matches!(wedge(&e(1, 3), &e(1, 4)), Err(Error::DimensionMismatch(3, 4))));
        assert!(matches!(inner(&e(1, 3), &KVector::scalar(1.0, 3)), Err(Error::GradeMismatch(1, 0))));
    }

    #[test]
    fn overfull_grade_is_zero() {
        let a = wedge(&e(1, 2), &e(2, 2)).unwrap();
        let b = wedge(&a, &e(1, 2)).unwrap();
        assert_eq!(b.grade(), 3);
        assert!(b.coeffs().is_empty());
    }

    #[test]
    fn inner_of_basis_bivectors() {
        let e12 = wedge(&e(1, 3), &e(2, 3)).unwrap();
        let e13 = wedge(&e(1, 3), &e(3, 3)).unwrap();
        assert_eq!(inner(&e12, &e12).unwrap(), 1.0);
        assert_eq!(inner(&e12, &e13).unwrap(), 0.0);
    }

    #[test]
    fn empty_selection_is_unit_scalar() {
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let w = wedge_columns(&cols, &IndexCombo::empty()).unwrap();
        assert_eq!((w.grade(), w.coeffs()), (0, &[1.0][..]));
        assert!(matches!(
            wedge_columns(&cols, &IndexCombo::singleton(3)),
            Err(Error::IndexOutOfRange { index: 3, max: 2 })
        ));
    }

    #[test]
    fn compound_of_diagonal() {
        let c = compound2(&DenseMatrix::diag(&[2.0, 3.0, 5.0])).unwrap();
        assert_eq!(c, DenseMatrix::diag(&[6.0, 10.0, 15.0]));
        assert_eq!(compound2(&DenseMatrix::identity(3)).unwrap(), DenseMatrix::identity(3));
        assert!(compound2(&DenseMatrix::identity(1)).is_err());
    }

    #[test]
    fn plucker_relation_on_integers() {
        let t = plucker_coords(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(t.t(1, 2) * t.t(3, 4) + t.t(1, 4) * t.t(2, 3), 64.0);
        assert_eq!(t.t(1, 3) * t.t(2, 4), 64.0);
        assert_eq!(t.t(2, 1), 4.0);
        let z = plucker_coords(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(z.is_zero());
        assert_eq!(plucker_coords(&[1.0, 0.0], &[0.0, 1.0]).unwrap().coeffs(), &[1.0]);
        assert!(plucker_coords(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn combo_parsing_and_display() {
        let c: IndexCombo = "3,1,2".parse().unwrap();
        assert_eq!(c.to_string(), "1-2-3");
        assert_eq!("1-4".parse::<IndexCombo>().unwrap().as_slice(), &[1, 4]);
        assert!("".parse::<IndexCombo>().unwrap().is_empty());
        assert!("0,1".parse::<IndexCombo>().is_err());
        assert!(IndexCombo::new(vec![2, 1]).is_err());
    }

    #[test]
    fn combinations_are_lexicographic_and_ranked() {
        let all: Vec<_> = Combinations::new(5, 3).collect();
        assert_eq!(all.len(), 10);
        for (r, c) in all.iter().enumerate() {
            assert_eq!(combo_rank(5, c.as_slice()), r);
            assert_eq!(&combo_unrank(5, 3, r), c);
        }
        assert_eq!(Combinations::new(3, 4).count(), 0);
        assert_eq!(Combinations::new(3, 0).count(), 1);
    }
}
