//! Projection determinantal processes defined by a frame of orthonormal rows.

mod conditioning;
mod distribution;
mod event;
pub mod io;
mod sample;

pub use conditioning::{condition_on_point, ConditionedFrame};
pub use distribution::{
    condition_not_superset, enumerate_distribution, enumerate_distribution_capped,
    is_rank2_determinantal_certificate, ProcessDistribution, Rank2Verdict, DEFAULT_ENUMERATION_CAP,
};
pub use event::{prob_event, SubsetEventSpec};
pub use sample::{sample, Sampler};

use crate::error::{Error, Result};
use crate::exterior::IndexCombo;
use crate::linalg::{self, DenseMatrix};

/// Rows must be orthonormal to this tolerance to be accepted as-is.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Rounding noise below this magnitude is clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-14;
/// Conditioning events with smaller probability are rejected.
pub const NULL_EVENT_TOL: f64 = 1e-12;

/// A `p x n` real matrix with orthonormal rows. Column `i` is the feature
/// vector `z_i ∈ R^p` of point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    p: usize,
    n: usize,
    rows: Vec<Vec<f64>>,
    cols: Vec<Vec<f64>>,
    reorthonormalized: bool,
}

impl Frame {
    /// Strict constructor: rows must already be orthonormal.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(&rows)?;
        let defect = orthonormality_defect(&rows);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Self::build(rows, false))
    }

    /// Accepts rows with rounding error. When the orthonormality defect exceeds
    /// the tolerance the rows are re-orthonormalised by modified Gram–Schmidt
    /// and the frame is flagged.
    pub fn from_rows_lenient(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(&rows)?;
        if orthonormality_defect(&rows) <= ORTHONORMAL_TOL {
            return Ok(Self::build(rows, false));
        }
        let (basis, _) = linalg::gram_schmidt(&rows, 1e-8);
        if basis.len() < rows.len() {
            return Err(Error::InvalidFrame(format!(
                "rows span only {} of {} dimensions",
                basis.len(),
                rows.len()
            )));
        }
        Ok(Self::build(basis, true))
    }

    pub fn from_matrix(m: &DenseMatrix) -> Result<Self> {
        Self::new((0..m.rows()).map(|i| m.row(i).to_vec()).collect())
    }

    fn check_shape(rows: &[Vec<f64>]) -> Result<()> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if p == 0 {
            return Err(Error::InvalidFrame("frame has no rows".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidFrame("rows have different lengths".into()));
        }
        if p > n {
            return Err(Error::InvalidFrame(format!("{p} orthonormal rows cannot fit in R^{n}")));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFrame("non-finite entry".into()));
        }
        Ok(())
    }

    fn build(rows: Vec<Vec<f64>>, reorthonormalized: bool) -> Self {
        let p = rows.len();
        let n = rows[0].len();
        let cols = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self { p, n, rows, cols, reorthonormalized }
    }

    /// The two-point frame of the counterexample: rows
    /// `(1/√2, 0, 1/√2, 0)` and `(0, 1/√2, 0, 1/√2)`.
    pub fn example1() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::build(vec![vec![h, 0.0, h, 0.0], vec![0.0, h, 0.0, h]], false)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// All columns, 0-based.
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// Column `z_i` for a 1-based index.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.cols[i - 1]
    }

    pub fn reorthonormalized(&self) -> bool {
        self.reorthonormalized
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_rows(&self.rows).expect("frame rows are rectangular and finite")
    }

    /// Frame with rows `Q · rows` for an orthogonal `p x p` matrix `Q`.
    pub fn rotated(&self, q: &DenseMatrix) -> Result<Self> {
        let z = q.matmul(&self.to_matrix())?;
        Self::from_matrix(&z)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange { index: i, max: self.n });
        }
        Ok(())
    }

    pub fn columns_of(&self, s: &IndexCombo) -> Vec<&[f64]> {
        s.iter().map(|i| self.column(i)).collect()
    }

    /// Marginal kernel restricted to the given 1-based indices, `K = ZᵗZ`.
    pub fn kernel_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        let mut k = DenseMatrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                k.set(a, b, linalg::dot(self.column(i), self.column(j)));
            }
        }
        k
    }
}

/// Largest entry of `|Z Zᵗ - I|`.
pub fn orthonormality_defect(rows: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((linalg::dot(a, b) - target).abs());
        }
    }
    worst
}

/// Clamps rounding noise in `[-NEGATIVE_CLAMP, 0)` to zero; larger negative
/// values are reported.
pub(crate) fn clamp_probability(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeProbability(v))
    }
}

/// `P(S ⊂ φ) = ‖⋀_{i∈S} z_i‖²`, evaluated as a Gram determinant.
pub fn inclusion_prob(f: &Frame, s: &IndexCombo) -> Result<f64> {
    s.check_within(f.n)?;
    if s.len() > f.p {
        return Ok(0.0);
    }
    clamp_probability(linalg::gram_det(&f.columns_of(s))?)
}

/// `P(φ = S) = det(Z[:, S])²` for `|S| = p`.
pub fn elementary_prob(f: &Frame, s: &IndexCombo) -> Result<f64> {
    s.check_within(f.n)?;
    if s.len() != f.p {
        return Err(Error::CardinalityMismatch { expected: f.p, got: s.len() });
    }
    let mut buf = Vec::with_capacity(f.p * f.p);
    for r in &f.rows {
        buf.extend(s.iter().map(|j| r[j - 1]));
    }
    let d = linalg::lu_determinant(f.p, buf);
    Ok(d * d)
}

/// `P(S ⊂ φ, X ∩ φ = ∅) = (-1)^{|X|} det(K_{S∪X} - 1_X)`.
pub fn joint_prob(f: &Frame, include: &IndexCombo, exclude: &IndexCombo) -> Result<f64> {
    include.check_within(f.n)?;
    exclude.check_within(f.n)?;
    if !include.is_disjoint(exclude) {
        return Err(Error::Overlap(include.to_string(), exclude.to_string()));
    }
    if exclude.is_empty() {
        return inclusion_prob(f, include);
    }
    if include.len() > f.p {
        return Ok(0.0);
    }
    let idx: Vec<usize> = include.iter().chain(exclude.iter()).collect();
    let mut k = f.kernel_submatrix(&idx);
    for a in include.len()..idx.len() {
        k.set(a, a, k.get(a, a) - 1.0);
    }
    let sign = if exclude.len() % 2 == 0 { 1.0 } else { -1.0 };
    clamp_probability(sign * k.determinant()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[usize]) -> IndexCombo {
        IndexCombo::new(v.to_vec()).unwrap()
    }

    #[test]
    fn example1_values() {
        let f = Frame::example1();
        assert!((inclusion_prob(&f, &c(&[1])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(inclusion_prob(&f, &c(&[])).unwrap(), 1.0);
        assert!(inclusion_prob(&f, &c(&[1, 3])).unwrap().abs() < 1e-16);
        assert!((inclusion_prob(&f, &c(&[1, 2])).unwrap() - 0.25).abs() < 1e-15);
        assert!((elementary_prob(&f, &c(&[1, 2])).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(elementary_prob(&f, &c(&[2, 4])).unwrap(), 0.0);
        assert_eq!(inclusion_prob(&f, &c(&[1, 2, 4])).unwrap(), 0.0);
    }

    #[test]
    fn elementary_prob_requires_p_points() {
        let f = Frame::example1();
        assert!(matches!(
            elementary_prob(&f, &c(&[1])),
            Err(Error::CardinalityMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(inclusion_prob(&f, &c(&[5])), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn joint_prob_matches_hand_values() {
        let f = Frame::example1();
        // P(3 ∈ φ, 1 ∉ φ) = P({2,3}) + P({3,4}) = 1/2
        assert!((joint_prob(&f, &c(&[3]), &c(&[1])).unwrap() - 0.5).abs() < 1e-15);
        // P(1 ∉ φ, 2 ∉ φ) = P({3,4}) = 1/4
        assert!((joint_prob(&f, &c(&[]), &c(&[1, 2])).unwrap() - 0.25).abs() < 1e-15);
        assert!(joint_prob(&f, &c(&[1]), &c(&[1])).is_err());
    }

    #[test]
    fn strict_and_lenient_construction() {
        let rows = vec![vec![1.0, 0.0, 1e-3], vec![0.0, 1.0, 0.0]];
        assert!(matches!(Frame::new(rows.clone()), Err(Error::NotOrthonormal(_))));
        let f = Frame::from_rows_lenient(rows).unwrap();
        assert!(f.reorthonormalized());
        assert!(orthonormality_defect(f.rows()) < 1e-15);
        assert!(Frame::from_rows_lenient(vec![vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
        assert!(Frame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).is_err());
        assert!(!Frame::example1().reorthonormalized());
    }
}
