//! Small dense linear algebra: a row-major matrix type, LU determinants,
//! Gram matrices, Gram–Schmidt, and thin wrappers over `nalgebra` for the
//! SVD and symmetric eigenvalue problems.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|col| col.len() != r) {
            return Err(Error::InvalidMatrix("ragged columns".into()));
        }
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(v.len(), self.rows));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * self.get(i, j);
            }
        }
        Ok(out)
    }

    /// Quadratic form `v M vᵗ`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let mv = self.left_mul(v)?;
        Ok(dot(&mv, v))
    }

    /// Principal submatrix on the given 0-based indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.set(a, b, self.get(i, j));
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::InvalidMatrix(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(lu_determinant(self.rows, self.data.clone()))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.set(i, j, m[(i, j)]);
            }
        }
        out
    }
}

/// In-place LU with partial pivoting on an `n x n` row-major buffer.
pub(crate) fn lu_determinant(n: usize, mut a: Vec<f64>) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col + 1..n {
                a[r * n + j] -= f * a[col * n + j];
            }
        }
    }
    det
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Determinant of the mixed Gram matrix `[⟨a_i, b_j⟩]`. By Cauchy–Binet this
/// equals the inner product of the wedges `a_1 ∧ … ∧ a_k` and `b_1 ∧ … ∧ b_k`.
pub fn mixed_gram_det(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GradeMismatch(a.len(), b.len()));
    }
    let k = a.len();
    if k == 0 {
        return Ok(1.0);
    }
    let mut g = Vec::with_capacity(k * k);
    for ai in a {
        for bj in b {
            if ai.len() != bj.len() {
                return Err(Error::DimensionMismatch(ai.len(), bj.len()));
            }
            g.push(dot(ai, bj));
        }
    }
    Ok(lu_determinant(k, g))
}

/// Gram determinant `det[⟨a_i, a_j⟩]`, the squared volume spanned by `a`.
pub fn gram_det(a: &[&[f64]]) -> Result<f64> {
    mixed_gram_det(a, a)
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass. Returns the
/// orthonormal vectors of the vectors whose residual norm exceeds `tol`,
/// together with the indices (into the input) that contributed a direction.
pub fn gram_schmidt(vectors: &[Vec<f64>], tol: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut used = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let nr = norm_sq(&r).sqrt();
        if nr > tol {
            r.iter_mut().for_each(|x| *x /= nr);
            basis.push(r);
            used.push(idx);
        }
    }
    (basis, used)
}

/// Extends an orthonormal set in `R^dim` to a full orthonormal basis, keeping
/// the given vectors first.
pub fn complete_basis(orthonormal: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut candidates: Vec<Vec<f64>> = orthonormal.to_vec();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        candidates.push(e);
    }
    let (basis, _) = gram_schmidt(&candidates, 1e-8);
    debug_assert_eq!(basis.len(), dim);
    basis
}

/// Thin singular value decomposition `M = U diag(σ) Vᵗ`, singular values in
/// descending order. Returns `(U columns, σ, V columns)`.
///
/// One-sided Jacobi on the columns of `M` (or of `Mᵗ` when `M` is wide). It
/// keeps singular vectors accurate to rounding even for clustered singular
/// values, where the bidiagonal QR in `nalgebra` loses several digits.
pub fn svd(m: &DenseMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    if m.rows() < m.cols() {
        let (v, s, u) = svd(&m.transpose())?;
        return Ok((u, s, v));
    }
    let (r, c) = (m.rows(), m.cols());
    let mut a: Vec<Vec<f64>> = (0..c).map(|j| (0..r).map(|i| m.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..c).map(|j| (0..c).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let tol = r as f64 * f64::EPSILON;
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let (alpha, beta, gamma) = (norm_sq(&a[p]), norm_sq(&a[q]), dot(&a[p], &a[q]));
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for cols in [&mut a, &mut v] {
                    for i in 0..cols[p].len() {
                        let (x, y) = (cols[p][i], cols[q][i]);
                        cols[p][i] = cs * x - sn * y;
                        cols[q][i] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Consistency(format!("Jacobi SVD not converged in {JACOBI_SWEEPS} sweeps")));
    }
    let mut order: Vec<usize> = (0..c).collect();
    let norms: Vec<f64> = a.iter().map(|x| norm_sq(x).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sig: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let scale = sig.first().copied().unwrap_or(0.0);
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(c);
    for &i in &order {
        if norms[i] > f64::EPSILON * scale.max(f64::MIN_POSITIVE) * (r as f64) {
            ucols.push(a[i].iter().map(|x| x / norms[i]).collect());
        }
    }
    // null directions: any orthonormal completion inside R^r
    let have = ucols.len();
    let extra = complete_basis(&ucols, r);
    ucols.extend(extra.into_iter().skip(have).take(c - have));
    let vcols = order.iter().map(|&i| v[i].clone()).collect();
    Ok((ucols, sig, vcols))
}

const JACOBI_SWEEPS: usize = 60;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::InvalidMatrix("eigenvalues of a non-square matrix".into()));
    }
    let eig = m.to_nalgebra().symmetric_eigen();
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Householder reflection `Q = I - 2 h hᵗ / ‖h‖²` with `Q x = ‖x‖ e_1`.
/// Returns the identity when `x` is already a non-negative multiple of `e_1`.
pub fn householder_to_e1(x: &[f64]) -> DenseMatrix {
    let n = x.len();
    let nx = norm_sq(x).sqrt();
    let mut h = x.to_vec();
    h[0] -= nx;
    let hh = norm_sq(&h);
    let mut q = DenseMatrix::identity(n);
    if hh <= f64::EPSILON * f64::EPSILON * nx.max(1.0) {
        return q;
    }
    for i in 0..n {
        for j in 0..n {
            q.set(i, j, q.get(i, j) - 2.0 * h[i] * h[j] / hh);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_keeps_clustered_singular_vectors() {
        let (c, s) = (0.6f64, 0.8f64);
        let rot = DenseMatrix::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let d = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0 - 1e-9], vec![0.0, 0.0]]).unwrap();
        let m = rot.matmul(&d).unwrap();
        let (u, sig, v) = svd(&m).unwrap();
        assert!((sig[0] - 1.0).abs() < 1e-15 && (sig[1] - (1.0 - 1e-9)).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..2 {
                let x: f64 = (0..2).map(|k| u[k][i] * sig[k] * v[k][j]).sum();
                assert!((x - m.get(i, j)).abs() < 1e-15);
            }
        }
        assert!(dot(&u[0], &u[1]).abs() < 1e-15);
        let (uw, _, vw) = svd(&m.transpose()).unwrap();
        assert_eq!((uw.len(), uw[0].len(), vw[0].len()), (2, 2, 3));
    }

    #[test]
    fn lu_determinant_matches_hand_values() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((m.determinant().unwrap() - 5.0).abs() < 1e-15);
        let p = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(p.determinant().unwrap(), -1.0);
        let s = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(s.determinant().unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn gram_schmidt_drops_dependent_vectors() {
        let v = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]];
        let (b, used) = gram_schmidt(&v, 1e-10);
        assert_eq!(used, vec![0, 2]);
        assert!((dot(&b[0], &b[1])).abs() < 1e-15);
    }

    #[test]
    fn householder_maps_to_first_axis() {
        let x = [3.0, 4.0, 0.0];
        let q = householder_to_e1(&x);
        let y = q.transpose().left_mul(&x).unwrap();
        assert!((y[0] - 5.0).abs() < 1e-14);
        assert!(y[1].abs() < 1e-14 && y[2].abs() < 1e-14);
    }

    #[test]
    fn svd_orders_singular_values() {
        let m = DenseMatrix::diag(&[0.5, 2.0, 1.0]);
        let (_, s, _) = svd(&m).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-14 && (s[2] - 0.5).abs() < 1e-14);
    }
}
