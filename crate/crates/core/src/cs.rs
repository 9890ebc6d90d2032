//! Principal (Jordan) angles between two column spans, the paired bases
//! `u_i`, `w_i`, `v_i = u_i cos α_i + w_i sin α_i`, and case classification
//! for two conditioning sets.

use crate::dpp::{inclusion_prob, Frame};
use crate::error::{Error, Result};
use crate::exterior::IndexCombo;
use crate::linalg::{self, DenseMatrix};
use serde::Serialize;
use std::fmt;

/// Singular values at or above this are intersection directions.
pub const INTERSECTION_SIGMA: f64 = 1.0 - 1e-9;
/// Singular values at or below this are right angles.
pub const RIGHT_ANGLE_SIGMA: f64 = 1e-9;
/// Pairs with `sin α` below this are treated as intersection directions.
pub const MIN_SIN: f64 = 1e-6;
/// κ within this distance of 0 or 1 is degenerate.
pub const KAPPA_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JordanDecomposition {
    /// Generic angles in `(0, π/2]`, ascending.
    pub angles: Vec<f64>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub intersection_basis: Vec<Vec<f64>>,
    pub e1_only: Vec<Vec<f64>>,
    pub e2_only: Vec<Vec<f64>>,
}

impl JordanDecomposition {
    pub fn k(&self) -> usize {
        self.angles.len()
    }

    pub fn intersection_dim(&self) -> usize {
        self.intersection_basis.len()
    }

    pub fn min_sin(&self) -> f64 {
        self.sin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∏ sin² α_i` over the generic angles, 0 when the spans intersect.
    pub fn prod_sin_sq(&self) -> f64 {
        if self.intersection_dim() > 0 {
            return 0.0;
        }
        self.sin.iter().map(|s| s * s).product()
    }

    pub fn prod_cos_sq(&self) -> f64 {
        self.cos.iter().map(|c| c * c).product()
    }

    /// `max_i ‖v_i - (u_i cos α_i + w_i sin α_i)‖`.
    pub fn reconstruction_error(&self) -> f64 {
        (0..self.k())
            .map(|i| {
                let r: Vec<f64> = (0..self.v[i].len())
                    .map(|t| self.v[i][t] - self.u[i][t] * self.cos[i] - self.w[i][t] * self.sin[i])
                    .collect();
                linalg::norm_sq(&r).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn orthonormal_basis(vectors: &[Vec<f64>], what: &str) -> Result<Vec<Vec<f64>>> {
    let (basis, _) = linalg::gram_schmidt(vectors, RANK_TOL);
    if basis.len() < vectors.len() {
        return Err(Error::RankDeficient(format!(
            "{what} spans {} dimensions with {} vectors",
            basis.len(),
            vectors.len()
        )));
    }
    Ok(basis)
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis.first().map_or(0, Vec::len)];
    for (b, &c) in basis.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

fn project(basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let coeffs: Vec<f64> = basis.iter().map(|b| linalg::dot(b, x)).collect();
    combine(basis, &coeffs)
}

/// Vectors of `span(all)` orthogonal to `span(first)`, as an orthonormal set.
fn complement_within(first: &[Vec<f64>], all: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let candidates: Vec<Vec<f64>> = first.iter().chain(all).cloned().collect();
    let (basis, used) = linalg::gram_schmidt(&candidates, 1e-8);
    basis.into_iter().zip(used).filter(|(_, i)| *i >= first.len()).map(|(b, _)| b).collect()
}

/// Principal angles between `span(e1)` and `span(e2)` from the SVD of the
/// cross-Gram matrix `Q1ᵗ Q2` of orthonormalised bases.
///
/// Angles are evaluated as `atan2(‖v - P1 v‖, ⟨u, v⟩)`, which keeps relative
/// accuracy for small angles where `arccos σ` does not.
pub fn jordan_angles(e1: &[Vec<f64>], e2: &[Vec<f64>]) -> Result<JordanDecomposition> {
    let dim = e1.first().or(e2.first()).map_or(0, Vec::len);
    if let Some(bad) = e1.iter().chain(e2).find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(bad.len(), dim));
    }
    let q1 = orthonormal_basis(e1, "first subspace")?;
    let q2 = orthonormal_basis(e2, "second subspace")?;
    let mut out = JordanDecomposition {
        angles: vec![],
        cos: vec![],
        sin: vec![],
        u: vec![],
        v: vec![],
        w: vec![],
        intersection_basis: vec![],
        e1_only: vec![],
        e2_only: vec![],
    };
    if q1.is_empty() || q2.is_empty() {
        out.e1_only = q1;
        out.e2_only = q2;
        return Ok(out);
    }
    let mut cross = DenseMatrix::zeros(q1.len(), q2.len());
    for (i, a) in q1.iter().enumerate() {
        for (j, b) in q2.iter().enumerate() {
            cross.set(i, j, linalg::dot(a, b));
        }
    }
    let (y, sigma, z) = linalg::svd(&cross)?;
    let mut paired_u = Vec::new();
    let mut paired_v = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        let u = combine(&q1, &y[i]);
        let v = combine(&q2, &z[i]);
        paired_u.push(u.clone());
        paired_v.push(v.clone());
        if s >= INTERSECTION_SIGMA {
            out.intersection_basis.push(u);
            continue;
        }
        let pv = project(&q1, &v);
        let r: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| a - b).collect();
        let sin = linalg::norm_sq(&r).sqrt();
        if sin < MIN_SIN {
            out.intersection_basis.push(u);
            continue;
        }
        let cos = if s <= RIGHT_ANGLE_SIGMA { 0.0 } else { linalg::dot(&u, &v) };
        out.angles.push(sin.atan2(cos));
        out.cos.push(cos);
        out.sin.push(sin);
        out.w.push(r.iter().map(|x| x / sin).collect());
        out.u.push(u);
        out.v.push(v);
    }
    out.e1_only = complement_within(&paired_u, &q1);
    out.e2_only = complement_within(&paired_v, &q2);
    Ok(out)
}

/// Quantities attached to a pair of disjoint conditioning sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Quantities {
    pub kappa1: f64,
    pub kappa2: f64,
    /// `κ₁κ₂ ∏ sin² α_i`.
    pub union_prob: f64,
    /// `1 - κ₁ - κ₂ + union_prob`.
    pub not_superset_prob: f64,
    /// `κ₁κ₂ ∏ cos² α_i`; only defined for sets of equal size.
    pub cross_inner_sq: Option<f64>,
    pub angles: Vec<f64>,
    pub intersection_dim: usize,
}

fn check_kappa(name: &str, kappa: f64) -> Result<()> {
    if kappa <= KAPPA_TOL || kappa >= 1.0 - KAPPA_TOL {
        return Err(Error::DegenerateKappa(format!(
            "{name} = {kappa:e}; use the unconditioned or single-set path"
        )));
    }
    Ok(())
}

fn disjoint_sets(f: &Frame, a1: &IndexCombo, a2: &IndexCombo) -> Result<()> {
    a1.check_within(f.n())?;
    a2.check_within(f.n())?;
    if !a1.is_disjoint(a2) {
        return Err(Error::Overlap(a1.to_string(), a2.to_string()));
    }
    Ok(())
}

fn column_vectors(f: &Frame, s: &IndexCombo) -> Vec<Vec<f64>> {
    s.iter().map(|i| f.column(i).to_vec()).collect()
}

/// κ's from wedge norms and the remaining quantities from the Jordan angles
/// between the column spans of `A₁` and `A₂`.
pub fn lemma3_quantities(f: &Frame, a1: &IndexCombo, a2: &IndexCombo) -> Result<Lemma3Quantities> {
    disjoint_sets(f, a1, a2)?;
    let kappa1 = inclusion_prob(f, a1)?;
    let kappa2 = inclusion_prob(f, a2)?;
    check_kappa("κ₁", kappa1)?;
    check_kappa("κ₂", kappa2)?;
    let j = jordan_angles(&column_vectors(f, a1), &column_vectors(f, a2))?;
    let union_prob = kappa1 * kappa2 * j.prod_sin_sq();
    let cross_inner_sq = (a1.len() == a2.len()).then(|| {
        // intersection directions have cos = 1
        kappa1 * kappa2 * j.prod_cos_sq()
    });
    Ok(Lemma3Quantities {
        kappa1,
        kappa2,
        union_prob,
        not_superset_prob: 1.0 - kappa1 - kappa2 + union_prob,
        cross_inner_sq,
        angles: j.angles.clone(),
        intersection_dim: j.intersection_dim(),
    })
}

/// Rotates the frame by an orthogonal map of `R^p` so that the selected
/// columns are supported on the leading `d` coordinates, `d` being the
/// dimension of their span. Returns the rotated frame and `d`.
pub fn align_leading_coordinates(f: &Frame, cols: &IndexCombo) -> Result<(Frame, usize)> {
    cols.check_within(f.n())?;
    let (span, _) = linalg::gram_schmidt(&column_vectors(f, cols), RANK_TOL);
    let d = span.len();
    let basis = linalg::complete_basis(&span, f.p());
    let q = DenseMatrix::from_rows(&basis)?;
    Ok((f.rotated(&q)?, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseTag {
    EqualFull,
    UnequalFull,
    Degenerate,
    Restricted,
    N1Fallback,
}

impl CaseTag {
    pub const ALL: [CaseTag; 5] =
        [CaseTag::EqualFull, CaseTag::UnequalFull, CaseTag::Degenerate, CaseTag::Restricted, CaseTag::N1Fallback];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::EqualFull => "EQUAL_FULL",
            CaseTag::UnequalFull => "UNEQUAL_FULL",
            CaseTag::Degenerate => "DEGENERATE",
            CaseTag::Restricted => "RESTRICTED",
            CaseTag::N1Fallback => "N1_FALLBACK",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseClassification {
    pub k1: usize,
    pub k2: usize,
    pub p: usize,
    pub chi: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    pub union_prob: f64,
    pub tag: CaseTag,
}

/// Union probabilities at or below this are treated as zero.
pub const UNION_TOL: f64 = 1e-12;

pub fn classify_case(f: &Frame, a1: &IndexCombo, a2: &IndexCombo) -> Result<CaseClassification> {
    disjoint_sets(f, a1, a2)?;
    let kappa1 = inclusion_prob(f, a1)?;
    let kappa2 = inclusion_prob(f, a2)?;
    check_kappa("κ₁", kappa1)?;
    check_kappa("κ₂", kappa2)?;
    let (k1, k2, p) = (a1.len(), a2.len(), f.p());
    let chi = k1 + k2;
    let union_prob = inclusion_prob(f, &a1.union(a2))?;
    let tag = if k1.max(k2) == p {
        CaseTag::N1Fallback
    } else if chi < p {
        CaseTag::Restricted
    } else if union_prob <= UNION_TOL {
        CaseTag::Degenerate
    } else if k1 == k2 {
        CaseTag::EqualFull
    } else {
        CaseTag::UnequalFull
    };
    Ok(CaseClassification { k1, k2, p, chi, kappa1, kappa2, union_prob, tag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn equal_lines_have_no_generic_angle() {
        let j = jordan_angles(&[vec![1.0, 0.0]], &[vec![2.0, 0.0]]).unwrap();
        assert_eq!((j.k(), j.intersection_dim()), (0, 1));
    }

    #[test]
    fn orthogonal_lines() {
        let j = jordan_angles(&[vec![1.0, 0.0]], &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(j.k(), 1);
        assert!((j.angles[0] - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn diagonal_line_at_forty_five_degrees() {
        let j = jordan_angles(&[vec![1.0, 0.0]], &[vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]]).unwrap();
        assert!((j.angles[0] - FRAC_PI_4).abs() < 1e-15);
        assert!((j.u[0][0].abs() - 1.0).abs() < 1e-15);
        assert!(j.w[0][0].abs() < 1e-15 && (j.w[0][1].abs() - 1.0).abs() < 1e-15);
        assert!(j.reconstruction_error() < 1e-15);
    }

    #[test]
    fn dimension_accounting_with_residuals() {
        // E1 = span{e1, e2}, E2 = span{e2, e3 + e4}... in R^4
        let e1 = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]];
        let e2 = vec![vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]];
        let j = jordan_angles(&e1, &e2).unwrap();
        assert_eq!(j.intersection_dim(), 1);
        assert_eq!(j.k() + j.intersection_dim() + j.e1_only.len(), 2);
        assert_eq!(j.k() + j.intersection_dim() + j.e2_only.len(), 3);
        assert!((j.angles[0] - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_input() {
        let r = jordan_angles(&[vec![1.0, 0.0], vec![2.0, 0.0]], &[vec![0.0, 1.0]]);
        assert!(matches!(r, Err(Error::RankDeficient(_))));
    }

    #[test]
    fn example1_orthogonal_columns() {
        let f = Frame::example1();
        let a = IndexCombo::singleton(1);
        let b = IndexCombo::singleton(2);
        let q = lemma3_quantities(&f, &a, &b).unwrap();
        assert!((q.angles[0] - FRAC_PI_2).abs() < 1e-15);
        assert!(q.cross_inner_sq.unwrap().abs() < 1e-30);
        assert!((q.union_prob - 0.25).abs() < 1e-15);
        let c = classify_case(&f, &a, &b).unwrap();
        assert_eq!(c.tag, CaseTag::EqualFull);
    }

    #[test]
    fn classification_branches() {
        let f = Frame::example1();
        let one = IndexCombo::singleton(1);
        assert_eq!(classify_case(&f, &one, &IndexCombo::singleton(3)).unwrap().tag, CaseTag::Degenerate);
        let pair = IndexCombo::new(vec![2, 3]).unwrap();
        assert_eq!(classify_case(&f, &one, &pair).unwrap().tag, CaseTag::N1Fallback);
        let sure = Frame::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let r = classify_case(&sure, &IndexCombo::singleton(1), &IndexCombo::singleton(2));
        assert!(matches!(r, Err(Error::DegenerateKappa(_))));
    }

    #[test]
    fn alignment_preserves_columns_span() {
        let f = Frame::example1();
        let (g, d) = align_leading_coordinates(&f, &IndexCombo::singleton(2)).unwrap();
        assert_eq!(d, 1);
        assert!(g.column(2)[1].abs() < 1e-15);
        assert!(g.column(4)[1].abs() < 1e-15);
    }
}
