use super::{abs_tol, Check, InstanceDescriptor, Tolerance, VerificationReport};
use crate::error::{Error, Result};
use crate::exterior::pair_index;
use crate::linalg::{self, DenseMatrix};
use std::f64::consts::FRAC_PI_2;

pub type Block = [[f64; 4]; 4];

/// The 4x4 blocks attached to an index pair `(i,j)`, in the coordinate order
/// `t(i,j), t(i,k+j), t(j,k+i), t(k+i,k+j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrices {
    /// Block of the second compound of `HHᵗ`.
    pub a: Block,
    /// `A` with the corner entries lowered by `κ₂σ` and `κ₁σ`, `σ = (sin α_i sin α_j)²`.
    pub b: Block,
    /// Block of the rescaled compound `D̃ (H₁H₁ᵗ)~ D̃`.
    pub a_prime: Block,
    /// `A' - (1 - κ₁ - κ₂ + κ₁κ₂σ) B`.
    pub c: Block,
}

fn sym(upper: [[f64; 4]; 4]) -> Block {
    let mut m = upper;
    for r in 0..4 {
        for c in 0..r {
            m[r][c] = m[c][r];
        }
    }
    m
}

/// Entry-exact constructors from the angles `α_i`, `α_j` and the two κ's.
pub fn build_matrices(alpha_i: f64, alpha_j: f64, kappa1: f64, kappa2: f64) -> BlockMatrices {
    let (si, ci) = alpha_i.sin_cos();
    let (sj, cj) = alpha_j.sin_cos();
    let sigma = (si * sj).powi(2);
    let (d1i, d1j) = (1.0 - kappa1 * si * si, 1.0 - kappa1 * sj * sj);
    let (d2i, d2j) = (1.0 - kappa2 * si * si, 1.0 - kappa2 * sj * sj);
    let cc = ci * cj;
    let a = sym([
        [1.0, cj, -ci, cc],
        [0.0, 1.0, -cc, ci],
        [0.0, 0.0, 1.0, -cj],
        [0.0, 0.0, 0.0, 1.0],
    ]);
    let mut b = a;
    b[0][0] = 1.0 - kappa2 * sigma;
    b[3][3] = 1.0 - kappa1 * sigma;
    let a_prime = sym([
        [d2i * d2j, d2i * cj, -d2j * ci, cc],
        [0.0, d2i * d1j, -cc, d1j * ci],
        [0.0, 0.0, d2j * d1i, -d1i * cj],
        [0.0, 0.0, 0.0, d1i * d1j],
    ]);
    let tau_ij = 1.0 - kappa1 - kappa2 + kappa1 * kappa2 * sigma;
    let mut c = [[0.0; 4]; 4];
    for r in 0..4 {
        for s in 0..4 {
            c[r][s] = a_prime[r][s] - tau_ij * b[r][s];
        }
    }
    BlockMatrices { a, b, a_prime, c }
}

/// Closed-form entries of `C(i,j)`.
pub fn c_closed_form(alpha_i: f64, alpha_j: f64, kappa1: f64, kappa2: f64) -> Block {
    let (si, ci) = alpha_i.sin_cos();
    let (sj, cj) = alpha_j.sin_cos();
    let sigma = (si * sj).powi(2);
    let (k1, k2) = (kappa1, kappa2);
    let r1 = 1.0 - k1 * sigma;
    let r2 = 1.0 - k2 * sigma;
    let cc = ci * cj;
    sym([
        [k2 * cc * cc + k1 * r2 * r2, cj * (k2 * ci * ci + k1 * r2), -ci * (k2 * cj * cj + k1 * r2), cc * (k2 + k1 * r2)],
        [0.0, k1 * cj * cj + k2 * ci * ci, -cc * (k2 + k1 * r2), ci * (k1 * cj * cj + k2 * r1)],
        [0.0, 0.0, k1 * ci * ci + k2 * cj * cj, -cj * (k1 * ci * ci + k2 * r1)],
        [0.0, 0.0, 0.0, k1 * cc * cc + k2 * r1 * r1],
    ])
}

pub fn quad4(m: &Block, t: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for r in 0..4 {
        for s in 0..4 {
            acc += t[r] * m[r][s] * t[s];
        }
    }
    acc
}

pub(crate) fn det4_leading(m: &Block, size: usize, offset: usize) -> f64 {
    let data = (0..size).flat_map(|r| (0..size).map(move |s| m[r + offset][s + offset])).collect();
    linalg::lu_determinant(size, data)
}

/// Order in which the lexicographic pairs of `{1..2k}` are rearranged to make
/// the compound of `HHᵗ` block diagonal: the four pairs of each `(i,j)` in
/// turn, then the `(i, k+i)` pairs.
pub fn block_order(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(k * (2 * k - 1));
    for i in 1..=k {
        for j in i + 1..=k {
            out.extend([(i, j), (i, k + j), (j, k + i), (k + i, k + j)]);
        }
    }
    out.extend((1..=k).map(|i| (i, k + i)));
    out
}

/// A second compound in the rearranged order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockView {
    pub blocks: Vec<((usize, usize), Block)>,
    pub tail: Vec<f64>,
    /// Largest entry outside the diagonal blocks.
    pub off_block: f64,
}

/// Splits a `C(2k,2)` square matrix into the 4x4 blocks and the diagonal tail
/// of [`block_order`].
pub fn compound_blocks(m: &DenseMatrix, k: usize) -> Result<BlockView> {
    let dim = 2 * k;
    let size = dim * (dim - 1) / 2;
    if m.rows() != size || m.cols() != size {
        return Err(Error::DimensionMismatch(m.rows(), size));
    }
    let order = block_order(k);
    let pos: Vec<usize> = order.iter().map(|&(i, j)| pair_index(dim, i, j)).collect();
    let n_block = order.len() - k;
    let group = |r: usize| if r < n_block { r / 4 } else { n_block / 4 + (r - n_block) };
    let mut off_block: f64 = 0.0;
    for r in 0..order.len() {
        for s in 0..order.len() {
            if group(r) != group(s) {
                off_block = off_block.max(m.get(pos[r], pos[s]).abs());
            }
        }
    }
    let mut blocks = Vec::new();
    for b in 0..n_block / 4 {
        let mut blk = [[0.0; 4]; 4];
        for r in 0..4 {
            for s in 0..4 {
                blk[r][s] = m.get(pos[4 * b + r], pos[4 * b + s]);
            }
        }
        blocks.push((order[4 * b], blk));
    }
    let tail = (n_block..order.len()).map(|r| m.get(pos[r], pos[r])).collect();
    Ok(BlockView { blocks, tail, off_block })
}

pub(crate) fn block_max_diff(a: &Block, b: &Block) -> f64 {
    let mut d: f64 = 0.0;
    for r in 0..4 {
        for s in 0..4 {
            d = d.max((a[r][s] - b[r][s]).abs());
        }
    }
    d
}

/// `1 - ∏_{l≠skip} sin² α_l` as `-expm1(Σ ln sin²)`, without the
/// cancellation of the direct difference when the product is close to 1.
fn one_minus_sin2_product(angles: &[f64], skip: usize) -> f64 {
    let log: f64 = angles.iter().enumerate().filter(|&(l, _)| l != skip).map(|(_, a)| 2.0 * a.sin().ln()).sum();
    -log.exp_m1()
}

/// `m_ii = 1 - ∏_{j≠i} sin² α_j`, `m_ij = cos α_i cos α_j`.
pub fn build_m(angles: &[f64]) -> DenseMatrix {
    let k = angles.len();
    let c: Vec<f64> = angles.iter().map(|a| a.cos()).collect();
    let mut m = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let v = if i == j {
                one_minus_sin2_product(angles, i)
            } else {
                c[i] * c[j]
            };
            m.set(i, j, v);
        }
    }
    m
}

/// `det M(3) = (∏ sin² + Σ_{i<j} sin²α_i sin²α_j) ∏ cos²`.
pub fn det_m3_closed_form(angles: &[f64; 3]) -> f64 {
    let s: Vec<f64> = angles.iter().map(|a| a.sin().powi(2)).collect();
    let c: f64 = angles.iter().map(|a| a.cos().powi(2)).product();
    (s[0] * s[1] * s[2] + s[0] * s[1] + s[0] * s[2] + s[1] * s[2]) * c
}

/// Points on the grid for the monotonicity check.
pub const F_GRID_POINTS: usize = 100;

/// Positivity argument for `M(k)`: eigenvalues, the `k = 3` closed-form
/// determinant, the rank-one-update determinant and the monotone function of
/// the smallest `sin²`.
pub fn verify_appendix(angles: &[f64]) -> Result<VerificationReport> {
    let k = angles.len();
    if k < 2 {
        return Err(Error::Precondition(format!("need k >= 2 angles, got {k}")));
    }
    if let Some(a) = angles.iter().find(|a| !(**a > 0.0 && **a < FRAC_PI_2)) {
        return Err(Error::Precondition(format!("angle {a} not strictly inside (0, π/2)")));
    }
    let m = build_m(angles);
    let eig = linalg::symmetric_eigenvalues(&m)?;
    let min_eig = eig[0];
    let det = m.determinant()?;
    let mut checks = Vec::new();
    let mut inst = InstanceDescriptor::new(0, 0);
    inst.angles = Some(angles.to_vec());
    if k == 2 {
        let (c1, c2) = (angles[0].cos(), angles[1].cos());
        checks.push(Check::at_least("min_eigenvalue_semidefinite", min_eig, 0.0, 1e-12));
        let mut worst = Check::equality("two_form_perfect_square", 0.0, 0.0, abs_tol(1e-12));
        for t in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0], [0.3, -0.7]] {
            let q = m.quadratic_form(&t)?;
            let sq = (t[0] * c2 + t[1] * c1).powi(2);
            let c = Check::equality("two_form_perfect_square", q, sq, abs_tol(1e-12));
            if c.score() >= worst.score() {
                worst = c;
            }
        }
        checks.push(worst);
        return Ok(VerificationReport::new("appendix-M", inst, checks).with_value("min_eigenvalue", min_eig));
    }
    checks.push(Check::at_least("min_eigenvalue_positive", min_eig, 1e-14, 0.0));
    if k == 3 {
        let closed = det_m3_closed_form(&[angles[0], angles[1], angles[2]]);
        checks.push(Check::equality("det_m3_closed_form", det, closed, abs_tol(1e-12)));
    }

    // b_1 >= ... >= b_k after permuting rows and columns
    let mut sorted = angles.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let b: Vec<f64> = sorted.iter().map(|x| x.sin().powi(2)).collect();
    let a: Vec<f64> = sorted.iter().map(|x| x.cos().powi(2)).collect();
    let prod_except = |b: &[f64], skip: &[usize]| -> f64 {
        (0..b.len()).filter(|l| !skip.contains(l)).map(|l| b[l]).product()
    };
    // D_ii = m_ii / a_i and D_ii - 1 = (b_i - ∏_{l≠i} b_l) / a_i
    let nd: Vec<f64> = (0..k).map(|i| one_minus_sin2_product(&sorted, i) / a[i]).collect();
    let nd_minus_one: Vec<f64> = (0..k).map(|i| (b[i] - prod_except(&b, &[i])) / a[i]).collect();
    let head = &nd_minus_one[..k - 1];
    let bracket = nd[k - 1] + nd_minus_one[k - 1] * head.iter().map(|v| 1.0 / v).sum::<f64>();
    let det_sm = a.iter().product::<f64>() * head.iter().product::<f64>() * bracket;
    checks.push(Check::equality("rank_one_update_det", det_sm, det, Tolerance::new(0.0, 1e-10)));
    checks.push(Check::at_least("rank_one_pivots_positive", head.iter().copied().fold(f64::INFINITY, f64::min), 0.0, 0.0));

    let pk: f64 = b[..k - 1].iter().product();
    let f_of = |bk: f64| -> f64 {
        let sum: f64 = (0..k - 1)
            .map(|i| {
                let others: f64 = (0..k - 1).filter(|&l| l != i).map(|l| b[l]).product::<f64>() * bk;
                a[i] / (b[i] - others)
            })
            .sum();
        1.0 - pk + (bk - pk) * sum
    };
    let top = b[k - 2];
    let grid: Vec<f64> =
        (0..F_GRID_POINTS).map(|g| f_of(top * g as f64 / (F_GRID_POINTS - 1) as f64)).collect();
    let min_step = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let f0 = grid[0];
    let f0_closed = 1.0 + (k as f64 - 2.0) * pk
        - (0..k - 1).map(|i| (0..k - 1).filter(|&l| l != i).map(|l| b[l]).product::<f64>()).sum::<f64>();
    checks.push(Check::at_least("f_grid_nondecreasing", min_step, 0.0, 1e-12));
    checks.push(Check::at_least("f_at_zero_positive", f0, f64::MIN_POSITIVE, 0.0));
    checks.push(Check::equality("f_at_zero_closed_form", f0, f0_closed, abs_tol(1e-12)));
    checks.push(Check::equality("f_matches_bracket", a[k - 1] * bracket, f_of(b[k - 1]), Tolerance::new(1e-14, 1e-10)));
    Ok(VerificationReport::new("appendix-M", inst, checks)
        .with_value("det", det)
        .with_value("min_eigenvalue", min_eig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::compound2;
    use crate::identities::Verdict;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn right_angles_give_identity_blocks() {
        let m = build_matrices(FRAC_PI_2, FRAC_PI_2, 0.3, 0.6);
        for r in 0..4 {
            for s in 0..4 {
                let id = if r == s { 1.0 } else { 0.0 };
                assert!((m.a[r][s] - id).abs() < 1e-15);
            }
        }
        assert!((m.b[0][0] - 0.4).abs() < 1e-15);
        assert!((m.b[3][3] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn c_closed_form_matches_subtraction() {
        for &(ai, aj, k1, k2) in &[(0.3_f64, 1.1_f64, 0.2, 0.7), (0.9, 0.4, 0.55, 0.35), (1.5, 0.05, 0.9, 0.1)] {
            let m = build_matrices(ai, aj, k1, k2);
            assert!(block_max_diff(&m.c, &c_closed_form(ai, aj, k1, k2)) < 1e-12);
        }
    }

    #[test]
    fn b_minors_closed_forms() {
        let (ai, aj, k1, k2) = (0.7_f64, 1.2_f64, 0.4, 0.3);
        let m = build_matrices(ai, aj, k1, k2);
        let (si, sj, ci, cj) = (ai.sin(), aj.sin(), ai.cos(), aj.cos());
        let sig = (si * sj).powi(2);
        let full = sig * sig * (1.0 - k1 - k2 + k1 * k2 * (1.0 - (ci * cj).powi(2)));
        assert!((det4_leading(&m.b, 4, 0) - full).abs() < 1e-13);
        let three = sig * (1.0 - k2 * (1.0 - (ci * cj).powi(2)));
        assert!((det4_leading(&m.b, 3, 0) - three).abs() < 1e-13);
        assert!((det4_leading(&m.b, 2, 1) - (1.0 - (ci * cj).powi(2))).abs() < 1e-13);
    }

    #[test]
    fn compound_of_hht_is_block_diagonal() {
        let angles = [0.4_f64, 0.9, 1.3];
        let k = angles.len();
        let mut g = DenseMatrix::identity(2 * k);
        for (i, a) in angles.iter().enumerate() {
            g.set(i, k + i, a.cos());
            g.set(k + i, i, a.cos());
        }
        let view = compound_blocks(&compound2(&g).unwrap(), k).unwrap();
        assert!(view.off_block < 1e-15);
        for ((i, j), blk) in &view.blocks {
            let m = build_matrices(angles[i - 1], angles[j - 1], 0.5, 0.5);
            assert!(block_max_diff(blk, &m.a) < 1e-15);
        }
        for (i, t) in view.tail.iter().enumerate() {
            assert!((t - angles[i].sin().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn det_m3_at_quarter_pi() {
        let a = [FRAC_PI_4; 3];
        assert!((det_m3_closed_form(&a) - 7.0 / 64.0).abs() < 1e-15);
        assert!((build_m(&a).determinant().unwrap() - 0.109375).abs() < 1e-15);
        let r = verify_appendix(&a).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn appendix_k2_and_larger() {
        assert_eq!(verify_appendix(&[0.4, 1.0]).unwrap().verdict, Verdict::Pass);
        let r = verify_appendix(&[0.2, 0.5, 0.9, 1.3, 1.5]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(verify_appendix(&[0.0, 1.0, 1.0]).is_err());
        assert!(verify_appendix(&[1.0]).is_err());
    }
}
