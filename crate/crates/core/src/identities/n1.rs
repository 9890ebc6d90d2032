use super::{abs_tol, table_prob, Check, InstanceDescriptor, Tolerance, VerificationReport};
use crate::cs::{align_leading_coordinates, KAPPA_TOL};
use crate::dpp::{enumerate_distribution, inclusion_prob, Frame};
use crate::error::{Error, Result};
use crate::exterior::{wedge2_norm_sq, IndexCombo};
use crate::linalg;

const ROUTE_TOL: Tolerance = abs_tol(1e-10);

fn preconditions(f: &Frame, a1: &IndexCombo, x: usize, xp: usize) -> Result<f64> {
    a1.check_within(f.n())?;
    f.check_index(x)?;
    f.check_index(xp)?;
    if x == xp || a1.contains(x) || a1.contains(xp) {
        return Err(Error::Overlap(format!("A1={{{a1}}}"), format!("x={x}, x'={xp}")));
    }
    if a1.len() >= f.p() {
        return Err(Error::Precondition(format!("|A1| = {} must be below p = {}", a1.len(), f.p())));
    }
    let kappa = inclusion_prob(f, a1)?;
    if kappa <= KAPPA_TOL || kappa >= 1.0 - KAPPA_TOL {
        return Err(Error::DegenerateKappa(format!("κ = {kappa:e}")));
    }
    Ok(kappa)
}

/// Checks on a frame whose `A1` columns live in the first `k` coordinates.
fn split_checks(
    f: &Frame,
    split: &Frame,
    k: usize,
    a1: &IndexCombo,
    x: usize,
    xp: usize,
    kappa: f64,
) -> Result<Vec<Check>> {
    let d = enumerate_distribution(f)?;
    let sets = [a1.clone()];
    let (psi, _) = d.condition(|s| !a1.is_subset_of(s))?;
    let (sx, sxp) = (IndexCombo::singleton(x), IndexCombo::singleton(xp));
    let gap = psi.inclusion(&sx) * psi.inclusion(&sxp) - psi.inclusion(&sx.union(&sxp));

    let (z1, z2) = (split.column(x), split.column(xp));
    let (v1, w1) = z1.split_at(k);
    let (v2, w2) = z2.split_at(k);
    let om = 1.0 - kappa;
    let vv = linalg::dot(v1, v2);
    let ww = linalg::dot(w1, w2);
    let v_wedge = if k >= 2 { wedge2_norm_sq(v1, v2)? } else { 0.0 };
    let w_wedge = if w1.len() >= 2 { wedge2_norm_sq(w1, w2)? } else { 0.0 };
    let square = (vv + om * ww).powi(2);
    let rhs = (square + kappa * v_wedge) / (om * om);

    let leak = a1
        .iter()
        .flat_map(|i| split.column(i)[k..].iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let mut all: Vec<&[f64]> = split.columns_of(a1);
    all.push(z1);
    all.push(z2);
    let full_wedge = if all.len() > f.p() { 0.0 } else { linalg::gram_det(&all)? };
    let pair_wedge = wedge2_norm_sq(z1, z2)?;
    let pair_expansion = v_wedge + w_wedge + linalg::norm_sq(v1) * linalg::norm_sq(w2)
        + linalg::norm_sq(v2) * linalg::norm_sq(w1)
        - 2.0 * vv * ww;

    Ok(vec![
        Check::equality("conditional_gap_canonical_split", gap, rhs, Tolerance::IDENTITY),
        Check::equality(
            "x_avoid_split",
            table_prob(&d, &sx, &sets),
            linalg::norm_sq(v1) + linalg::norm_sq(w1) * om,
            ROUTE_TOL,
        ),
        Check::equality(
            "x_prime_avoid_split",
            table_prob(&d, &sxp, &sets),
            linalg::norm_sq(v2) + linalg::norm_sq(w2) * om,
            ROUTE_TOL,
        ),
        Check::equality("pair_wedge_split", pair_wedge, pair_expansion, ROUTE_TOL),
        Check::equality("full_wedge_factorises", full_wedge, w_wedge * kappa, ROUTE_TOL),
        Check::nonnegative("square_component", square),
        Check::nonnegative("wedge_component", kappa * v_wedge),
        Check::equality("set_columns_leading_support", leak, 0.0, ROUTE_TOL),
    ])
}

/// Conditional covariance of two points given `A₁ ⊄ φ` against the split
/// formula after rotating `A₁`'s column span onto the leading coordinates.
pub fn verify_n1_identity(f: &Frame, a1: &IndexCombo, x: usize, xp: usize) -> Result<VerificationReport> {
    let kappa = preconditions(f, a1, x, xp)?;
    let (g, k) = align_leading_coordinates(f, a1)?;
    if k != a1.len() {
        return Err(Error::RankDeficient(format!("A1 columns span {k} < {} dimensions", a1.len())));
    }
    let mut checks = split_checks(f, &g, k, a1, x, xp, kappa)?;
    let before = enumerate_distribution(f)?;
    let after = enumerate_distribution(&g)?;
    checks.push(Check::equality("alignment_invariance", before.max_abs_diff(&after), 0.0, ROUTE_TOL));
    let inst = InstanceDescriptor::new(f.n(), f.p()).set("A1", a1).point("x", x).point("x'", xp);
    Ok(VerificationReport::new("n1-identity", inst, checks).with_value("kappa", kappa))
}

/// Same identity on a frame already in canonical form with `A₁ = {1..k}`,
/// `x = k+1`, `x' = k+2`; no alignment is performed. Also checks
/// `κ = ∏ cos² θ_i` for the generating angles.
pub fn verify_n1_canonical(f: &Frame, k: usize, thetas: &[f64]) -> Result<VerificationReport> {
    if thetas.len() != k || k == 0 {
        return Err(Error::Precondition(format!("{} angles for k = {k}", thetas.len())));
    }
    let a1 = IndexCombo::range(1, k);
    let kappa = preconditions(f, &a1, k + 1, k + 2)?;
    let mut checks = split_checks(f, f, k, &a1, k + 1, k + 2, kappa)?;
    let from_angles: f64 = thetas.iter().map(|t| t.cos().powi(2)).product();
    checks.push(Check::equality("kappa_from_angles", kappa, from_angles, ROUTE_TOL));
    let mut inst = InstanceDescriptor::new(f.n(), f.p()).set("A1", &a1).point("x", k + 1).point("x'", k + 2);
    inst.angles = Some(thetas.to_vec());
    Ok(VerificationReport::new("n1-canonical", inst, checks).with_value("kappa", kappa))
}
