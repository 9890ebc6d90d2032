use super::{abs_tol, table_prob, Check, InstanceDescriptor, Tolerance, VerificationReport};
use crate::cs::{align_leading_coordinates, classify_case, CaseTag};
use crate::dpp::{enumerate_distribution, Frame};
use crate::error::{Error, Result};
use crate::exterior::{wedge2_norm_sq, IndexCombo};
use crate::linalg;

const ROUTE_TOL: Tolerance = abs_tol(1e-10);

/// When the two sets span only `χ < p` dimensions: rotate their span onto the
/// leading coordinates and compare against the process built from the first
/// `χ` rows of the rotated frame.
pub fn verify_restricted(
    f: &Frame,
    a1: &IndexCombo,
    a2: &IndexCombo,
    x: usize,
    xp: usize,
) -> Result<VerificationReport> {
    f.check_index(x)?;
    f.check_index(xp)?;
    let cls = classify_case(f, a1, a2)?;
    if cls.tag != CaseTag::Restricted {
        return Err(Error::Precondition(format!("instance is {}, not RESTRICTED", cls.tag)));
    }
    let union = a1.union(a2);
    if x == xp || union.contains(x) || union.contains(xp) {
        return Err(Error::Overlap(format!("x={x}, x'={xp}"), format!("A1∪A2={{{union}}}")));
    }
    let (g, chi) = align_leading_coordinates(f, &union)?;
    if chi != cls.chi {
        return Err(Error::RankDeficient(format!("A1∪A2 spans {chi} < {} dimensions", cls.chi)));
    }
    let phi0 = Frame::new(g.rows()[..chi].to_vec())?;

    let sets = [a1.clone(), a2.clone()];
    let d = enumerate_distribution(f)?;
    let d0 = enumerate_distribution(&phi0)?;
    let none = IndexCombo::empty();
    let (sx, sxp) = (IndexCombo::singleton(x), IndexCombo::singleton(xp));
    let sxx = sx.union(&sxp);
    let tau = table_prob(&d, &none, &sets);
    if tau <= 1e-12 {
        return Err(Error::IllConditioned(format!("P(A1 ⊄ φ, A2 ⊄ φ) = {tau:e}")));
    }
    let tau0 = table_prob(&d0, &none, &sets);
    let (px, pxp, pxx) = (table_prob(&d, &sx, &sets), table_prob(&d, &sxp, &sets), table_prob(&d, &sxx, &sets));
    let (p0x, p0xp, p0xx) = (table_prob(&d0, &sx, &sets), table_prob(&d0, &sxp, &sets), table_prob(&d0, &sxx, &sets));

    let (z1, z2) = (g.column(x), g.column(xp));
    let (v1, w1) = z1.split_at(chi);
    let (v2, w2) = z2.split_at(chi);
    fn with<'a>(head: &'a [f64], f: &'a Frame, s: &IndexCombo) -> Vec<&'a [f64]> {
        let mut v = vec![head];
        v.extend(f.columns_of(s));
        v
    }
    let big_v = linalg::dot(v1, v2)
        - linalg::mixed_gram_det(&with(v1, &phi0, a1), &with(v2, &phi0, a1))?
        - linalg::mixed_gram_det(&with(v1, &phi0, a2), &with(v2, &phi0, a2))?;
    let ww = linalg::dot(w1, w2);
    let (n1, n2) = (linalg::norm_sq(w1), linalg::norm_sq(w2));
    let w_wedge = if w1.len() >= 2 { wedge2_norm_sq(w1, w2)? } else { 0.0 };

    let gap_scaled = px * pxp - tau * pxx;
    let reduced = p0x * p0xp - tau * p0xx;
    let rhs = reduced + tau * tau * ww * ww + 2.0 * tau * ww * big_v;
    let final_bound = reduced - big_v * big_v;
    let regrouped = final_bound + (big_v + tau * ww).powi(2);

    let checks = vec![
        Check::equality("conditional_gap_restricted_form", gap_scaled, rhs, Tolerance::IDENTITY),
        Check::equality("tau_restricted_frame", tau, tau0, ROUTE_TOL),
        Check::equality("x_avoid_split", px, p0x + tau * n1, ROUTE_TOL),
        Check::equality("x_prime_avoid_split", pxp, p0xp + tau * n2, ROUTE_TOL),
        Check::equality(
            "pair_avoid_split",
            pxx,
            p0xx + n2 * p0x + n1 * p0xp + tau * w_wedge - 2.0 * big_v * ww,
            ROUTE_TOL,
        ),
        Check::nonnegative("restricted_frame_bound", final_bound),
        Check::equality("regrouped_square", gap_scaled, regrouped, ROUTE_TOL),
        Check::nonnegative("conditional_gap_nonnegative", gap_scaled),
    ];
    let mut inst = InstanceDescriptor::new(f.n(), f.p()).set("A1", a1).set("A2", a2).point("x", x).point("x'", xp);
    inst.case = Some(CaseTag::Restricted);
    Ok(VerificationReport::new("restricted", inst, checks)
        .with_value("tau", tau)
        .with_value("chi", chi as f64)
        .with_value("V", big_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::Verdict;

    #[test]
    fn small_restricted_instance() {
        let raw = vec![
            vec![0.3, -0.2, 0.5, 0.1, 0.4, -0.6, 0.2],
            vec![0.1, 0.6, -0.3, 0.2, 0.5, 0.1, -0.4],
            vec![-0.5, 0.2, 0.1, 0.7, -0.1, 0.3, 0.2],
            vec![0.2, 0.1, 0.4, -0.3, 0.2, 0.5, 0.6],
        ];
        let (basis, _) = linalg::gram_schmidt(&raw, 1e-10);
        let f = Frame::new(basis).unwrap();
        let r = verify_restricted(&f, &IndexCombo::singleton(1), &IndexCombo::singleton(2), 3, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.failed_checks().collect::<Vec<_>>());
        let r = verify_restricted(&f, &IndexCombo::singleton(1), &IndexCombo::range(2, 3), 4, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.failed_checks().collect::<Vec<_>>());
    }
}
