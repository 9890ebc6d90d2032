use super::{abs_tol, avoids_all, table_prob, Check, InstanceDescriptor, Tolerance, VerificationReport};
use crate::cs::{classify_case, jordan_angles, lemma3_quantities, CaseTag};
use crate::dpp::{
    condition_on_point, enumerate_distribution, inclusion_prob, is_rank2_determinantal_certificate, joint_prob,
    prob_event, Frame, Rank2Verdict, SubsetEventSpec, NULL_EVENT_TOL,
};
use crate::error::{Error, Result};
use crate::exterior::{Combinations, IndexCombo};
use crate::linalg::{self, DenseMatrix};
use serde::Serialize;
use std::collections::HashMap;

/// Probability-level equalities computed by two exact routes.
const ROUTE_TOL: Tolerance = abs_tol(1e-10);

fn check_disjoint(n: usize, named: &[(&str, &IndexCombo)]) -> Result<()> {
    for (_, s) in named {
        s.check_within(n)?;
    }
    for (i, (na, a)) in named.iter().enumerate() {
        for (nb, b) in &named[i + 1..] {
            if !a.is_disjoint(b) {
                return Err(Error::Overlap(format!("{na}={{{a}}}"), format!("{nb}={{{b}}}")));
            }
        }
    }
    Ok(())
}

fn check_not_supersets(n: usize, sets: &[IndexCombo]) -> Result<()> {
    SubsetEventSpec::not_superset(sets.to_vec()).validate(n)
}

/// `P(B₁⊂ψ)P(B₂⊂ψ) - P(B₁∪B₂⊂ψ) >= 0` for `ψ = (φ | A_i ⊄ φ)`, from the
/// enumeration table. With at most two `A_i` the conditional probabilities are
/// also recomputed by inclusion–exclusion over kernel determinants.
pub fn verify_theorem1(f: &Frame, b1: &IndexCombo, b2: &IndexCombo, sets: &[IndexCombo]) -> Result<VerificationReport> {
    check_not_supersets(f.n(), sets)?;
    let mut named = vec![("B1", b1), ("B2", b2)];
    let labels: Vec<String> = (1..=sets.len()).map(|i| format!("A{i}")).collect();
    named.extend(labels.iter().map(String::as_str).zip(sets));
    check_disjoint(f.n(), &named)?;
    let d = enumerate_distribution(f)?;
    let (psi, tau) = d.condition(|s| avoids_all(s, sets))?;
    let both = b1.union(b2);
    let (p1, p2, p12) = (psi.inclusion(b1), psi.inclusion(b2), psi.inclusion(&both));
    let gap = p1 * p2 - p12;
    let mut checks = vec![Check::nonnegative("conditional_product_gap", gap)];
    if sets.len() <= 2 {
        let tau_cf = prob_event(f, &SubsetEventSpec::not_superset(sets.to_vec()))?;
        checks.push(Check::equality("closed_form_tau", tau_cf, tau, ROUTE_TOL));
        // joint probabilities, not ratios: dividing by a small tau magnifies rounding
        for (name, s) in [("closed_form_b1", b1), ("closed_form_b2", b2), ("closed_form_b1b2", &both)] {
            let joint = prob_event(f, &SubsetEventSpec::new(s.clone(), IndexCombo::empty(), sets.to_vec()))?;
            let oracle = d.event_prob(|t| s.is_subset_of(t) && avoids_all(t, sets));
            checks.push(Check::equality(name, joint, oracle, ROUTE_TOL));
        }
    }
    let inst = InstanceDescriptor::new(f.n(), f.p()).set("B1", b1).set("B2", b2).sets_indexed("A", sets);
    Ok(VerificationReport::new("theorem1", inst, checks).with_value("tau", tau).with_value("gap", gap))
}

/// The two sides of the reduction inequality for `B₁ ∪ {y}`, computed on `φ`,
/// on `φ_y = (φ | y ∈ φ) \ {y}` and on `ψ`.
pub fn verify_reduction_step(
    f: &Frame,
    y: usize,
    b1: &IndexCombo,
    b2: &IndexCombo,
    sets: &[IndexCombo],
) -> Result<VerificationReport> {
    f.check_index(y)?;
    check_not_supersets(f.n(), sets)?;
    let ys = IndexCombo::singleton(y);
    let mut named = vec![("y", &ys), ("B1", b1), ("B2", b2)];
    let labels: Vec<String> = (1..=sets.len()).map(|i| format!("A{i}")).collect();
    named.extend(labels.iter().map(String::as_str).zip(sets));
    check_disjoint(f.n(), &named)?;

    let d = enumerate_distribution(f)?;
    let py_a = table_prob(&d, &ys, sets);
    if py_a <= NULL_EVENT_TOL {
        return Err(Error::NullConditioning(py_a));
    }
    let yb1 = ys.union(b1);
    let yb2 = ys.union(b2);
    let lhs5 = table_prob(&d, &yb1.union(b2), sets);
    let rhs5 = table_prob(&d, &yb1, sets) * table_prob(&d, &yb2, sets) / py_a;

    let cf = condition_on_point(f, y)?;
    let dy = enumerate_distribution(&cf.frame)?;
    let py = inclusion_prob(f, &ys)?;
    let rb1 = cf.relabel(b1)?;
    let rb2 = cf.relabel(b2)?;
    let rsets = sets.iter().map(|a| cf.relabel(a)).collect::<Result<Vec<_>>>()?;
    let lhs5_y = py * table_prob(&dy, &rb1.union(&rb2), &rsets);
    let rhs5_y =
        py * table_prob(&dy, &rb1, &rsets) * table_prob(&dy, &rb2, &rsets) / table_prob(&dy, &IndexCombo::empty(), &rsets);

    let (psi, tau) = d.condition(|s| avoids_all(s, sets))?;
    let lhs6 = psi.inclusion(&yb1.union(b2));
    let rhs6 = psi.inclusion(&yb1) * psi.inclusion(&yb2) / psi.inclusion(&ys);

    let checks = vec![
        Check::equality("lhs_via_point_conditioning", lhs5_y, lhs5, ROUTE_TOL),
        Check::equality("rhs_via_point_conditioning", rhs5_y, rhs5, ROUTE_TOL),
        Check::equality("lhs_scaled_conditional", tau * lhs6, lhs5, ROUTE_TOL),
        Check::equality("rhs_scaled_conditional", tau * rhs6, rhs5, ROUTE_TOL),
        Check::at_least("conditional_inequality", rhs6, lhs6, super::INEQUALITY_SLACK),
    ];
    let inst = InstanceDescriptor::new(f.n(), f.p())
        .point("y", y)
        .set("B1", b1)
        .set("B2", b2)
        .sets_indexed("A", sets);
    Ok(VerificationReport::new("reduction", inst, checks).with_value("tau", tau).with_value("p_y_avoid", py_a))
}

/// Single set of full size `p`: the conditional gap has the closed form
/// `[τ⟨z_i,z_j⟩² + ‖z_i‖²‖z_j‖²κ] / τ²` with `τ = 1 - κ`.
pub fn verify_remark1(f: &Frame, a1: &IndexCombo, i: usize, j: usize) -> Result<VerificationReport> {
    if a1.len() != f.p() {
        return Err(Error::Precondition(format!("|A1| = {} but p = {}", a1.len(), f.p())));
    }
    f.check_index(i)?;
    f.check_index(j)?;
    let (si, sj) = (IndexCombo::singleton(i), IndexCombo::singleton(j));
    if i == j {
        return Err(Error::Overlap(format!("i={i}"), format!("j={j}")));
    }
    check_disjoint(f.n(), &[("A1", a1), ("i", &si), ("j", &sj)])?;
    let kappa = inclusion_prob(f, a1)?;
    let tau_geo = 1.0 - kappa;
    let d = enumerate_distribution(f)?;
    let (psi, tau) = d.condition(|s| !a1.is_subset_of(s))?;
    let both = si.union(&sj);
    let gap = psi.inclusion(&si) * psi.inclusion(&sj) - psi.inclusion(&both);
    let middle = (d.inclusion(&si) * d.inclusion(&sj) - tau * d.inclusion(&both)) / (tau * tau);
    let (zi, zj) = (f.column(i), f.column(j));
    let ip = linalg::dot(zi, zj);
    let geo = (tau_geo * ip * ip + linalg::norm_sq(zi) * linalg::norm_sq(zj) * kappa) / (tau_geo * tau_geo);
    let checks = vec![
        Check::equality("conditional_gap_vs_geometric", gap, geo, Tolerance::IDENTITY),
        Check::equality("conditional_gap_vs_unconditioned", gap, middle, Tolerance::IDENTITY),
        Check::equality("tau_vs_kappa", tau, tau_geo, ROUTE_TOL),
        Check::nonnegative("geometric_side", geo),
    ];
    let inst = InstanceDescriptor::new(f.n(), f.p()).set("A1", a1).point("i", i).point("j", j);
    Ok(VerificationReport::new("remark1", inst, checks).with_value("kappa", kappa))
}

/// Alternating sum of wedge inner products over the middle points against the
/// conditional covariance of the end points given that the middle is absent.
pub fn verify_chain_formula(f: &Frame, n: usize) -> Result<VerificationReport> {
    if n < 2 || n > f.p() || n > f.n() {
        return Err(Error::Precondition(format!("chain length {n} needs 2 <= n <= p = {}", f.p())));
    }
    let middle = IndexCombo::range(2, n - 1);
    let (z1, zn) = (f.column(1), f.column(n));
    let mut s = linalg::dot(z1, zn);
    for k in 1..=middle.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for sub in Combinations::new(middle.len(), k) {
            let pts: Vec<&[f64]> = sub.iter().map(|r| f.column(middle.as_slice()[r - 1])).collect();
            let a: Vec<&[f64]> = std::iter::once(z1).chain(pts.iter().copied()).collect();
            let b: Vec<&[f64]> = std::iter::once(zn).chain(pts.iter().copied()).collect();
            s += sign * linalg::mixed_gram_det(&a, &b)?;
        }
    }
    let d = enumerate_distribution(f)?;
    let mid: Vec<usize> = middle.iter().collect();
    let (psi, q) = d.condition(|t| mid.iter().all(|m| t.binary_search(m).is_err()))?;
    let (e1, en) = (IndexCombo::singleton(1), IndexCombo::singleton(n));
    let cov = psi.inclusion(&e1) * psi.inclusion(&en) - psi.inclusion(&e1.union(&en));
    let rhs = cov * q * q;
    let q_kernel = joint_prob(f, &IndexCombo::empty(), &middle)?;
    let checks = vec![
        Check::equality("squared_alternating_sum", s * s, rhs, abs_tol(1e-9)),
        Check::equality("absence_prob_kernel", q_kernel, q, ROUTE_TOL),
    ];
    let inst = InstanceDescriptor::new(f.n(), f.p()).set("middle", &middle).point("x1", 1).point("xn", n);
    Ok(VerificationReport::new(&format!("chain-{n}"), inst, checks).with_value("absence_prob", q))
}

/// Angle-based quantities of two sets against the enumeration table.
pub fn verify_lemma3(f: &Frame, a1: &IndexCombo, a2: &IndexCombo) -> Result<VerificationReport> {
    let q = lemma3_quantities(f, a1, a2)?;
    let d = enumerate_distribution(f)?;
    let union = d.inclusion(&a1.union(a2));
    let tau = d.event_prob(|s| !a1.is_subset_of(s) && !a2.is_subset_of(s));
    let prod_sin: f64 = q.angles.iter().map(|a| a.sin().powi(2)).product::<f64>()
        * if q.intersection_dim > 0 { 0.0 } else { 1.0 };
    let mut checks = vec![
        Check::equality("union_prob_from_angles", q.union_prob, union, ROUTE_TOL),
        Check::equality("kappa1_vs_table", q.kappa1, d.inclusion(a1), ROUTE_TOL),
        Check::equality("kappa2_vs_table", q.kappa2, d.inclusion(a2), ROUTE_TOL),
        Check::equality("not_superset_prob_vs_table", q.not_superset_prob, tau, ROUTE_TOL),
    ];
    if let Some(cross) = q.cross_inner_sq {
        let c1 = f.columns_of(a1);
        let c2 = f.columns_of(a2);
        let wedge_ip = linalg::mixed_gram_det(&c1, &c2)?;
        checks.push(Check::equality("cross_inner_sq_vs_wedges", cross, wedge_ip * wedge_ip, ROUTE_TOL));
        checks.push(Check::at_least(
            "cross_inner_sq_bound",
            q.kappa1 * q.kappa2 * (1.0 - prod_sin),
            cross,
            1e-12,
        ));
        checks.push(Check::equality(
            "correlation_gap_vs_angles",
            q.kappa1 * q.kappa2 - union,
            q.kappa1 * q.kappa2 * (1.0 - prod_sin),
            ROUTE_TOL,
        ));
    }
    let e1: Vec<Vec<f64>> = f.columns_of(a1).iter().map(|c| c.to_vec()).collect();
    let e2: Vec<Vec<f64>> = f.columns_of(a2).iter().map(|c| c.to_vec()).collect();
    let fwd = jordan_angles(&e1, &e2)?;
    let back = jordan_angles(&e2, &e1)?;
    let asym = if fwd.angles.len() == back.angles.len() {
        fwd.angles.iter().zip(&back.angles).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    checks.push(Check::equality("angle_symmetry", asym, 0.0, ROUTE_TOL));
    checks.push(Check::equality("orthonormal_pairing", fwd.reconstruction_error(), 0.0, ROUTE_TOL));
    let inst = InstanceDescriptor::new(f.n(), f.p()).set("A1", a1).set("A2", a2);
    Ok(VerificationReport::new("lemma3", inst, checks).with_value("kappa1", q.kappa1).with_value("kappa2", q.kappa2))
}

/// `P(A∪B ⊂ φ) <= P(A ⊂ φ) P(B ⊂ φ)` with the wedge lower bound on the gap
/// when `|A| = |B|`.
pub fn verify_inequality_i2(f: &Frame, a: &IndexCombo, b: &IndexCombo) -> Result<VerificationReport> {
    check_disjoint(f.n(), &[("A", a), ("B", b)])?;
    let d = enumerate_distribution(f)?;
    let gap = d.inclusion(a) * d.inclusion(b) - d.inclusion(&a.union(b));
    let ca = f.columns_of(a);
    let cb = f.columns_of(b);
    let both: Vec<&[f64]> = ca.iter().chain(&cb).copied().collect();
    let union_w = if both.len() > f.p() { 0.0 } else { linalg::gram_det(&both)? };
    let wedge_gap = linalg::gram_det(&ca)? * linalg::gram_det(&cb)? - union_w;
    let mut checks = vec![
        Check::nonnegative("inclusion_correlation_gap", gap),
        Check::equality("gap_via_wedges", wedge_gap, gap, ROUTE_TOL),
    ];
    if a.len() == b.len() {
        let ip = linalg::mixed_gram_det(&ca, &cb)?;
        checks.push(Check::at_least("gap_exceeds_wedge_inner_sq", gap, ip * ip, super::INEQUALITY_SLACK));
    }
    let inst = InstanceDescriptor::new(f.n(), f.p()).set("A", a).set("B", b);
    Ok(VerificationReport::new("inequality-I2", inst, checks))
}

/// Null union probability: only the final inequality by oracle, plus the
/// dimension accounting of the intersection of the two column spans.
pub fn verify_degenerate(f: &Frame, a1: &IndexCombo, a2: &IndexCombo, x: usize, xp: usize) -> Result<VerificationReport> {
    let c = classify_case(f, a1, a2)?;
    if c.tag != CaseTag::Degenerate {
        return Err(Error::Precondition(format!("case is {}, not DEGENERATE", c.tag)));
    }
    let mut r = verify_theorem1(f, &IndexCombo::singleton(x), &IndexCombo::singleton(xp), &[a1.clone(), a2.clone()])?;
    let e1: Vec<Vec<f64>> = f.columns_of(a1).iter().map(|c| c.to_vec()).collect();
    let e2: Vec<Vec<f64>> = f.columns_of(a2).iter().map(|c| c.to_vec()).collect();
    let j = jordan_angles(&e1, &e2)?;
    let l0 = j.intersection_dim() as f64;
    r.checks.push(Check::at_least("union_prob_is_null", 0.0, c.union_prob, 1e-12));
    r.checks.push(Check::at_least("intersection_dim_positive", l0, 1.0, 0.0));
    r.checks.push(Check::equality(
        "dim_accounting_first",
        (j.k() + j.intersection_dim() + j.e1_only.len()) as f64,
        a1.len() as f64,
        abs_tol(0.0),
    ));
    r.checks.push(Check::equality(
        "dim_accounting_second",
        (j.k() + j.intersection_dim() + j.e2_only.len()) as f64,
        a2.len() as f64,
        abs_tol(0.0),
    ));
    let checks = std::mem::take(&mut r.checks);
    let inst = r.instance.clone().point("x", x).point("x'", xp);
    let mut out = VerificationReport::new("degenerate", inst, checks);
    out.instance.sets.remove("B1");
    out.instance.sets.remove("B2");
    out.instance.case = Some(c.tag);
    Ok(out.with_value("intersection_dim", l0))
}

/// Oracle consistency: every inclusion probability against the table,
/// normalisation, invariance under a rotation of the frame, the closed-form
/// event probability and point conditioning.
pub fn verify_oracle(f: &Frame) -> Result<VerificationReport> {
    let (n, p) = (f.n(), f.p());
    let d = enumerate_distribution(f)?;
    let mut incl: HashMap<Vec<usize>, f64> = HashMap::new();
    for (t, v) in d.iter() {
        let ts = t.as_slice();
        for mask in 0u32..(1 << p) {
            let sub: Vec<usize> = (0..p).filter(|b| mask & (1 << b) != 0).map(|b| ts[b]).collect();
            *incl.entry(sub).or_default() += v;
        }
    }
    let mut worst = (0.0, 0.0, 0.0);
    for size in 0..=p {
        for s in Combinations::new(n, size) {
            let geo = inclusion_prob(f, &s)?;
            let table = incl.get(s.as_slice()).copied().unwrap_or(0.0);
            let gap = (geo - table).abs();
            if gap >= worst.0 {
                worst = (gap, geo, table);
            }
        }
    }
    let mut axis: Vec<f64> = (1..=p).map(|i| i as f64).collect();
    let norm = linalg::norm_sq(&axis).sqrt();
    axis.iter_mut().for_each(|a| *a /= norm);
    let q: DenseMatrix = linalg::householder_to_e1(&axis);
    let rotated = enumerate_distribution(&f.rotated(&q)?)?;
    let mut checks = vec![
        Check::equality("inclusion_vs_table", worst.1, worst.2, ROUTE_TOL),
        Check::equality("total_mass", d.total(), 1.0, ROUTE_TOL),
        Check::equality("rotation_invariance", d.max_abs_diff(&rotated), 0.0, ROUTE_TOL),
    ];
    if n >= 3 {
        let e = SubsetEventSpec::new(
            IndexCombo::empty(),
            IndexCombo::singleton(n),
            vec![IndexCombo::new(vec![1, 2]).expect("sorted")],
        );
        checks.push(Check::equality("event_prob_vs_table", prob_event(f, &e)?, d.event_prob(|s| e.contains(s)), ROUTE_TOL));
    }
    if p >= 2 && d.inclusion(&IndexCombo::singleton(1)) > NULL_EVENT_TOL {
        let cf = condition_on_point(f, 1)?;
        checks.push(Check::equality("point_conditioning_law", cf.oracle_delta.unwrap_or(f64::NAN), 0.0, ROUTE_TOL));
    }
    Ok(VerificationReport::new("oracle", InstanceDescriptor::new(n, p), checks))
}

/// The counterexample pipeline on [`Frame::example1`]: `κ = P(φ ≠ {1,2})`,
/// the law of `ψ = (φ | {1,2} ⊄ φ)` and the rank-two share test on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub kappa: f64,
    pub conditional_law: Vec<(IndexCombo, f64)>,
    pub certificate: Rank2Verdict,
    pub not_determinantal: bool,
}

pub fn counterexample() -> Result<Counterexample> {
    let f = Frame::example1();
    let a = IndexCombo::range(1, 2);
    let d = enumerate_distribution(&f)?;
    let (psi, kappa) = d.condition(|s| !a.is_subset_of(s))?;
    let certificate = is_rank2_determinantal_certificate(&psi);
    let not_determinantal = matches!(certificate, Rank2Verdict::NotDeterminantal { .. });
    Ok(Counterexample { kappa, conditional_law: psi.support(), certificate, not_determinantal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::Verdict;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(v: &[usize]) -> IndexCombo {
        IndexCombo::new(v.to_vec()).unwrap()
    }

    #[test]
    fn example1_gaps() {
        let f = Frame::example1();
        let r = verify_theorem1(&f, &c(&[3]), &c(&[4]), &[c(&[1, 2])]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.lhs - 1.0 / 9.0).abs() < 1e-15);
        let r = verify_theorem1(&f, &c(&[1]), &c(&[3]), &[c(&[2, 4])]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        // {2} or {4} is always drawn
        let r = verify_theorem1(&f, &c(&[1]), &c(&[3]), &[c(&[2]), c(&[4])]);
        assert!(matches!(r, Err(Error::NullConditioning(_))));
    }

    #[test]
    fn example1_one_three() {
        // ψ is uniform on {1,4},{2,3},{3,4}: P(1)=1/3, P(3)=2/3, P(1,3)=0
        let r = verify_theorem1(&Frame::example1(), &c(&[1]), &c(&[3]), &[c(&[1, 2])]);
        assert!(matches!(r, Err(Error::Overlap(_, _))));
        let f = Frame::example1();
        let d = enumerate_distribution(&f).unwrap().condition(|s| !c(&[1, 2]).is_subset_of(s)).unwrap().0;
        let gap = d.inclusion(&c(&[1])) * d.inclusion(&c(&[3])) - d.inclusion(&c(&[1, 3]));
        assert!((gap - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn empty_b1_has_zero_gap() {
        let r = verify_theorem1(&Frame::example1(), &IndexCombo::empty(), &c(&[4]), &[c(&[1, 2])]).unwrap();
        assert_eq!(r.lhs, 0.0);
    }

    #[test]
    fn remark1_example1() {
        let r = verify_remark1(&Frame::example1(), &c(&[1, 2]), 3, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!((r.lhs - 1.0 / 9.0).abs() < 1e-14);
        assert!((r.rhs - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn chain_two_is_basic_identity() {
        let r = verify_chain_formula(&Frame::example1(), 2).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.lhs.abs() < 1e-30);
    }

    #[test]
    fn chain_with_absent_middle_point() {
        let h = FRAC_1_SQRT_2;
        let f = Frame::new(vec![vec![h, 0.0, 0.0, h], vec![0.5, 0.0, h, -0.5]]).unwrap();
        let r = verify_chain_formula(&f, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(verify_chain_formula(&f, 3).is_err()); // n > p
    }

    #[test]
    fn reduction_example1() {
        let f = Frame::example1();
        let r = verify_reduction_step(&f, 3, &IndexCombo::empty(), &c(&[4]), &[c(&[1, 2])]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn oracle_example1() {
        let r = verify_oracle(&Frame::example1()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }
}
