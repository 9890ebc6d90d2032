use super::{enumerate_distribution, joint_prob, Frame};
use crate::error::{Error, Result};
use crate::exterior::IndexCombo;
use serde::{Deserialize, Serialize};

/// The event `include ⊂ φ, exclude ∩ φ = ∅, A_i ⊄ φ for every A_i`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetEventSpec {
    pub include: IndexCombo,
    pub exclude: IndexCombo,
    pub not_supersets: Vec<IndexCombo>,
}

impl SubsetEventSpec {
    pub fn new(include: IndexCombo, exclude: IndexCombo, not_supersets: Vec<IndexCombo>) -> Self {
        Self { include, exclude, not_supersets }
    }

    pub fn not_superset(sets: Vec<IndexCombo>) -> Self {
        Self { not_supersets: sets, ..Self::default() }
    }

    /// Indices in range, all sets pairwise disjoint, no empty `A_i`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let named: Vec<(String, &IndexCombo)> = std::iter::once(("include".to_string(), &self.include))
            .chain(std::iter::once(("exclude".to_string(), &self.exclude)))
            .chain(self.not_supersets.iter().enumerate().map(|(i, a)| (format!("A{}", i + 1), a)))
            .collect();
        for (_, s) in &named {
            s.check_within(n)?;
        }
        for (i, a) in self.not_supersets.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::EmptyEvent(format!("A{} is empty, so A{} ⊄ φ never holds", i + 1, i + 1)));
            }
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

    /// Whether a realised subset (sorted, 1-based) belongs to the event.
    pub fn contains(&self, s: &[usize]) -> bool {
        self.include.is_subset_of(s)
            && self.exclude.iter().all(|i| s.binary_search(&i).is_err())
            && self.not_supersets.iter().all(|a| !a.is_subset_of(s))
    }
}

/// Largest number of `A_i` constraints handled by the closed form.
const CLOSED_FORM_MAX: usize = 2;

/// Probability of the event. With at most two `A_i` it is the alternating sum
/// over `T ⊂ {A_i}` of `P(include ∪ ⋃T ⊂ φ, exclude ∩ φ = ∅)`, each term
/// a kernel determinant; otherwise the oracle table is summed.
pub fn prob_event(f: &Frame, e: &SubsetEventSpec) -> Result<f64> {
    e.validate(f.n())?;
    let m = e.not_supersets.len();
    if m > CLOSED_FORM_MAX {
        let d = enumerate_distribution(f)?;
        return Ok(d.event_prob(|s| e.contains(s)));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << m) {
        let mut inc = e.include.clone();
        for (i, a) in e.not_supersets.iter().enumerate() {
            if mask & (1 << i) != 0 {
                inc = inc.union(a);
            }
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * joint_prob(f, &inc, &e.exclude)?;
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[usize]) -> IndexCombo {
        IndexCombo::new(v.to_vec()).unwrap()
    }

    #[test]
    fn example1_events() {
        let f = Frame::example1();
        let e = SubsetEventSpec::new(c(&[3]), c(&[]), vec![c(&[1]), c(&[2])]);
        assert!((prob_event(&f, &e).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(prob_event(&f, &SubsetEventSpec::default()).unwrap(), 1.0);
        let kappa = prob_event(&f, &SubsetEventSpec::not_superset(vec![c(&[1, 2])])).unwrap();
        assert!((kappa - 0.75).abs() < 1e-15);
    }

    #[test]
    fn overlapping_sets_are_named() {
        let f = Frame::example1();
        let e = SubsetEventSpec::new(c(&[1]), c(&[]), vec![c(&[1, 2])]);
        match prob_event(&f, &e) {
            Err(Error::Overlap(a, b)) => {
                assert_eq!(a, "include={1}");
                assert_eq!(b, "A1={1-2}");
            }
            other => panic!("expected overlap, got {other:?}"),
        }
        let empty = SubsetEventSpec::not_superset(vec![IndexCombo::empty()]);
        assert!(matches!(prob_event(&f, &empty), Err(Error::EmptyEvent(_))));
    }

    #[test]
    fn three_constraints_use_the_oracle() {
        let f = Frame::example1();
        let e = SubsetEventSpec::not_superset(vec![c(&[1]), c(&[2]), c(&[3])]);
        // no 2-subset of {1..4} avoids 1, 2 and 3
        assert_eq!(prob_event(&f, &e).unwrap(), 0.0);
    }
}
