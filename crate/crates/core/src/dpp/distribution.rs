//! The brute-force oracle: full probability tables over all `p`-subsets.

use super::{clamp_probability, elementary_prob, Frame, NULL_EVENT_TOL};
use crate::error::{Error, Result};
use crate::exterior::{binomial, combo_rank, Combinations, IndexCombo};
use serde::Serialize;
use std::fmt::Write as _;

pub const DEFAULT_ENUMERATION_CAP: usize = 5_000_000;

/// Probabilities of every `p`-subset of `{1..n}`, stored in lexicographic
/// order. Conditional tables keep the same index set with zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessDistribution {
    n: usize,
    p: usize,
    probs: Vec<f64>,
}

impl ProcessDistribution {
    /// Builds a table from explicit entries; unlisted subsets get probability 0.
    pub fn from_entries(n: usize, p: usize, entries: &[(IndexCombo, f64)]) -> Result<Self> {
        let len = binomial(n, p) as usize;
        let mut probs = vec![0.0; len];
        for (s, v) in entries {
            if s.len() != p {
                return Err(Error::CardinalityMismatch { expected: p, got: s.len() });
            }
            s.check_within(n)?;
            probs[combo_rank(n, s.as_slice())] = clamp_probability(*v)?;
        }
        let d = Self { n, p, probs };
        d.check_normalized()?;
        Ok(d)
    }

    fn check_normalized(&self) -> Result<()> {
        let total = self.total();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(total));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `P(φ = S)`.
    pub fn get(&self, s: &IndexCombo) -> f64 {
        if s.len() != self.p || s.max().is_some_and(|m| m > self.n) {
            return 0.0;
        }
        self.probs[combo_rank(self.n, s.as_slice())]
    }

    /// All subsets with their probabilities, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (IndexCombo, f64)> + '_ {
        Combinations::new(self.n, self.p).zip(self.probs.iter().copied())
    }

    /// Subsets with positive probability.
    pub fn support(&self) -> Vec<(IndexCombo, f64)> {
        self.iter().filter(|(_, v)| *v > 0.0).collect()
    }

    /// Probability of the event described by `pred`.
    pub fn event_prob(&self, pred: impl Fn(&[usize]) -> bool) -> f64 {
        self.iter().filter(|(s, _)| pred(s.as_slice())).map(|(_, v)| v).sum()
    }

    /// `P(S ⊂ φ)`.
    pub fn inclusion(&self, s: &IndexCombo) -> f64 {
        if s.len() > self.p {
            return 0.0;
        }
        self.event_prob(|t| s.is_subset_of(t))
    }

    /// `P(i ∈ φ)` for `i = 1..n`.
    pub fn marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (s, v) in self.iter() {
            for i in s.iter() {
                m[i - 1] += v;
            }
        }
        m
    }

    /// Restriction to `pred`, renormalised. Returns the conditional table and
    /// the probability of the conditioning event.
    pub fn condition(&self, pred: impl Fn(&[usize]) -> bool) -> Result<(Self, f64)> {
        let mut probs = vec![0.0; self.probs.len()];
        let mut mass = 0.0;
        for (r, (s, v)) in self.iter().enumerate() {
            if pred(s.as_slice()) {
                probs[r] = v;
                mass += v;
            }
        }
        if mass < NULL_EVENT_TOL {
            return Err(Error::NullConditioning(mass));
        }
        probs.iter_mut().for_each(|v| *v /= mass);
        Ok((Self { n: self.n, p: self.p, probs }, mass))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.n != other.n || self.p != other.p {
            return f64::INFINITY;
        }
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `subset,prob`, one row per subset of positive mass.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subset,prob\n");
        for (s, v) in self.support() {
            let _ = writeln!(out, "{s},{v}");
        }
        out
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.probs
    }
}

/// Serialises as a list of `{subset, prob}` records over the support.
impl Serialize for ProcessDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            subset: String,
            prob: f64,
        }
        let entries: Vec<Entry> =
            self.support().into_iter().map(|(s, prob)| Entry { subset: s.to_string(), prob }).collect();
        entries.serialize(serializer)
    }
}

pub fn enumerate_distribution(f: &Frame) -> Result<ProcessDistribution> {
    enumerate_distribution_capped(f, DEFAULT_ENUMERATION_CAP)
}

/// Full table of `det(Z[:,S])²` over the `C(n,p)` subsets, refusing when that
/// count exceeds `cap`.
pub fn enumerate_distribution_capped(f: &Frame, cap: usize) -> Result<ProcessDistribution> {
    let count = binomial(f.n(), f.p());
    if count > cap as u128 {
        return Err(Error::EnumerationCap { n: f.n(), p: f.p(), count, cap });
    }
    let probs = Combinations::new(f.n(), f.p())
        .map(|s| elementary_prob(f, &s))
        .collect::<Result<Vec<_>>>()?;
    let d = ProcessDistribution { n: f.n(), p: f.p(), probs };
    d.check_normalized()?;
    Ok(d)
}

/// Law of `ψ = (φ | A_i ⊄ φ for all i)`, by renormalising the oracle table.
pub fn condition_not_superset(f: &Frame, sets: &[IndexCombo]) -> Result<ProcessDistribution> {
    for s in sets {
        s.check_within(f.n())?;
    }
    let d = enumerate_distribution(f)?;
    Ok(d.condition(|t| sets.iter().all(|a| !a.is_subset_of(t)))?.0)
}

/// Outcome of the rank-two proportionality test.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Rank2Verdict {
    /// Two third points give different shares, so no determinantal process
    /// with `p = 2` has this law.
    NotDeterminantal { pair: (usize, usize), first: (usize, f64), second: (usize, f64) },
    /// Every zero pair with positive marginals had consistent shares.
    Inconclusive { pairs_tested: usize },
    Inapplicable { reason: String },
}

const ZERO_TOL: f64 = 1e-12;
const SHARE_TOL: f64 = 1e-9;

/// For a determinantal law with `p = 2`, a pair `{i,j}` with `P(φ={i,j}) = 0`
/// and positive marginals forces `z_i = α z_j`, hence
/// `P(φ={i,k}) = α² P(φ={j,k})` for every other `k`. Equivalently the share
/// `P({i,k}) / (P({i,k}) + P({j,k}))` is the same for all `k` where it is
/// defined. A conflict certifies that the law is not determinantal.
pub fn is_rank2_determinantal_certificate(d: &ProcessDistribution) -> Rank2Verdict {
    if d.p() != 2 {
        return Rank2Verdict::Inapplicable { reason: format!("cardinality {} is not 2", d.p()) };
    }
    let n = d.n();
    let marg = d.marginals();
    let pair = |a: usize, b: usize| d.get(&IndexCombo::from_unsorted(vec![a, b]).expect("distinct indices"));
    let mut tested = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            if pair(i, j) > ZERO_TOL || marg[i - 1] <= ZERO_TOL || marg[j - 1] <= ZERO_TOL {
                continue;
            }
            tested += 1;
            let mut first: Option<(usize, f64)> = None;
            for k in (1..=n).filter(|&k| k != i && k != j) {
                let (dik, djk) = (pair(i, k), pair(j, k));
                if dik + djk <= ZERO_TOL {
                    continue;
                }
                let share = dik / (dik + djk);
                match first {
                    None => first = Some((k, share)),
                    Some((k0, s0)) if (share - s0).abs() > SHARE_TOL => {
                        return Rank2Verdict::NotDeterminantal {
                            pair: (i, j),
                            first: (k0, s0),
                            second: (k, share),
                        };
                    }
                    Some(_) => {}
                }
            }
        }
    }
    if tested == 0 {
        return Rank2Verdict::Inapplicable {
            reason: "no zero pair with positive marginals".into(),
        };
    }
    Rank2Verdict::Inconclusive { pairs_tested: tested }
}
