//! Verifiers for the correlation identities and inequalities. Each verifier
//! evaluates one side from raw probabilities (enumeration table or kernel
//! determinants) and the other from geometric quantities, and returns a
//! [`VerificationReport`] holding every intermediate check.

mod basic;
mod matrices;
mod n1;
mod n2;
mod restricted;

pub use basic::{
    counterexample, verify_chain_formula, verify_degenerate, verify_inequality_i2, verify_lemma3, verify_oracle,
    verify_reduction_step, verify_remark1, verify_theorem1, Counterexample,
};
pub use matrices::{
    block_order, build_m, build_matrices, compound_blocks, det_m3_closed_form, c_closed_form,
    verify_appendix, BlockMatrices,
};
pub use n1::{verify_n1_canonical, verify_n1_identity};
pub use n2::{verify_n2, verify_n2_equal, verify_n2_unequal, verify_structural, N2Certificate};
pub use restricted::verify_restricted;

use crate::cs::CaseTag;
use crate::dpp::ProcessDistribution;
use crate::exterior::IndexCombo;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Mixed tolerance: `|lhs - rhs| <= max(abs, rel * max(|lhs|, |rhs|))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    /// Default for identities between probability-scale quantities.
    pub const IDENTITY: Tolerance = Tolerance::new(1e-10, 1e-8);
}

/// Slack granted to inequalities of the form `value >= bound`.
pub const INEQUALITY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckKind {
    Equality { abs: f64, rel: f64 },
    /// `lhs >= rhs - slack`.
    AtLeast { slack: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Distance for equalities; amount of violation for inequalities.
    pub abs_gap: f64,
    pub rel_gap: f64,
    #[serde(flatten)]
    pub kind: CheckKind,
    pub pass: bool,
}

impl Check {
    fn build(name: &str, lhs: f64, rhs: f64, kind: CheckKind) -> Self {
        let mut c = Self { name: name.to_string(), lhs, rhs, abs_gap: 0.0, rel_gap: 0.0, kind, pass: false };
        c.evaluate();
        c
    }

    pub fn equality(name: &str, lhs: f64, rhs: f64, tol: Tolerance) -> Self {
        Self::build(name, lhs, rhs, CheckKind::Equality { abs: tol.abs, rel: tol.rel })
    }

    pub fn at_least(name: &str, value: f64, bound: f64, slack: f64) -> Self {
        Self::build(name, value, bound, CheckKind::AtLeast { slack })
    }

    pub fn nonnegative(name: &str, value: f64) -> Self {
        Self::at_least(name, value, 0.0, INEQUALITY_SLACK)
    }

    pub fn scale(&self) -> f64 {
        self.lhs.abs().max(self.rhs.abs())
    }

    /// Largest admissible gap for this check.
    pub fn allowance(&self) -> f64 {
        match self.kind {
            CheckKind::Equality { abs, rel } => abs.max(rel * self.scale()),
            CheckKind::AtLeast { slack } => slack,
        }
    }

    /// `abs_gap / allowance`; values above 1 fail.
    pub fn score(&self) -> f64 {
        if !self.pass && !self.abs_gap.is_finite() {
            return f64::INFINITY;
        }
        let a = self.allowance();
        if a > 0.0 {
            self.abs_gap / a
        } else if self.abs_gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn evaluate(&mut self) {
        let finite = self.lhs.is_finite() && self.rhs.is_finite();
        self.abs_gap = match self.kind {
            CheckKind::Equality { .. } => (self.lhs - self.rhs).abs(),
            CheckKind::AtLeast { .. } => (self.rhs - self.lhs).max(0.0),
        };
        if !finite {
            self.abs_gap = f64::INFINITY;
        }
        let scale = self.scale();
        self.rel_gap = if scale > 0.0 { self.abs_gap / scale } else { 0.0 };
        self.pass = finite && self.abs_gap <= self.allowance();
    }

    /// Re-evaluates under a different tolerance. For inequalities the
    /// absolute part is used as the slack.
    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.kind = match self.kind {
            CheckKind::Equality { .. } => CheckKind::Equality { abs: tol.abs, rel: tol.rel },
            CheckKind::AtLeast { .. } => CheckKind::AtLeast { slack: tol.abs },
        };
        self.evaluate();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        })
    }
}

/// Where an instance came from and what it was built of.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InstanceDescriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    pub n: usize,
    pub p: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub sets: BTreeMap<String, IndexCombo>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub points: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
}

impl InstanceDescriptor {
    pub fn new(n: usize, p: usize) -> Self {
        Self { n, p, ..Self::default() }
    }

    pub fn set(mut self, name: &str, s: &IndexCombo) -> Self {
        self.sets.insert(name.to_string(), s.clone());
        self
    }

    pub fn sets_indexed(mut self, prefix: &str, sets: &[IndexCombo]) -> Self {
        for (i, s) in sets.iter().enumerate() {
            self.sets.insert(format!("{prefix}{}", i + 1), s.clone());
        }
        self
    }

    pub fn point(mut self, name: &str, i: usize) -> Self {
        self.points.insert(name.to_string(), i);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity_id: String,
    pub instance: InstanceDescriptor,
    /// Sides of the headline (first) check.
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl VerificationReport {
    pub fn new(identity_id: &str, instance: InstanceDescriptor, checks: Vec<Check>) -> Self {
        let mut r = Self {
            identity_id: identity_id.to_string(),
            instance,
            lhs: f64::NAN,
            rhs: f64::NAN,
            abs_gap: f64::NAN,
            rel_gap: f64::NAN,
            verdict: Verdict::Pass,
            checks,
            values: BTreeMap::new(),
            diagnostics: Vec::new(),
        };
        r.refresh();
        r
    }

    pub fn skipped(identity_id: &str, instance: InstanceDescriptor, reason: String) -> Self {
        let mut r = Self::new(identity_id, instance, Vec::new());
        r.verdict = Verdict::Skip;
        r.diagnostics.push(reason);
        r
    }

    pub fn with_value(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.diagnostics.push(note.into());
        self
    }

    fn refresh(&mut self) {
        if self.verdict == Verdict::Skip {
            return;
        }
        if let Some(h) = self.checks.first() {
            self.lhs = h.lhs;
            self.rhs = h.rhs;
            self.abs_gap = h.abs_gap;
            self.rel_gap = h.rel_gap;
        }
        self.verdict = if self.checks.iter().all(|c| c.pass) { Verdict::Pass } else { Verdict::Fail };
    }

    /// Replaces the tolerance of every check whose name has an override.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, Tolerance>) {
        if overrides.is_empty() || self.verdict == Verdict::Skip {
            return;
        }
        self.checks = std::mem::take(&mut self.checks)
            .into_iter()
            .map(|c| match overrides.get(&c.name).or_else(|| overrides.get("*")) {
                Some(t) => c.with_tolerance(*t),
                None => c,
            })
            .collect();
        self.refresh();
    }

    /// The check with the largest gap relative to its allowance.
    pub fn worst_check(&self) -> Option<&Check> {
        self.checks.iter().max_by(|a, b| a.score().total_cmp(&b.score()))
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Whether a realised subset avoids containing every set in `sets`.
pub(crate) fn avoids_all(s: &[usize], sets: &[IndexCombo]) -> bool {
    sets.iter().all(|a| !a.is_subset_of(s))
}

/// `P(S ⊂ φ, A_i ⊄ φ ∀i)` summed off the enumeration table.
pub(crate) fn table_prob(d: &ProcessDistribution, include: &IndexCombo, sets: &[IndexCombo]) -> f64 {
    d.event_prob(|s| include.is_subset_of(s) && avoids_all(s, sets))
}

/// The check with the largest score among `checks`, renamed to `name`; a
/// trivially passing equality when `checks` is empty.
pub(crate) fn worst_of(name: &str, checks: impl IntoIterator<Item = Check>) -> Check {
    let mut worst = Check::equality(name, 0.0, 0.0, abs_tol(0.0));
    let mut score = f64::NEG_INFINITY;
    for c in checks {
        let sc = c.score();
        if sc > score {
            score = sc;
            worst = c;
        }
    }
    worst.name = name.to_string();
    worst
}

/// `(abs, rel)` for a headline identity with an absolute bound only.
pub(crate) const fn abs_tol(abs: f64) -> Tolerance {
    Tolerance::absolute(abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_uses_mixed_tolerance() {
        let c = Check::equality("x", 1e6, 1e6 + 1e-3, Tolerance::IDENTITY);
        assert!(c.pass);
        let c = Check::equality("x", 1.0, 1.0 + 1e-7, Tolerance::IDENTITY);
        assert!(!c.pass);
        assert!(c.score() > 1.0);
    }

    #[test]
    fn inequality_reports_violation() {
        let ok = Check::nonnegative("g", -5e-11);
        assert!(ok.pass);
        let bad = Check::nonnegative("g", -1e-9);
        assert!(!bad.pass);
        assert!((bad.abs_gap - 1e-9).abs() < 1e-20);
        assert!(Check::nonnegative("g", 3.0).abs_gap == 0.0);
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::equality("n", f64::NAN, 0.0, Tolerance::IDENTITY).pass);
        assert!(!Check::nonnegative("n", f64::NAN).pass);
    }

    #[test]
    fn overrides_change_verdict() {
        let checks = vec![Check::equality("a", 1.0, 1.0 + 1e-7, Tolerance::IDENTITY)];
        let mut r = VerificationReport::new("t", InstanceDescriptor::new(3, 1), checks);
        assert_eq!(r.verdict, Verdict::Fail);
        let mut o = BTreeMap::new();
        o.insert("a".to_string(), Tolerance::new(1e-6, 0.0));
        r.apply_overrides(&o);
        assert_eq!(r.verdict, Verdict::Pass);
    }
}
