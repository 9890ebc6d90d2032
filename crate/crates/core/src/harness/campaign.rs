use super::generate::{
    canonical_n1_frame_with, free_points, generate_case, random_angles, random_frame_with, CaseInstance, DimLimits,
};
use super::rng::instance_rng;
use crate::cs::CaseTag;
use crate::dpp::Frame;
use crate::error::{Error, Result};
use crate::exterior::IndexCombo;
use crate::identities::{self, InstanceDescriptor, Tolerance, Verdict, VerificationReport};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Every identity a campaign can run.
pub const IDENTITY_IDS: &[&str] = &[
    "oracle",
    "theorem1",
    "theorem1-n1",
    "theorem1-n2",
    "reduction",
    "remark1",
    "n1-identity",
    "n1-canonical",
    "chain-2",
    "chain-3",
    "chain-4",
    "theorem4-equal",
    "theorem4-unequal",
    "restricted",
    "appendix-M",
    "appendix-M3",
    "structural",
    "lemma3",
    "inequality-I2",
    "degenerate",
];

/// Environment variable that overrides the worker count.
pub const THREADS_ENV: &str = "DPP_VERIFY_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seed: u64,
    pub n_instances: u64,
    pub identities: Vec<String>,
    #[serde(default)]
    pub dims: DimLimits,
    /// Per-check-name overrides; `"*"` applies to every check.
    #[serde(default)]
    pub tolerances: BTreeMap<String, Tolerance>,
    /// `None` uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_skip_ratio")]
    pub max_skip_ratio: f64,
    #[serde(default = "default_failures_kept")]
    pub max_failures_kept: usize,
}

fn default_skip_ratio() -> f64 {
    0.2
}

fn default_failures_kept() -> usize {
    20
}

impl CampaignConfig {
    pub fn new(seed: u64, n_instances: u64, identities: &[&str]) -> Self {
        Self {
            seed,
            n_instances,
            identities: identities.iter().map(|s| s.to_string()).collect(),
            dims: DimLimits::default(),
            tolerances: BTreeMap::new(),
            workers: None,
            max_skip_ratio: default_skip_ratio(),
            max_failures_kept: default_failures_kept(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self.identities.iter().find(|id| !IDENTITY_IDS.contains(&id.as_str())) {
            return Err(Error::UnknownIdentity(id.clone()));
        }
        if self.dims.n_max < 3 || self.dims.p_max < 2 || self.dims.n_max > 16 {
            return Err(Error::Config(format!("dims {:?} outside 3 <= n_max <= 16, p_max >= 2", self.dims)));
        }
        if !(0.0..=1.0).contains(&self.max_skip_ratio) {
            return Err(Error::Config(format!("max_skip_ratio {} not in [0, 1]", self.max_skip_ratio)));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub seed: u64,
    pub index: u64,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityStats {
    pub pass: u64,
    pub fail: u64,
    pub skip: u64,
    /// Absolute gap of the check with the largest gap-to-allowance ratio.
    pub worst_gap: f64,
    pub worst_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_check: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_instance: Option<InstanceDescriptor>,
    pub skip_ratio: f64,
    pub skip_ratio_exceeded: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureRecord>,
}

impl IdentityStats {
    fn empty() -> Self {
        Self {
            pass: 0,
            fail: 0,
            skip: 0,
            worst_gap: 0.0,
            worst_score: 0.0,
            worst_check: None,
            worst_instance: None,
            skip_ratio: 0.0,
            skip_ratio_exceeded: false,
            failures: Vec::new(),
        }
    }

    fn add(&mut self, r: &VerificationReport, keep: usize) {
        match r.verdict {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail => self.fail += 1,
            Verdict::Skip => {
                self.skip += 1;
                return;
            }
        }
        if let Some(c) = r.worst_check() {
            let score = c.score();
            if score > self.worst_score || self.worst_check.is_none() {
                self.worst_score = score;
                self.worst_gap = c.abs_gap;
                self.worst_check = Some(c.name.clone());
                self.worst_instance = Some(r.instance.clone());
            }
        }
        if r.verdict == Verdict::Fail && self.failures.len() < keep {
            let (check, lhs, rhs, abs_gap) = match r.failed_checks().next() {
                Some(c) => (c.name.clone(), c.lhs, c.rhs, c.abs_gap),
                None => (r.diagnostics.join("; "), 0.0, 0.0, 0.0),
            };
            self.failures.push(FailureRecord {
                seed: r.instance.seed.unwrap_or_default(),
                index: r.instance.index.unwrap_or_default(),
                check,
                lhs,
                rhs,
                abs_gap,
            });
        }
    }

    pub fn total(&self) -> u64 {
        self.pass + self.fail + self.skip
    }
}

/// `identity id -> stats`, serialised as a plain JSON object.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CampaignResult(pub BTreeMap<String, IdentityStats>);

impl CampaignResult {
    pub fn get(&self, id: &str) -> Option<&IdentityStats> {
        self.0.get(id)
    }

    pub fn total_failures(&self) -> u64 {
        self.0.values().map(|s| s.fail).sum()
    }

    /// No failures and every skip ratio within bounds.
    pub fn is_clean(&self) -> bool {
        self.0.values().all(|s| s.fail == 0 && !s.skip_ratio_exceeded)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialise")
    }
}

fn worker_count(cfg: &CampaignConfig) -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        };
    }
    Ok(cfg.workers.unwrap_or(0))
}

/// Runs every selected identity on `n_instances` generated instances. The
/// result depends only on the configuration, not on the worker count.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(cfg)?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut out = BTreeMap::new();
    for id in &cfg.identities {
        let reports: Vec<VerificationReport> = pool.install(|| {
            (0..cfg.n_instances)
                .into_par_iter()
                .map(|i| run_instance(id, cfg.seed, i, cfg.dims, &cfg.tolerances))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut stats = IdentityStats::empty();
        for r in &reports {
            stats.add(r, cfg.max_failures_kept);
        }
        let total = stats.total();
        stats.skip_ratio = if total > 0 { stats.skip as f64 / total as f64 } else { 0.0 };
        stats.skip_ratio_exceeded = stats.skip_ratio > cfg.max_skip_ratio;
        out.insert(id.clone(), stats);
    }
    Ok(CampaignResult(out))
}

/// Regenerates and verifies instance `index` of identity `id` under `seed`.
pub fn run_instance(
    id: &str,
    seed: u64,
    index: u64,
    dims: DimLimits,
    tolerances: &BTreeMap<String, Tolerance>,
) -> Result<VerificationReport> {
    if !IDENTITY_IDS.contains(&id) {
        return Err(Error::UnknownIdentity(id.to_string()));
    }
    let mut rng = instance_rng(seed, index, id);
    let mut report = match dispatch(id, index, &mut rng, dims) {
        Ok(r) => r,
        Err(e) if e.is_skip() => VerificationReport::skipped(id, InstanceDescriptor::default(), e.to_string()),
        Err(e) => {
            let mut r = VerificationReport::skipped(id, InstanceDescriptor::default(), e.to_string());
            r.verdict = Verdict::Fail;
            r
        }
    };
    report.identity_id = id.to_string();
    report.instance.seed = Some(seed);
    report.instance.index = Some(index);
    report.apply_overrides(tolerances);
    Ok(report)
}

fn dims(rng: &mut ChaCha8Rng, lim: DimLimits, p_lo: usize, p_hi: usize, extra: usize) -> Result<(usize, usize)> {
    let p_hi = p_hi.min(lim.p_max).min(lim.n_max.saturating_sub(extra));
    if p_lo > p_hi {
        return Err(Error::Precondition(format!("limits {lim:?} admit no p in {p_lo}..")));
    }
    let p = rng.random_range(p_lo..=p_hi);
    let n = rng.random_range(p + extra..=lim.n_max);
    Ok((p, n))
}

fn combo(points: &[usize]) -> Result<IndexCombo> {
    IndexCombo::from_unsorted(points.to_vec())
}

fn frame_and_points(rng: &mut ChaCha8Rng, p: usize, n: usize) -> Result<(Frame, Vec<usize>)> {
    let f = random_frame_with(rng, n, p)?;
    let mut pts: Vec<usize> = (1..=n).collect();
    pts.shuffle(rng);
    Ok((f, pts))
}

fn theorem1_one_set(rng: &mut ChaCha8Rng, lim: DimLimits) -> Result<VerificationReport> {
    let (p, n) = dims(rng, lim, 2, 5, 2)?;
    let (f, pts) = frame_and_points(rng, p, n)?;
    let k = rng.random_range(1..=p.min(n - 2));
    let b1 = rng.random_range(1..=2.min(n - k - 1));
    let b2 = rng.random_range(1..=2.min(n - k - b1));
    let a = combo(&pts[..k])?;
    identities::verify_theorem1(&f, &combo(&pts[k..k + b1])?, &combo(&pts[k + b1..k + b1 + b2])?, &[a])
}

fn theorem1_two_sets(rng: &mut ChaCha8Rng, lim: DimLimits, tag: CaseTag) -> Result<VerificationReport> {
    let c = generate_case(rng, tag, lim)?;
    let used: Vec<usize> = c.a1.iter().chain(c.a2.iter()).chain([c.x, c.xp]).collect();
    let mut b1 = vec![c.x];
    if rng.random_bool(0.5) {
        b1.extend(free_points(rng, c.frame.n(), &used, 1).unwrap_or_default());
    }
    let mut r = identities::verify_theorem1(&c.frame, &combo(&b1)?, &IndexCombo::singleton(c.xp), &[c.a1, c.a2])?;
    r.instance.case = Some(tag);
    Ok(r)
}

fn case(rng: &mut ChaCha8Rng, tag: CaseTag, lim: DimLimits) -> Result<CaseInstance> {
    generate_case(rng, tag, lim)
}

fn dispatch(id: &str, index: u64, rng: &mut ChaCha8Rng, lim: DimLimits) -> Result<VerificationReport> {
    let tag_cycle = |i: u64| CaseTag::ALL[(i % 5) as usize];
    match id {
        "oracle" => {
            let (p, n) = dims(rng, lim, 2, 5, 1)?;
            identities::verify_oracle(&random_frame_with(rng, n, p)?)
        }
        "theorem1" if index % 2 == 0 => theorem1_one_set(rng, lim),
        "theorem1" => theorem1_two_sets(rng, lim, tag_cycle(index / 2)),
        "theorem1-n1" => theorem1_one_set(rng, lim),
        "theorem1-n2" => theorem1_two_sets(rng, lim, tag_cycle(index)),
        "reduction" => {
            let (p, n) = dims(rng, lim, 2, 4, 3)?;
            let n = n.max(7.min(lim.n_max));
            let (f, pts) = frame_and_points(rng, p, n)?;
            let n_sets = if n >= 7 { rng.random_range(1..=2) } else { 1 };
            let mut at = 0;
            let mut sets = Vec::new();
            for _ in 0..n_sets {
                let k = rng.random_range(1..=2.min(n - at - 3));
                sets.push(combo(&pts[at..at + k])?);
                at += k;
            }
            let (y, b1, b2) = (pts[at], pts[at + 1], pts[at + 2]);
            identities::verify_reduction_step(&f, y, &IndexCombo::singleton(b1), &IndexCombo::singleton(b2), &sets)
        }
        "remark1" => {
            let (p, n) = dims(rng, lim, 2, 5, 2)?;
            let (f, pts) = frame_and_points(rng, p, n)?;
            identities::verify_remark1(&f, &combo(&pts[..p])?, pts[p], pts[p + 1])
        }
        "n1-identity" => {
            let (p, n) = dims(rng, lim, 2, 5, 2)?;
            let (f, pts) = frame_and_points(rng, p, n)?;
            let k = rng.random_range(1..p);
            identities::verify_n1_identity(&f, &combo(&pts[..k])?, pts[k], pts[k + 1])
        }
        "n1-canonical" => {
            let p_hi = 5.min(lim.p_max).min(lim.n_max.saturating_sub(2));
            if p_hi < 2 {
                return Err(Error::Precondition(format!("limits {lim:?} too small")));
            }
            let p = rng.random_range(2..=p_hi);
            let k_hi = (p - 1).min(lim.n_max - p);
            let k = rng.random_range(1..=k_hi.max(1));
            let n = rng.random_range((p + k).max(k + 2).max(p + 1)..=lim.n_max);
            let (f, thetas) = canonical_n1_frame_with(rng, n, p, k)?;
            identities::verify_n1_canonical(&f, k, &thetas)
        }
        "chain-2" | "chain-3" | "chain-4" => {
            let m: usize = id[6..].parse().expect("chain length");
            // the m - 2 middle points can only all be missed when N - p >= m - 2
            let (p, n) = dims(rng, lim, m, 5, m - 1)?;
            identities::verify_chain_formula(&random_frame_with(rng, n, p)?, m)
        }
        "theorem4-equal" => {
            let c = case(rng, CaseTag::EqualFull, lim)?;
            Ok(identities::verify_n2_equal(&c.frame, &c.a1, &c.a2, c.x, c.xp)?.into_report())
        }
        "theorem4-unequal" => {
            let c = case(rng, CaseTag::UnequalFull, lim)?;
            Ok(identities::verify_n2_unequal(&c.frame, &c.a1, &c.a2, c.x, c.xp)?.into_report())
        }
        "restricted" => {
            let c = case(rng, CaseTag::Restricted, lim)?;
            identities::verify_restricted(&c.frame, &c.a1, &c.a2, c.x, c.xp)
        }
        "appendix-M" => identities::verify_appendix(&random_angles(rng, 3 + (index % 6) as usize)),
        "appendix-M3" => identities::verify_appendix(&random_angles(rng, 3)),
        "structural" => {
            let c = case(rng, CaseTag::EqualFull, lim)?;
            identities::verify_structural(&c.frame, &c.a1, &c.a2, c.x, c.xp)
        }
        "lemma3" => {
            let tag = [CaseTag::EqualFull, CaseTag::UnequalFull, CaseTag::Restricted][(index % 3) as usize];
            let c = case(rng, tag, lim)?;
            identities::verify_lemma3(&c.frame, &c.a1, &c.a2)
        }
        "inequality-I2" => {
            let (p, n) = dims(rng, lim, 2, 5, 1)?;
            let (f, pts) = frame_and_points(rng, p, n)?;
            let ka = rng.random_range(1..=2.min(n - 1));
            let kb = rng.random_range(1..=2.min(n - ka));
            identities::verify_inequality_i2(&f, &combo(&pts[..ka])?, &combo(&pts[ka..ka + kb])?)
        }
        "degenerate" => {
            let c = case(rng, CaseTag::Degenerate, lim)?;
            identities::verify_degenerate(&c.frame, &c.a1, &c.a2, c.x, c.xp)
        }
        other => Err(Error::UnknownIdentity(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_identity_runs_clean() {
        let cfg = CampaignConfig::new(11, 30, IDENTITY_IDS);
        let r = run_campaign(&cfg).unwrap();
        for (id, s) in &r.0 {
            assert_eq!(s.total(), 30, "{id}");
            assert_eq!(s.fail, 0, "{id}: {:?}", s.failures);
            assert!(!s.skip_ratio_exceeded, "{id}: skip ratio {}", s.skip_ratio);
        }
    }

    #[test]
    fn empty_campaign_is_valid() {
        let r = run_campaign(&CampaignConfig::new(1, 0, &["theorem1"])).unwrap();
        assert_eq!(r.get("theorem1").unwrap().total(), 0);
        assert_eq!(r.to_json().contains("\"pass\": 0"), true);
    }

    #[test]
    fn unknown_identity_is_rejected() {
        assert!(matches!(run_campaign(&CampaignConfig::new(1, 1, &["nosuch"])), Err(Error::UnknownIdentity(_))));
    }

    #[test]
    fn result_independent_of_workers() {
        let mut cfg = CampaignConfig::new(5, 40, &["theorem1", "theorem4-equal"]);
        cfg.workers = Some(1);
        let one = run_campaign(&cfg).unwrap().to_json();
        cfg.workers = Some(4);
        assert_eq!(one, run_campaign(&cfg).unwrap().to_json());
    }
}
