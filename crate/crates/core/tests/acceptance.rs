//! One line per acceptance criterion. Runs as a plain binary (`harness = false`)
//! so the lines are printed whether or not a criterion fails.

use dppcheck::dpp::Rank2Verdict;
use dppcheck::harness::{run_campaign, run_instance, CampaignConfig, DimLimits, IdentityStats, IDENTITY_IDS};
use dppcheck::identities::{counterexample, verify_appendix, Verdict, VerificationReport};
use dppcheck::IndexCombo;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

type Outcome = Result<String, String>;

fn campaign(id: &str, seed: u64, n: u64, dims: DimLimits) -> IdentityStats {
    let mut cfg = CampaignConfig::new(seed, n, &[id]);
    cfg.dims = dims;
    run_campaign(&cfg).expect("campaign runs").get(id).expect("stats present").clone()
}

fn clean(id: &str, s: &IdentityStats, max_skip: f64) -> Result<(), String> {
    if s.fail > 0 {
        let first = s.failures.first().map(|f| format!(" (index {} {} gap {:e})", f.index, f.check, f.abs_gap));
        return Err(format!("{id}: {} failures{}", s.fail, first.unwrap_or_default()));
    }
    if s.skip_ratio >= max_skip {
        return Err(format!("{id}: skip ratio {:.3} >= {max_skip}", s.skip_ratio));
    }
    Ok(())
}

fn summary(id: &str, s: &IdentityStats) -> String {
    format!("{id} {}/{} pass, {} skip, worst gap {:.1e}", s.pass, s.total(), s.skip, s.worst_gap)
}

fn replay(id: &str, seed: u64, index: u64) -> VerificationReport {
    run_instance(id, seed, index, DimLimits::default(), &BTreeMap::new()).expect("replay runs")
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let s = campaign("oracle", 101, 500, DimLimits { n_max: 10, p_max: 5 });
    let secs = start.elapsed().as_secs_f64();
    clean("oracle", &s, 1e-9)?;
    if secs >= 60.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("{} in {secs:.1} s", summary("oracle", &s)))
}

fn counterexample_reproduction() -> Outcome {
    let c = counterexample().map_err(|e| e.to_string())?;
    if (c.kappa - 0.75).abs() > 1e-15 {
        return Err(format!("kappa = {}", c.kappa));
    }
    let want: Vec<IndexCombo> =
        [[1, 4], [2, 3], [3, 4]].iter().map(|s| IndexCombo::new(s.to_vec()).expect("sorted")).collect();
    let got: Vec<IndexCombo> = c.conditional_law.iter().map(|(s, _)| s.clone()).collect();
    if got != want {
        return Err(format!("support {got:?}"));
    }
    let worst = c.conditional_law.iter().map(|(_, p)| (p - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(format!("law off uniform by {worst:e}"));
    }
    match c.certificate {
        Rank2Verdict::NotDeterminantal { pair: (1, 2), first: (3, r3), second: (4, r4) }
            if r3.abs() < 1e-12 && (r4 - 1.0).abs() < 1e-12 && c.not_determinantal =>
        {
            Ok(format!("kappa {}, law uniform within {worst:.1e}, share 0 at k=3 vs 1 at k=4", c.kappa))
        }
        other => Err(format!("certificate {other:?}")),
    }
}

fn theorem1_small_n() -> Outcome {
    let mut lines = Vec::new();
    for id in ["theorem1-n1", "theorem1-n2"] {
        let s = campaign(id, 103, 10_000, DimLimits::default());
        clean(id, &s, 0.2)?;
        lines.push(summary(id, &s));
    }
    let tags: BTreeSet<_> = (0..20).filter_map(|i| replay("theorem1-n2", 103, i).instance.case).collect();
    if tags.len() != 5 {
        return Err(format!("two-set instances cover only {tags:?}"));
    }
    Ok(format!("{}; all 5 case tags drawn", lines.join("; ")))
}

fn canonical_split_identity() -> Outcome {
    let mut lines = Vec::new();
    for id in ["n1-identity", "n1-canonical"] {
        let s = campaign(id, 104, 1000, DimLimits::default());
        clean(id, &s, 0.2)?;
        lines.push(summary(id, &s));
    }
    for i in 0..50 {
        let r = replay("n1-identity", 104, i);
        if r.verdict == Verdict::Skip {
            continue;
        }
        for name in ["square_component", "wedge_component"] {
            if r.check(name).is_none() {
                return Err(format!("index {i} lacks {name}"));
            }
        }
    }
    Ok(lines.join("; "))
}

fn chain_formula() -> Outcome {
    let mut lines = Vec::new();
    for id in ["chain-2", "chain-3", "chain-4"] {
        let s = campaign(id, 105, 500, DimLimits::default());
        clean(id, &s, 0.2)?;
        lines.push(summary(id, &s));
    }
    Ok(lines.join("; "))
}

fn theorem4_decomposition() -> Outcome {
    let mut lines = Vec::new();
    for id in ["theorem4-equal", "theorem4-unequal"] {
        let s = campaign(id, 106, 1000, DimLimits::default());
        clean(id, &s, 0.2)?;
        lines.push(summary(id, &s));
    }
    let (mut k2, mut worst_sq, mut min_lambda) = (0, 0.0f64, f64::INFINITY);
    for i in 0..1000 {
        let r = replay("theorem4-equal", 106, i);
        if r.verdict == Verdict::Skip {
            continue;
        }
        if let Some(c) = r.check("two_squares_vs_quadratic_form") {
            k2 += 1;
            worst_sq = worst_sq.max(c.abs_gap);
        }
        min_lambda = min_lambda.min(r.values["lambda"]);
    }
    if k2 == 0 || worst_sq > 1e-9 || min_lambda < -1e-10 {
        return Err(format!("k=2 instances {k2}, worst square-form gap {worst_sq:e}, min lambda {min_lambda:e}"));
    }
    Ok(format!("{}; {k2} k=2 instances, square-form gap {worst_sq:.1e}, min lambda {min_lambda:.1e}", lines.join("; ")))
}

fn restricted_case() -> Outcome {
    let s = campaign("restricted", 107, 500, DimLimits::default());
    clean("restricted", &s, 0.2)?;
    for i in 0..50 {
        let r = replay("restricted", 107, i);
        if let Some(v) = r.values.get("chi") {
            if *v >= r.instance.p as f64 {
                return Err(format!("index {i} has chi = p"));
            }
        }
    }
    Ok(summary("restricted", &s))
}

fn appendix_positivity() -> Outcome {
    let r = verify_appendix(&[FRAC_PI_4; 3]).map_err(|e| e.to_string())?;
    let det = r.values["det"];
    if (det - 7.0 / 64.0).abs() > 1e-12 || r.verdict != Verdict::Pass {
        return Err(format!("det at π/4 = {det}"));
    }
    let s3 = campaign("appendix-M3", 108, 1000, DimLimits::default());
    clean("appendix-M3", &s3, 1e-9)?;
    // k cycles through 3..=8, so 6000 instances give 1000 per k
    let sk = campaign("appendix-M", 108, 6000, DimLimits::default());
    clean("appendix-M", &sk, 1e-9)?;
    Ok(format!("det(π/4) = {det}; {}; {}", summary("appendix-M3", &s3), summary("appendix-M", &sk)))
}

fn structural_checks() -> Outcome {
    let s = campaign("structural", 109, 500, DimLimits::default());
    clean("structural", &s, 0.2)?;
    let mut worst = 0.0f64;
    for i in 0..500 {
        let r = replay("structural", 109, i);
        for name in ["compound_multiplicative", "block_diagonal_residual", "plucker_relation"] {
            if let Some(c) = r.check(name) {
                worst = worst.max(c.abs_gap);
            }
        }
    }
    if worst >= 1e-12 {
        return Err(format!("residual {worst:e}"));
    }
    Ok(format!("{}; compound, block and Plücker residuals <= {worst:.1e}", summary("structural", &s)))
}

fn determinism() -> Outcome {
    let mut cfg = CampaignConfig::new(110, 40, IDENTITY_IDS);
    let mut runs = Vec::new();
    for w in [1, 3, 1] {
        cfg.workers = Some(w);
        runs.push(run_campaign(&cfg).map_err(|e| e.to_string())?.to_json());
    }
    if runs.windows(2).any(|w| w[0] != w[1]) {
        return Err("JSON differs between worker counts".into());
    }
    Ok(format!("{} identities x 40 instances, {} bytes identical for 1 and 3 workers", IDENTITY_IDS.len(), runs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("counterexample reproduction", counterexample_reproduction),
        ("conditional negative correlation for one and two sets", theorem1_small_n),
        ("canonical split identity", canonical_split_identity),
        ("chain formula", chain_formula),
        ("two-set decomposition", theorem4_decomposition),
        ("restricted case", restricted_case),
        ("appendix positivity", appendix_positivity),
        ("structural checks", structural_checks),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
