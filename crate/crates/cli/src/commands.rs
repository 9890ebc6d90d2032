use crate::args::{Cli, Command, FrameArgs, Format, VerifyArgs};
use crate::output::{campaign_text, json, num, report_text};
use dppcheck::cs::{classify_case, jordan_angles};
use dppcheck::dpp::io::load_frame;
use dppcheck::dpp::{enumerate_distribution_capped, prob_event, sample, Frame, SubsetEventSpec};
use dppcheck::harness::{
    instance_rng, instance_seed, random_frame, random_frame_with, run_campaign, run_instance, CampaignConfig,
    DimLimits, IDENTITY_IDS,
};
use dppcheck::identities::{self, Verdict, VerificationReport};
use dppcheck::{Error, IndexCombo, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;
use std::path::Path;
use std::time::Instant;

/// Largest table the `prob` cross-check enumerates.
const PROB_ENUM_CAP: usize = 200_000;

pub fn run(cli: Cli) -> Result<u8> {
    let fmt = cli.format;
    match cli.command {
        Command::Prob { frame, include, exclude, not_superset } => cmd_prob(fmt, &frame, include, exclude, not_superset),
        Command::Sample { frame, count } => cmd_sample(fmt, &frame, count),
        Command::Cs { frame, a, b } => cmd_cs(fmt, &frame, &a, &b),
        Command::Verify(v) => cmd_verify(fmt, *v),
        Command::Counterexample => cmd_counterexample(fmt),
        Command::Scan { sets, instances, seed, n_max } => cmd_scan(fmt, sets, instances, seed, n_max),
    }
}

fn load(src: &FrameArgs) -> Result<Frame> {
    if let Some(path) = &src.frame {
        return load_frame(path);
    }
    if src.example1 {
        return Ok(Frame::example1());
    }
    if let Some((n, p)) = src.random {
        return random_frame(src.seed.unwrap_or(0), n, p);
    }
    Err(Error::Config("no frame given: use --frame, --example1 or --random N,P".into()))
}

fn emit(fmt: Format, text: String, value: serde_json::Value) {
    match fmt {
        Format::Text => print!("{text}"),
        Format::Json => println!("{}", json(&value)),
    }
}

fn combo_str(s: &IndexCombo) -> String {
    format!("{{{}}}", s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
}

fn cmd_prob(fmt: Format, src: &FrameArgs, include: IndexCombo, exclude: IndexCombo, sets: Vec<IndexCombo>) -> Result<u8> {
    let f = load(src)?;
    let e = SubsetEventSpec::new(include, exclude, sets);
    let p = prob_event(&f, &e)?;
    let oracle = enumerate_distribution_capped(&f, PROB_ENUM_CAP).ok().map(|d| d.event_prob(|s| e.contains(s)));
    let mut text = format!("probability = {}\n", num(p));
    match oracle {
        Some(o) => text.push_str(&format!("oracle = {}  delta = {:.2e}\n", num(o), (p - o).abs())),
        None => text.push_str("oracle: table too large, cross-check skipped\n"),
    }
    emit(
        fmt,
        text,
        json!({ "event": e, "probability": p, "oracle": oracle, "delta": oracle.map(|o| (p - o).abs()) }),
    );
    Ok(0)
}

fn cmd_sample(fmt: Format, src: &FrameArgs, count: usize) -> Result<u8> {
    let f = load(src)?;
    let seed = src.seed.unwrap_or(0);
    let draws = (0..count as u64).map(|i| sample(&f, instance_seed(seed, i))).collect::<Result<Vec<_>>>()?;
    let text = draws.iter().map(|s| combo_str(s) + "\n").collect();
    emit(fmt, text, json!({ "seed": seed, "draws": draws }));
    Ok(0)
}

fn cmd_cs(fmt: Format, src: &FrameArgs, a: &IndexCombo, b: &IndexCombo) -> Result<u8> {
    let f = load(src)?;
    let class = classify_case(&f, a, b)?;
    let to_vecs = |s: &IndexCombo| f.columns_of(s).iter().map(|c| c.to_vec()).collect::<Vec<_>>();
    let jd = jordan_angles(&to_vecs(a), &to_vecs(b))?;
    let lemma3 = identities::verify_lemma3(&f, a, b)?;
    // directions in the common subspace contribute zero angles
    let angles: Vec<f64> = std::iter::repeat_n(0.0, jd.intersection_dim()).chain(jd.angles.iter().copied()).collect();
    let degrees: Vec<f64> = angles.iter().map(|t| t.to_degrees()).collect();
    let mut text = String::new();
    text.push_str(&format!("case: {}\n", class.tag));
    text.push_str(&format!("kappa1 = {}  kappa2 = {}\n", num(class.kappa1), num(class.kappa2)));
    text.push_str(&format!("union probability = {}\n", num(class.union_prob)));
    text.push_str("angles (rad, deg):\n");
    for (r, d) in angles.iter().zip(&degrees) {
        text.push_str(&format!("  {}  {}\n", num(*r), num(*d)));
    }
    if jd.intersection_dim() > 0 {
        text.push_str(&format!("common subspace dimension {}\n", jd.intersection_dim()));
    }
    text.push_str("cross-checks:\n");
    let mut deltas = serde_json::Map::new();
    for c in &lemma3.checks {
        text.push_str(&format!("  {}: delta {:.2e}{}\n", c.name, c.abs_gap, if c.pass { "" } else { "  FAIL" }));
        deltas.insert(c.name.clone(), json!(c.abs_gap));
    }
    emit(
        fmt,
        text,
        json!({
            "case": class.tag,
            "kappa1": class.kappa1,
            "kappa2": class.kappa2,
            "union_prob": class.union_prob,
            "angles_rad": angles,
            "angles_deg": degrees,
            "intersection_dim": jd.intersection_dim(),
            "deltas": deltas,
        }),
    );
    Ok(if lemma3.verdict == Verdict::Fail { 1 } else { 0 })
}

fn cmd_counterexample(fmt: Format) -> Result<u8> {
    let c = identities::counterexample()?;
    let mut text = format!("kappa = P(phi != {{1,2}}) = {}\n", num(c.kappa));
    text.push_str("law of psi = (phi | {1,2} not in phi):\n");
    for (s, p) in &c.conditional_law {
        text.push_str(&format!("  {}  {}\n", combo_str(s), num(*p)));
    }
    match &c.certificate {
        dppcheck::dpp::Rank2Verdict::NotDeterminantal { pair, first, second } => {
            text.push_str(&format!(
                "share test on pair {:?}: k={} gives {}, k={} gives {}\n",
                pair,
                first.0,
                num(first.1),
                second.0,
                num(second.1)
            ));
        }
        v => text.push_str(&format!("share test: {v:?}\n")),
    }
    text.push_str(if c.not_determinantal { "not determinantal\n" } else { "no certificate\n" });
    emit(fmt, text, serde_json::to_value(&c).expect("serialisable"));
    Ok(if c.not_determinantal { 0 } else { 1 })
}

fn cmd_scan(fmt: Format, n_sets: usize, instances: u64, seed: u64, n_max: usize) -> Result<u8> {
    if n_sets == 0 {
        return Err(Error::Config("--sets must be at least 1".into()));
    }
    // each A_i takes one or two points, plus B1 and B2
    let n_lo = n_sets + 3;
    if n_max < n_lo {
        return Err(Error::Config(format!("--n-max must be at least {n_lo} for {n_sets} sets")));
    }
    let (mut min_gap, mut worst, mut negatives, mut skipped) = (f64::INFINITY, None, 0u64, 0u64);
    for i in 0..instances {
        let mut rng = instance_rng(seed, i, "scan");
        let n = rng.random_range(n_lo..=n_max);
        let p = rng.random_range(2..=5.min(n - 1));
        let f = random_frame_with(&mut rng, n, p)?;
        let mut pts: Vec<usize> = (1..=n).collect();
        pts.shuffle(&mut rng);
        let (b1, b2) = (IndexCombo::singleton(pts[0]), IndexCombo::singleton(pts[1]));
        let mut at = 2;
        let mut sets = Vec::with_capacity(n_sets);
        for s in 0..n_sets {
            let room = n - at - (n_sets - s - 1);
            let k = rng.random_range(1..=2.min(room).min(p));
            sets.push(IndexCombo::from_unsorted(pts[at..at + k].to_vec())?);
            at += k;
        }
        match identities::verify_theorem1(&f, &b1, &b2, &sets) {
            Ok(r) => {
                let gap = r.values["gap"];
                if gap < 0.0 {
                    negatives += 1;
                }
                if gap < min_gap {
                    min_gap = gap;
                    worst = Some(i);
                }
            }
            Err(e) if e.is_skip() => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let text = format!(
        "sets = {n_sets}  instances = {instances}  skipped = {skipped}\nmin gap = {}{}\nnegative gaps = {negatives}\n",
        num(min_gap),
        worst.map(|i| format!(" (index {i})")).unwrap_or_default()
    );
    emit(
        fmt,
        text,
        json!({
            "sets": n_sets,
            "seed": seed,
            "instances": instances,
            "skipped": skipped,
            "min_gap": if min_gap.is_finite() { Some(min_gap) } else { None },
            "min_gap_index": worst,
            "negative_count": negatives,
        }),
    );
    Ok(0)
}

fn parse_value<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{k}`")))
}

fn parse_campaign(id: &str, spec: &str) -> Result<CampaignConfig> {
    let ids: Vec<&str> = if id == "all" { IDENTITY_IDS.to_vec() } else { vec![id] };
    let mut cfg = CampaignConfig::new(0, 0, &ids);
    let (mut have_seed, mut have_n) = (false, false);
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{part}`")))?;
        match k.trim() {
            "seed" => {
                cfg.seed = parse_value(k, v)?;
                have_seed = true;
            }
            "n" => {
                cfg.n_instances = parse_value(k, v)?;
                have_n = true;
            }
            "workers" => cfg.workers = Some(parse_value(k, v)?),
            "n_max" => cfg.dims.n_max = parse_value(k, v)?,
            "p_max" => cfg.dims.p_max = parse_value(k, v)?,
            "max_skip" => cfg.max_skip_ratio = parse_value(k, v)?,
            other => return Err(Error::Config(format!("unknown campaign key `{other}`"))),
        }
    }
    if !(have_seed && have_n) {
        return Err(Error::Config("campaign spec needs seed=.. and n=..".into()));
    }
    Ok(cfg)
}

fn write_out(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, format!("{body}\n")).map_err(Error::from)
}

fn cmd_verify(fmt: Format, v: VerifyArgs) -> Result<u8> {
    let id = v.identity.as_str();
    let is_campaign = v.campaign.is_some() || v.config.is_some();
    if !(IDENTITY_IDS.contains(&id) || (id == "all" && is_campaign)) {
        return Err(Error::UnknownIdentity(id.to_string()));
    }
    if is_campaign {
        let cfg = match (&v.campaign, &v.config) {
            (Some(spec), _) => parse_campaign(id, spec)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)?;
                let mut cfg: CampaignConfig =
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                if id != "all" {
                    cfg.identities = vec![id.to_string()];
                }
                cfg
            }
            (None, None) => unreachable!(),
        };
        let start = Instant::now();
        let result = run_campaign(&cfg)?;
        eprintln!("campaign finished in {:.2?}", start.elapsed());
        let body = result.to_json();
        if let Some(out) = &v.out {
            write_out(out, &body)?;
        }
        match fmt {
            Format::Text => print!("{}", campaign_text(&result)),
            Format::Json => println!("{body}"),
        }
        return Ok(if result.is_clean() { 0 } else { 1 });
    }
    let report = if let Some(index) = v.index {
        run_instance(id, v.frame.seed.unwrap_or(0), index, DimLimits::default(), &Default::default())?
    } else {
        explicit_instance(id, &v)?
    };
    let body = json(&report);
    if let Some(out) = &v.out {
        write_out(out, &body)?;
    }
    match fmt {
        Format::Text => print!("{}", report_text(&report)),
        Format::Json => println!("{body}"),
    }
    Ok(if report.verdict == Verdict::Fail { 1 } else { 0 })
}

fn need<'a, T>(v: &'a Option<T>, flag: &str, id: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("{id} needs --{flag}")))
}

fn explicit_instance(id: &str, v: &VerifyArgs) -> Result<VerificationReport> {
    if id.starts_with("appendix-M") {
        if v.angles.is_empty() {
            return Err(Error::Config(format!("{id} needs --angles")));
        }
        if let Some(k) = v.k {
            if k != v.angles.len() {
                return Err(Error::Config(format!("--k {k} but {} angles given", v.angles.len())));
            }
        }
        if id == "appendix-M3" && v.angles.len() != 3 {
            return Err(Error::Config("appendix-M3 takes exactly three angles".into()));
        }
        return identities::verify_appendix(&v.angles);
    }
    let f = load(&v.frame)?;
    let a1 = || need(&v.a1, "a1", id);
    let a2 = || need(&v.a2, "a2", id);
    let pts = || Ok::<_, Error>((*need(&v.x, "x", id)?, *need(&v.xp, "xp", id)?));
    let bs = || Ok::<_, Error>((need(&v.b1, "b1", id)?, need(&v.b2, "b2", id)?));
    match id {
        "oracle" => identities::verify_oracle(&f),
        "theorem1" | "theorem1-n1" | "theorem1-n2" => {
            let want = match id {
                "theorem1-n1" => Some(1),
                "theorem1-n2" => Some(2),
                _ => None,
            };
            if v.a.is_empty() || want.is_some_and(|w| w != v.a.len()) {
                return Err(Error::Config(format!("{id} needs {} --a set(s)", want.map_or("one or more".into(), |w| w.to_string()))));
            }
            let (b1, b2) = bs()?;
            identities::verify_theorem1(&f, b1, b2, &v.a)
        }
        "reduction" => {
            let (b1, b2) = bs()?;
            identities::verify_reduction_step(&f, *need(&v.y, "y", id)?, b1, b2, &v.a)
        }
        "remark1" => identities::verify_remark1(&f, a1()?, *need(&v.i, "i", id)?, *need(&v.j, "j", id)?),
        "n1-identity" => {
            let (x, xp) = pts()?;
            identities::verify_n1_identity(&f, a1()?, x, xp)
        }
        "n1-canonical" => identities::verify_n1_canonical(&f, *need(&v.k, "k", id)?, &v.angles),
        "chain-2" | "chain-3" | "chain-4" => identities::verify_chain_formula(&f, id[6..].parse().expect("chain length")),
        "theorem4-equal" => {
            let (x, xp) = pts()?;
            Ok(identities::verify_n2_equal(&f, a1()?, a2()?, x, xp)?.into_report())
        }
        "theorem4-unequal" => {
            let (x, xp) = pts()?;
            Ok(identities::verify_n2_unequal(&f, a1()?, a2()?, x, xp)?.into_report())
        }
        "restricted" => {
            let (x, xp) = pts()?;
            identities::verify_restricted(&f, a1()?, a2()?, x, xp)
        }
        "structural" => {
            let (x, xp) = pts()?;
            identities::verify_structural(&f, a1()?, a2()?, x, xp)
        }
        "degenerate" => {
            let (x, xp) = pts()?;
            identities::verify_degenerate(&f, a1()?, a2()?, x, xp)
        }
        "lemma3" => identities::verify_lemma3(&f, a1()?, a2()?),
        "inequality-I2" => identities::verify_inequality_i2(&f, a1()?, a2()?),
        other => Err(Error::UnknownIdentity(other.to_string())),
    }
}
