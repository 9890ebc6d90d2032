use dppcheck::harness::CampaignResult;
use dppcheck::identities::{CheckKind, VerificationReport};

/// Rounds to 12 significant digits and prints the shortest form of the result.
pub fn num(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn json<T: serde::Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serialises")
}

pub fn report_text(r: &VerificationReport) -> String {
    let mut out = format!("{}: {}\n", r.identity_id, r.verdict);
    if let Some(case) = r.instance.case {
        out.push_str(&format!("  case: {case}\n"));
    }
    for (name, s) in &r.instance.sets {
        out.push_str(&format!("  {name} = {{{}}}\n", s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")));
    }
    for (name, i) in &r.instance.points {
        out.push_str(&format!("  {name} = {i}\n"));
    }
    if !r.checks.is_empty() {
        out.push_str(&format!("  lhs = {}  rhs = {}  abs_gap = {}\n", num(r.lhs), num(r.rhs), num(r.abs_gap)));
    }
    for c in &r.checks {
        let rel = match c.kind {
            CheckKind::Equality { .. } => "=",
            CheckKind::AtLeast { .. } => ">=",
        };
        out.push_str(&format!(
            "  [{}] {}: {} {rel} {} (gap {})\n",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            num(c.lhs),
            num(c.rhs),
            num(c.abs_gap)
        ));
    }
    for (k, v) in &r.values {
        out.push_str(&format!("  {k} = {}\n", num(*v)));
    }
    for d in &r.diagnostics {
        out.push_str(&format!("  note: {d}\n"));
    }
    out
}

pub fn campaign_text(r: &CampaignResult) -> String {
    let mut out = format!(
        "{:<18} {:>7} {:>5} {:>6} {:>10}  {}\n",
        "identity", "pass", "fail", "skip", "worst_gap", "worst_check"
    );
    for (id, s) in &r.0 {
        out.push_str(&format!(
            "{:<18} {:>7} {:>5} {:>6} {:>10}  {}{}\n",
            id,
            s.pass,
            s.fail,
            s.skip,
            format!("{:.2e}", s.worst_gap),
            s.worst_check.as_deref().unwrap_or("-"),
            if s.skip_ratio_exceeded { "  (skip ratio exceeded)" } else { "" }
        ));
        for f in &s.failures {
            out.push_str(&format!(
                "  failure: seed={} index={} check={} gap={}\n",
                f.seed,
                f.index,
                f.check,
                num(f.abs_gap)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(0.109375), "0.109375");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(2.0 / 3.0 * 1e-20), "6.66666666667e-21");
        assert_eq!(num(1e-14), "1e-14");
    }
}
