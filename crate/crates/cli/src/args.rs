use clap::{Args, Parser, Subcommand, ValueEnum};
use dppcheck::IndexCombo;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "dppcheck", version, about = "Exact probabilities and correlation identities for projection determinantal processes")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Where the frame comes from. At most one source may be given.
#[derive(Debug, Args, Default)]
pub struct FrameArgs {
    /// Frame file (JSON, or CSV with a `.csv` extension).
    #[arg(long, conflicts_with_all = ["example1", "random"])]
    pub frame: Option<PathBuf>,
    /// The built-in two-row frame of the counterexample.
    #[arg(long, conflicts_with = "random")]
    pub example1: bool,
    /// Seeded Gaussian frame with N points and p rows, as `N,P`.
    #[arg(long, value_parser = parse_dims)]
    pub random: Option<(usize, usize)>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability of `include ⊂ φ`, `exclude ∩ φ = ∅`, `A_i ⊄ φ`.
    Prob {
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long, value_parser = parse_combo, default_value = "")]
        include: IndexCombo,
        #[arg(long, value_parser = parse_combo, default_value = "")]
        exclude: IndexCombo,
        /// One set `A_i`; repeat for several.
        #[arg(long = "not-superset", value_parser = parse_combo)]
        not_superset: Vec<IndexCombo>,
    },
    /// Exact draws from the process.
    Sample {
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Jordan angles between the column spans of two sets, with the case tag.
    Cs {
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long, value_parser = parse_combo)]
        a: IndexCombo,
        #[arg(long, value_parser = parse_combo)]
        b: IndexCombo,
    },
    /// Verify one identity on an explicit instance, a replayed instance or a campaign.
    Verify(Box<VerifyArgs>),
    /// The conditioned process of the counterexample and its non-determinantality certificate.
    Counterexample,
    /// Smallest conditional product gap over random instances with several conditioning sets.
    Scan {
        #[arg(long, default_value_t = 3)]
        sets: usize,
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 9)]
        n_max: usize,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Identity id, or `all` with `--campaign`.
    pub identity: String,
    #[command(flatten)]
    pub frame: FrameArgs,
    /// Campaign spec `seed=S,n=N[,workers=W][,n_max=..][,p_max=..][,max_skip=..]`.
    #[arg(long, conflicts_with = "index")]
    pub campaign: Option<String>,
    /// Campaign configuration as a JSON file.
    #[arg(long, conflicts_with_all = ["campaign", "index"])]
    pub config: Option<PathBuf>,
    /// Replay instance INDEX of a campaign seeded with `--seed`.
    #[arg(long)]
    pub index: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_combo)]
    pub b1: Option<IndexCombo>,
    #[arg(long, value_parser = parse_combo)]
    pub b2: Option<IndexCombo>,
    /// A conditioning set `A_i`; repeat for several.
    #[arg(long, value_parser = parse_combo)]
    pub a: Vec<IndexCombo>,
    #[arg(long, value_parser = parse_combo)]
    pub a1: Option<IndexCombo>,
    #[arg(long, value_parser = parse_combo)]
    pub a2: Option<IndexCombo>,
    #[arg(long)]
    pub x: Option<usize>,
    #[arg(long)]
    pub xp: Option<usize>,
    #[arg(long)]
    pub y: Option<usize>,
    #[arg(long)]
    pub i: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub angles: Vec<f64>,
}

pub fn parse_combo(s: &str) -> Result<IndexCombo, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(IndexCombo::empty());
    }
    let idx = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a 1-based index")))
        .collect::<Result<Vec<_>, _>>()?;
    IndexCombo::from_unsorted(idx).map_err(|e| e.to_string())
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (n, p) = s.split_once(',').ok_or_else(|| format!("expected N,P, got `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad N `{n}`"))?;
    let p = p.trim().parse().map_err(|_| format!("bad P `{p}`"))?;
    Ok((n, p))
}
