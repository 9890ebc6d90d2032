use thiserror::Error;

/// Errors produced by the probability kernels and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("grade mismatch: {0} vs {1}")]
    GradeMismatch(usize, usize),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid index combination: {0}")]
    InvalidCombo(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("frame rows are not orthonormal (max defect {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("subset has {got} points but the process has cardinality {expected}")]
    CardinalityMismatch { expected: usize, got: usize },

    #[error("enumerating C({n},{p}) = {count} subsets exceeds the cap {cap}")]
    EnumerationCap { n: usize, p: usize, count: u128, cap: usize },

    #[error("sets {0} and {1} overlap")]
    Overlap(String, String),

    #[error("event is empty: {0}")]
    EmptyEvent(String),

    #[error("negative probability {0:e}")]
    NegativeProbability(f64),

    #[error("distribution sums to {0}, expected 1")]
    NotNormalized(f64),

    #[error("conditioning event has probability {0:e}")]
    NullConditioning(f64),

    #[error("degenerate inclusion probability: {0}")]
    DegenerateKappa(String),

    #[error("rank deficient input: {0}")]
    RankDeficient(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("ill-conditioned instance: {0}")]
    IllConditioned(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for errors that mean "this instance is outside the verifier's
    /// domain" rather than "the input is malformed". Campaigns count these
    /// as skips.
    pub fn is_skip(&self) -> bool {
        matches!(
            self,
            Error::NullConditioning(_)
                | Error::DegenerateKappa(_)
                | Error::Precondition(_)
                | Error::IllConditioned(_)
                | Error::RankDeficient(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
