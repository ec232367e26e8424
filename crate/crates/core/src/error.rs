use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("no admissible root above {bound} (found {found} candidate(s))")]
    NoAdmissibleRoot { bound: f64, found: usize },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("log-space budget exceeded: {0}")]
    OverflowGuard(String),
    #[error("joint cdf limited to {limit} queues, got {n}")]
    DimensionTooLarge { n: u64, limit: u64 },
    #[error("state space of {states} states exceeds the oracle limit {limit}")]
    StateSpaceTooLarge { states: f64, limit: f64 },
    #[error("near-critical regime (ratio {ratio}, band {band}): no theorem applies")]
    NearCritical { ratio: f64, band: f64 },
    #[error("degenerate group: {0}")]
    DegenerateGroup(String),
    #[error("{0}")]
    Domain(String),
    #[error("partition function methods disagree: relative gap {0:e}")]
    MethodsDisagree(f64),
}

impl Error {
    /// Exit status used by the command line: 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_) | Error::DimensionTooLarge { .. } | Error::Domain(_) => 1,
            _ => 2,
        }
    }
}
