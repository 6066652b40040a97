use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One violated generator invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorViolation {
    NonSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    TooFewStates {
        n: usize,
    },
    NonFinite {
        row: usize,
        col: usize,
    },
    NegativeOffDiagonal {
        row: usize,
        col: usize,
        value: f64,
    },
    RowSumNonZero {
        row: usize,
        sum: f64,
    },
    AbsorbingSourceState {
        state: usize,
    },
}

impl GeneratorViolation {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonSquare { .. } => "NonSquare",
            Self::TooFewStates { .. } => "TooFewStates",
            Self::NonFinite { .. } => "NonFinite",
            Self::NegativeOffDiagonal { .. } => "NegativeOffDiagonal",
            Self::RowSumNonZero { .. } => "RowSumNonZero",
            Self::AbsorbingSourceState { .. } => "AbsorbingSourceState",
        }
    }
}

impl GeneratorViolation {
    /// Offending row (or state), 0-based, when the violation has one.
    pub fn row(&self) -> Option<usize> {
        match *self {
            Self::NonSquare { row, .. }
            | Self::NonFinite { row, .. }
            | Self::NegativeOffDiagonal { row, .. }
            | Self::RowSumNonZero { row, .. } => Some(row),
            Self::AbsorbingSourceState { state } => Some(state),
            Self::TooFewStates { .. } => None,
        }
    }
}

// Messages use 1-based indices to match state labels elsewhere.
impl fmt::Display for GeneratorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::NonSquare { row, len, expected } => {
                write!(f, "row {} has {len} entries, expected {expected}", row + 1)
            }
            Self::TooFewStates { n } => write!(f, "{n} states, need at least 2"),
            Self::NonFinite { row, col } => {
                write!(f, "entry ({}, {}) is not finite", row + 1, col + 1)
            }
            Self::NegativeOffDiagonal { row, col, value } => write!(
                f,
                "off-diagonal entry ({}, {}) = {value} is negative",
                row + 1,
                col + 1
            ),
            Self::RowSumNonZero { row, sum } => {
                write!(f, "row {} sums to {sum}, not 0", row + 1)
            }
            Self::AbsorbingSourceState { state } => {
                write!(f, "state {} has zero holding rate", state + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid generator: {}", join(.0))]
    InvalidGenerator(Vec<GeneratorViolation>),

    #[error("invalid absorbing chain: {0}")]
    InvalidChain(String),

    #[error("transient block is singular (rcond estimate {rcond:e})")]
    SingularTransientBlock { rcond: f64 },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("synchronization-point chain is reducible or ill-conditioned: {0}")]
    ReducibleChain(String),

    #[error("no grid point satisfies the sampling-rate budget {budget}")]
    NoFeasiblePolicy { budget: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("cycle {cycle}: {source}")]
    InCycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable name of the underlying failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidGenerator(v) => v.first().map_or("InvalidGenerator", |v| v.kind()),
            Self::InvalidChain(_) => "InvalidChain",
            Self::SingularTransientBlock { .. } => "SingularTransientBlock",
            Self::InvalidPolicy(_) => "InvalidPolicy",
            Self::InvalidChannel(_) => "InvalidChannel",
            Self::ReducibleChain(_) => "ReducibleChain",
            Self::NoFeasiblePolicy { .. } => "NoFeasiblePolicy",
            Self::InvalidSimConfig(_) => "InvalidSimConfig",
            Self::InvalidSweep(_) => "InvalidSweep",
            Self::InCycle { source, .. } => source.kind(),
        }
    }

    /// True for failures caused by a policy that leaves the system without a
    /// well-defined stationary regime, as opposed to malformed input.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::ReducibleChain(_) | Self::NoFeasiblePolicy { .. } => true,
            Self::SingularTransientBlock { .. } => true,
            Self::InCycle { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }

    pub(crate) fn in_cycle(self, cycle: usize) -> Self {
        Self::InCycle {
            cycle,
            source: Box::new(self),
        }
    }
}

fn join(v: &[GeneratorViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
