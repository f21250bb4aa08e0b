use thiserror::Error;

use crate::sketch::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. Evaluator failure modes are not errors; they
/// are returned as data inside [`crate::evaluators::IndependentEvaluation`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sketch is empty (n = 0)")]
    EmptySketch,

    #[error("no items with true label {0} in the stream")]
    MissingLabel(Label),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("truth column present in some rows but not others (first mismatch at row {row})")]
    InconsistentTruthColumn { row: usize },

    #[error("infeasible moments: conditional frequency {value} for event {event} given label {label} is outside [0, 1]")]
    InfeasibleMoments {
        label: Label,
        event: String,
        value: String,
    },

    #[error("coordinate {name} = {value} is outside [0, 1]")]
    OutOfRange { name: String, value: String },

    #[error("test size {n} does not make every per-label event count integral (smallest valid size is {minimal})")]
    IndivisibleTestSize { n: u64, minimal: String },

    #[error("value is not rational: {0}")]
    NotRational(String),

    #[error("counter overflow")]
    CounterOverflow,

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("degenerate agreement: 1 - 2 a_{{{i},{j}}} = 0")]
    DegenerateAgreement { i: usize, j: usize },

    #[error("negative radicand {0}")]
    NegativeRadicand(String),

    #[error("invalid number '{0}'")]
    InvalidNumber(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no feasible ground truth after {attempts} attempts")]
    RetriesExhausted { attempts: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in structured CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySketch => "EmptySketch",
            Error::MissingLabel(_) => "MissingLabel",
            Error::Parse { .. } => "ParseError",
            Error::InconsistentTruthColumn { .. } => "InconsistentTruthColumn",
            Error::InfeasibleMoments { .. } => "InfeasibleMoments",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::IndivisibleTestSize { .. } => "IndivisibleTestSize",
            Error::NotRational(_) => "NotRational",
            Error::CounterOverflow => "CounterOverflow",
            Error::InvalidBracket { .. } => "InvalidBracket",
            Error::DegenerateAgreement { .. } => "DegenerateAgreement",
            Error::NegativeRadicand(_) => "NegativeRadicand",
            Error::InvalidNumber(_) => "InvalidNumber",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::RetriesExhausted { .. } => "RetriesExhausted",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
