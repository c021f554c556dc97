use std::fmt;

/// Where a parse failure happened in an input document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Record(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Record(r) => f.write_str(r),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke a precondition (length mismatch, disconnected segments, bad schedule...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("neuron budget exceeded: {required} segments required, budget is {budget}")]
    NeuronBudget { required: usize, budget: usize },

    #[error("problem too large for exhaustive search: {n} spins (max {max})")]
    TooManySpins { n: usize, max: usize },

    #[error("embedding infeasible: {logical} logical spins, graph supports at most {max_supported}")]
    EmbeddingInfeasible { logical: usize, max_supported: usize },

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn parse_line(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Line(line),
            message: msg.into(),
        }
    }

    pub(crate) fn parse_record(record: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Record(record.into()),
            message: msg.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Contract(_) | Error::Config(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::NeuronBudget { .. }
            | Error::TooManySpins { .. }
            | Error::EmbeddingInfeasible { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
