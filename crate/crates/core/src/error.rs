use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed value `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("point {point} is outside the open unit interval")]
    OutOfUnitInterval { point: String },

    #[error("letter `{letter}` is not in the alphabet {alphabet:?} of the {action} action")]
    UnknownLetter {
        letter: String,
        action: &'static str,
        alphabet: &'static [char],
    },

    #[error("point {point} does not belong to the {action} action")]
    WrongAction { point: String, action: &'static str },

    #[error("vertex {vertex} lies in the cut set")]
    VertexInCut { vertex: String },

    #[error("vertex {vertex} is not in the {branch} branch")]
    NotInBranch { vertex: String, branch: &'static str },

    #[error("measure is not normalized: total mass {total}")]
    NotNormalized { total: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure has infinite support; {0}")]
    InfiniteSupport(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("zero up-probability at state {state}")]
    ZeroUpProbability { state: u64 },

    #[error("chain is recurrent: {0}")]
    Recurrent(String),

    #[error("kernel P2 is not symmetric on the tested set: P2({x},{y}) = {forward} but P2({y},{x}) = {backward}")]
    Asymmetric {
        x: String,
        y: String,
        forward: f64,
        backward: f64,
    },

    #[error("empty vertex set")]
    EmptySet,

    #[error("state space exceeded cap of {cap} states at step {step}")]
    StateCapExceeded { cap: usize, step: usize },

    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),

    #[error("no trajectory exited the cut set")]
    NoExit,

    #[error("records do not come from a Z-chain configuration")]
    NotZChain,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
