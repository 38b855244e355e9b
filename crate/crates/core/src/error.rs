use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index {index} at level {level} is below 2")]
    InvalidIndex { level: usize, index: u64 },
    #[error("centered domains need odd moduli, level {level} has modulus {modulus}")]
    ParityError { level: usize, modulus: String },
    #[error("invalid tower config: {0}")]
    InvalidConfig(String),
    #[error("level {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("{element} is not in D_{level}")]
    NotInDomain { element: String, level: usize },
    #[error("{what} needs {size} cells, budget is {budget}")]
    BudgetExceeded { what: String, size: String, budget: u64 },
    #[error("no candidate for slot {slot} of block {block} at step {step}")]
    EmptySlot { step: usize, block: usize, slot: u64 },
    #[error("check needs an abelian tower")]
    NonAbelianUnsupported,
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error("tower declares no tail behaviour for the series")]
    InconclusiveTail,
    #[error("methods disagree on {what}: {detail}")]
    MethodDisagreement { what: String, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
