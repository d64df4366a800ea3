//! Crate-wide error type. Validation findings are ordinary data, not errors;
//! this enum covers conditions that make an operation's result meaningless.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("machine is not well-formed: {0}")]
    NotWellFormed(String),

    #[error("input head left [0, n+1] after path {path}")]
    InputHeadOutOfBounds { path: String },

    #[error("work tape exceeded the space cap of {cap} cells after path {path}")]
    WorkSpaceExceeded { cap: usize, path: String },

    #[error("no postselected mass: p_acc + p_rej = 0")]
    NoHaltingMass,

    #[error("nonzero non-halting mass {0} where absolute halting is required")]
    NonHaltingMass(String),

    #[error("machine is not canonical: {0}")]
    NotCanonical(String),

    #[error("cannot canonicalize: {0}")]
    Canonicalize(String),

    #[error("configuration out of bounds: {0}")]
    ConfigOutOfBounds(String),

    #[error("configuration space too large: {n} exceeds cap {cap}")]
    ConfigSpaceTooLarge { n: usize, cap: usize },

    #[error("circuit is malformed: {0}")]
    BadCircuit(String),

    #[error("gate is not embeddable: {0}")]
    NotEmbeddable(String),

    #[error("embedding failed unitarity check: deviation {0:e}")]
    NotUnitary(f64),

    #[error("post-selection mass underflow: retained norm {0:e}")]
    SurvivalUnderflow(f64),

    #[error("quantum state is not separable on the decision wire: stray mass {0:e}")]
    NotSeparable(f64),

    #[error("acceptance probability is degenerate: A = 1/2 exactly")]
    DegenerateAcceptance,

    #[error("promise violated: A = {0} is neither 1/2 nor at distance >= 2^-T from 1/2")]
    PromiseViolated(String),

    #[error("construction failed: {0}")]
    Construct(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
