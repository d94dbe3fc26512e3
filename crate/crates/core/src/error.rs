use thiserror::Error;

use crate::ast::Diagnostic;
use crate::parser::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown region label `{0}`")]
    UnknownRegion(String),

    #[error("horizon exceeds trace: evaluation needs samples up to t = {needed}, trace ends at t = {last}")]
    HorizonExceedsTrace { needed: usize, last: usize },

    #[error("individual trajectories have different lengths")]
    RaggedTrajectory,

    #[error("m = {m} is out of range for {n} values")]
    CountOutOfRange { m: usize, n: usize },

    #[error("agent {agent}: control coordinate {coord} at t = {t} is {value}, outside [{lo}, {hi}]")]
    ControlOutOfBox {
        agent: usize,
        t: usize,
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("agent {agent}: expected {expected} values, found {found}")]
    DimensionMismatch {
        agent: usize,
        expected: usize,
        found: usize,
    },

    #[error("horizon mismatch: expected {expected} steps, found {found}")]
    HorizonMismatch { expected: usize, found: usize },

    #[error("formula failed validation: {}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("gamma = {gamma} violates the cost bound: gamma must be >= sup of the total control cost = {bound}")]
    GammaTooSmall { gamma: f64, bound: f64 },

    #[error("control box of agent {0} is unbounded but the cost is nonzero")]
    UnboundedBox(usize),

    #[error("objective or gradient is not finite at the starting point")]
    NonFiniteStart,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
