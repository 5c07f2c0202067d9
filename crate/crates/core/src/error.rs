use thiserror::Error;

use crate::quasi_metric::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    /// A quantity required to be finite (usually a distance) is not.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("slope {slope} is not admissible: it must exceed {threshold}")]
    SlopeInadmissible { slope: f64, threshold: f64 },

    #[error("no convergence after {iterations} sweeps (last change {residual})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("not a subsolution at node {node}: defect {defect}")]
    NotSubsolution { node: NodeId, defect: f64 },

    #[error("scheme configuration: {0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
