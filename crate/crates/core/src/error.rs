use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op} did not converge after {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },

    /// An intermediate LU pivot vanished; the energy is a root of a
    /// lower-order condition.
    #[error("pivot u_{index} vanished at E = {energy}")]
    Pole { index: usize, energy: f64 },

    #[error("root scan on [{lo}, {hi}] found {found} sign changes, expected {expected}")]
    IncompleteScan { lo: f64, hi: f64, found: usize, expected: usize },

    #[error("terminal recurrence row not satisfied at E = {energy} (residual {residual:e})")]
    Inconsistent { energy: f64, residual: f64 },

    #[error("eigenvalue bracket failure: {nodes_lo} nodes at E = {e_lo}, {nodes_hi} nodes at E = {e_hi}")]
    Bracket { e_lo: f64, e_hi: f64, nodes_lo: usize, nodes_hi: usize },

    #[error("quadrature did not reach tolerance (estimate {value}, error {error_estimate:e})")]
    Quadrature { value: f64, error_estimate: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
