use thiserror::Error;

/// Errors raised by instance construction, solvers and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("instance document: {0}")]
    Document(#[from] serde_json::Error),
    #[error("region `{region}` cannot be reached within the shift: round trip plus longest visit is {needed:.4} h, shift is {shift:.4} h")]
    Unreachable { region: usize, needed: f64, shift: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("tour over {0} locations exceeds the exact solver limit")]
    TourTooLarge(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("the ALP is unbounded for ε = {0}: no distribution over capped states has these relevance weights")]
    AlpUnbounded(f64),
    #[error("column generation did not converge after {0} columns")]
    ColumnLimit(usize),
    #[error("state enumeration of {0} pairs exceeds the configured limit")]
    EnumerationTooLarge(u128),
    #[error("state layer of {size} states on day {day} exceeds the cap of {cap}")]
    StateLayerCap { day: usize, size: usize, cap: usize },
    #[error("policy failed on day {day}: {source}")]
    PolicyFailure {
        day: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("infeasible action: {0}")]
    InfeasibleAction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
