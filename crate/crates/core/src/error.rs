use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: all probabilities are zero")]
    DegenerateState,

    #[error("invalid probability vector: {0}")]
    InvalidVector(String),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("channel fidelity {0} outside [1/4, 1]")]
    InvalidChannel(f64),

    #[error("protocol never succeeds on this input")]
    NeverSucceeds,

    #[error("target fidelity unreachable: {target} (trajectory saturates at {reached})")]
    TargetUnreachable { target: f64, reached: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("qubit index collision: control and target are both {0}")]
    IndexCollision(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("scheme {scheme} expects {expected} copies, got {got}")]
    CopyCount {
        scheme: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("statistics exhausted at round {round}: no surviving samples to continue")]
    StatisticsExhausted { round: usize },
}
