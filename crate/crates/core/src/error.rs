use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ill-posed interconnection: feedthrough loop matrix is singular")]
    IllPosedInterconnection,

    #[error("pole on the imaginary axis at omega = {omega} rad/s")]
    PoleOnAxis { omega: f64 },

    #[error("solver precondition violated: {0}")]
    SolverPrecondition(String),

    #[error("no stabilizing solution: {0}")]
    NoSolution(String),

    #[error("system is unstable, H-infinity norm is infinite")]
    InfiniteNorm,

    #[error("H-infinity synthesis infeasible at gamma = {gamma}")]
    SynthesisInfeasible { gamma: f64 },

    #[error("regularity condition failed: {0}")]
    Regularity(String),

    #[error("eigenvalue iteration did not converge ({0})")]
    NoConvergence(&'static str),

    #[error("design failure: {0}")]
    DesignFailure(String),

    #[error("unstable block: {0}")]
    Unstable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
