use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments, configuration, or dimensions. Maps to exit code 2.
    #[error("usage error: {0}")]
    Usage(String),

    /// The game lacks something the operation needs (e.g. analytic gradients).
    #[error("capability error: {0}")]
    Capability(String),

    #[error("non-finite payoff {value} for player {player} at action {action:?}")]
    NonFinitePayoff {
        player: usize,
        value: f64,
        action: Vec<f64>,
    },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("malformed csv at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code: 2 for usage/config problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::MalformedCsv { .. } => 2,
            _ => 1,
        }
    }
}
