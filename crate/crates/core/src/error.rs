use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A closed-form denominator vanished for the given parameters.
    #[error("singular parameters: {0}")]
    SingularParameter(String),

    /// sigma_n = -1 for some mode, so the annulus series has no solution.
    #[error("resonant parameters: sigma_{mode} = -1")]
    Resonance { mode: i64 },

    #[error("outside the valid domain: {0}")]
    Domain(String),

    #[error("finite-difference oracle failed: {0}")]
    OracleFailure(String),

    #[error("eigensolver did not converge for a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("ill-conditioned system (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("corrupt or unsupported file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
