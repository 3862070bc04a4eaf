use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bandit instance: {0}")]
    InvalidInstance(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("trace accounting error: {pulled} pulls recorded against a horizon of {horizon}")]
    Accounting { pulled: u64, horizon: u64 },

    #[error("outside the guarantee regime: {0} (pass force to run anyway)")]
    GuaranteeRegime(String),

    #[error("gap estimate is zero; the stage III grid is undefined past its first point")]
    EstimationDegenerate,

    #[error("invalid policy configuration: {0}")]
    Config(String),

    #[error("round protocol violation: {0}")]
    Protocol(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
