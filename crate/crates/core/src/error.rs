use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{stage} did not converge: {detail}")]
    NonConvergence { stage: &'static str, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn no_convergence(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::NonConvergence {
            stage,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
