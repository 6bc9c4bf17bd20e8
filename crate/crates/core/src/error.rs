use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("precision cap of {cap} bits reached while {context}")]
    PrecisionCap { cap: u32, context: String },
    #[error("could not resolve {0} to the requested tolerance")]
    Unresolved(String),
    #[error("parse error in {input:?} at byte {position}: {message}")]
    Parse { input: String, position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
