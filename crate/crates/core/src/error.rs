use crate::transition::{SystemKind, Transition};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("illegal transition {transition} in {system}: {violated}")]
    IllegalTransition {
        system: SystemKind,
        transition: Transition,
        violated: String,
    },

    #[error("transition sequence failed at step {step}: {msg}")]
    BadSequence { step: usize, msg: String },

    #[error("gold tree is not projective")]
    NonProjectiveGold,

    #[error("{system} is not supported here: {msg}")]
    UnsupportedSystem { system: SystemKind, msg: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("sentence length {0} exceeds the enumeration guard {1}")]
    EnumerationGuard(usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
