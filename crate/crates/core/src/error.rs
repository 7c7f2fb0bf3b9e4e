//! Error type shared by every stage of the engine.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input line in a structure, hybrid or IP file.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A record or declaration disagrees with the declared schema.
    #[error("line {line}: schema error: {msg}")]
    Schema { line: usize, msg: String },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound variable `{name}` at position {pos}")]
    UnboundVariable { name: String, pos: usize },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{name}` has arity {arity} but is used with {used} arguments")]
    ArityMismatch {
        name: String,
        arity: usize,
        used: usize,
    },
    #[error("unsupported formula shape: {0}")]
    Unsupported(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
