use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("incomplete assignment: no value for particle {particle} along {axis}")]
    IncompleteAssignment { particle: usize, axis: char },
    #[error("context arity mismatch: {contexts} contexts for {observables} observables")]
    ContextArity { contexts: usize, observables: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot pair runs: {0}")]
    Pairing(String),
    #[error("wrong event kind: expected {expected}, found {found}")]
    EventKind { expected: char, found: char },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
