use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("undefined variable `{0}`")]
    UndefinedVariable(String),
    #[error("not a context: expected exactly one hole, found {0}")]
    NotAContext(usize),
    #[error("arity {arity} exceeds the maximal arity {max} of the signature")]
    ArityTooLarge { arity: usize, max: usize },
    #[error("unknown letter `{0}` (not recorded in the compression log)")]
    UnknownLetter(String),
    #[error("signature contains no constant")]
    NoConstant,
    #[error("substitution is not a solution")]
    NotASolution,
    #[error("inconsistent guess: {0}")]
    InconsistentGuess(String),
    #[error("hole position {position} out of range for letter of arity {arity}")]
    HolePositionOutOfRange { position: usize, arity: usize },
    #[error("exponent {exponent} exceeds the cap {cap}")]
    ExponentOverCap { exponent: u64, cap: u64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("arity mismatch for `{name}`: expected {expected}, found {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
