use thiserror::Error;

/// Errors shared across the library.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus is reducible over GF({p})")]
    ReducibleModulus { p: u64 },
    #[error("modulus degree {got} does not match extension degree {want}")]
    DegreeMismatch { want: u32, got: u32 },
    #[error("inverse of zero")]
    DivisionByZero,
    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(u32, u32),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("colouring shapes do not match")]
    ShapeMismatch,
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error("ladder step {step} at delta {delta} has no fresh support coordinate")]
    NoFreshCoordinate { delta: u32, step: usize },
    #[error("uniformizer extension failed at delta {delta}")]
    ExtensionFailed { delta: u32 },
    #[error("initial-segment patch failed at delta {delta}")]
    PatchFailed { delta: u32 },
    #[error("function does not uniformize the colouring difference at delta {delta}")]
    NotAUniformizer { delta: u32 },
    #[error("map is not an isomorphism: {0}")]
    MalformedIso(String),
    #[error("structure does not code a colouring: {0}")]
    NotCoded(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("coset representative cap {cap} exceeded (would need {need})")]
    CapExceeded { cap: u64, need: u64 },
    #[error("models have different vocabulary parameters")]
    VocabularyMismatch,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ladder system violates {clause} at delta {delta}, step {step}")]
    Validation {
        clause: &'static str,
        delta: u32,
        step: usize,
    },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
