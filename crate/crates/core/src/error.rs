//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by callers that map errors to exit codes:
/// violated preconditions versus values that leave a formula's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("gradient component {index} is not finite ({value})")]
    NonFiniteComponent { index: usize, value: f64 },

    #[error("shape product {product} does not match component count {len}")]
    ShapeMismatch { product: usize, len: usize },

    #[error("gradient must have at least one component")]
    EmptyGradient,

    #[error("clip threshold must be positive and finite, got {0}")]
    InvalidClip(f64),

    #[error("block size {beta} out of range for dimension {dim}: need 1 <= beta <= {dim}")]
    BlockSizeOutOfRange { beta: usize, dim: usize },

    #[error("block size {beta} does not divide dimension {dim}: closed form requires beta | d")]
    BlockSizeNotDivisor { beta: usize, dim: usize },

    #[error("{blocks} blocks exceed the enumeration limit of {limit}: use the sampling helpers instead")]
    TooManyBlocks { blocks: usize, limit: usize },

    #[error("parameter group dimension must be at least 1 (group {name:?})")]
    InvalidDimension { name: String },

    #[error("duplicate parameter group name {name:?}")]
    DuplicateGroupName { name: String },

    #[error("model must contain at least one parameter group")]
    EmptyModel,

    #[error("target epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("epsilon must be nonnegative and not NaN, got {0}")]
    NegativeEpsilon(f64),

    #[error("delta must lie in {range}, got {value}")]
    InvalidDelta { value: f64, range: &'static str },

    #[error("steps must be at least 1")]
    InvalidSteps,

    #[error("batch size must be at least 1")]
    InvalidBatchSize,

    #[error("epsilon and delta lists must have equal length ({eps} vs {deltas})")]
    LengthMismatch { eps: usize, deltas: usize },

    #[error("lists must be aligned: {left} entries vs {right}")]
    MisalignedSequences { left: usize, right: usize },

    #[error("composed delta {0} reached 1: the guarantee is vacuous")]
    DeltaOverflow(f64),

    #[error("no finite epsilon_0 exists: delta {delta} must be strictly below the sampling probability q {q}")]
    NoFiniteEpsilonZero { q: f64, delta: f64 },

    #[error("sampling ratio q must lie in (0, 1], got {0}")]
    InvalidSamplingRatio(f64),

    #[error("epsilon_prime {eps_prime} exceeds epsilon {eps}")]
    EpsilonPrimeExceedsEpsilon { eps_prime: f64, eps: f64 },

    #[error("step index {step} must be below the horizon {steps}")]
    StepBeyondHorizon { step: u64, steps: u64 },

    #[error("spent budget {spent} exceeds the total budget {total}")]
    SpentExceedsBudget { spent: f64, total: f64 },

    #[error("value for {name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("value for {name} must be nonnegative and finite, got {value}")]
    NegativeValue { name: &'static str, value: f64 },

    #[error("expected {expected} gradients (one per parameter group), got {got}")]
    GroupCountMismatch { expected: usize, got: usize },

    #[error("gradient for group {group:?} has dimension {got}, expected {expected}")]
    GroupDimensionMismatch {
        group: String,
        expected: usize,
        got: usize,
    },

    #[error("budget horizon exhausted: all {steps} configured steps have been generated")]
    BudgetHorizonExhausted { steps: u64 },

    #[error("training diverged at step {step}: loss {loss} exceeds 1e12")]
    Diverged { step: u64, loss: f64 },

    #[error("{0}")]
    InvalidConfig(String),
}

impl Error {
    /// Numeric-domain failures are separated from plain input validation so
    /// the CLI can report them with a distinct exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DeltaOverflow(_)
            | Error::NoFiniteEpsilonZero { .. }
            | Error::Diverged { .. } => ErrorKind::Domain,
            _ => ErrorKind::Validation,
        }
    }
}
