use thiserror::Error;

use crate::model::Allocation2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("cannot parse rational {0:?}")]
    ParseRat(String),
    #[error("valuation must have value 0 for the empty bundle")]
    NotNormalized,
    #[error("valuation must be non-decreasing (index {0})")]
    NotMonotone(usize),
    #[error("negative value at index {0}")]
    Negative(usize),
    #[error("at least 2 items are required, got {0}")]
    TooFewItems(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("price schedule must charge 0 for the empty bundle")]
    NonZeroEmptyPrice,
    #[error("achieved welfare {achieved} exceeds optimum {opt}")]
    AchievedExceedsOpt { opt: String, achieved: String },
    #[error("ratio inputs must be non-negative")]
    NegativeInput,
    #[error("weight must be positive")]
    NonPositiveWeight,
    #[error("fractions auction needs alpha_1 > 0")]
    ZeroAlpha,
    #[error("no feasible pair in the winning sets (Alice {alice:?}, Bob {bob:?})")]
    InfeasibleMechanism { alice: Vec<usize>, bob: Vec<usize> },
    #[error("parameter constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("bad extension or induced indices: {0}")]
    BadIndices(String),
    #[error("two-item price is zero at r = {0}, fraction undefined")]
    ZeroTwoItemPrice(String),
    #[error("normal-form sample does not contain r = 0 and s = 0")]
    MissingOrigin,
    #[error("normal-form sample is too sparse: {0}")]
    InsufficientSample(String),
    #[error("valuation is not degenerate: {0}")]
    NotDegenerate(String),
    #[error("samples disagree on the same input: {first:?} vs {second:?}")]
    InconsistentSamples { first: Allocation2, second: Allocation2 },
    #[error("mechanism does not expose price schedules")]
    NoSchedules,
    #[error("affine specification invalid: {0}")]
    InvalidAffine(String),
    #[error("grid specification invalid: {0}")]
    InvalidGrid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
