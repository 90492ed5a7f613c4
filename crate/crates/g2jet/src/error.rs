//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation order mismatch: {left} vs {right}")]
    OrderMismatch { left: u32, right: u32 },

    #[error("scalars belong to different radical rings")]
    RingMismatch,

    #[error("division by zero scalar")]
    DivisionByZero,

    #[error("jet has no invertible constant term")]
    NonUnitJet,

    #[error("power {num}/{den} of {value} is not representable in the {backend} backend")]
    RootNotRepresentable {
        value: String,
        num: i64,
        den: u32,
        backend: &'static str,
    },

    #[error("invalid radical ring t^{degree} = {radicand}: {reason}")]
    InvalidRing {
        degree: u32,
        radicand: String,
        reason: String,
    },

    #[error("form degree {found} where {expected} was required")]
    WrongDegree { expected: u8, found: u8 },

    #[error("wedge degree overflow: {left} + {right} > 7")]
    DegreeOverflow { left: u8, right: u8 },

    #[error("metric has singular constant term")]
    SingularMetric,

    #[error("3-form is not positive at the origin")]
    NotPositive,

    #[error("form is not closed to effective order (d has valuation {valuation})")]
    NotClosed { valuation: u32 },

    #[error("effective order exhausted: need {needed}, have {have}")]
    EffectiveOrder { needed: i64, have: i64 },

    #[error("dilation scale must be a nonzero unit")]
    ZeroDilation,

    #[error("taylor projection order {requested} exceeds effective order {effective}")]
    TaylorOrder { requested: u32, effective: i64 },

    #[error("flow requires a field of valuation >= 2, found {found}")]
    FlowValuation { found: u32 },

    #[error("graded solve stagnated: correction valuation did not increase at degree {degree}")]
    StagnantValuation { degree: u32 },

    #[error("point-solve scale audit failed: {detail}")]
    ScaleInconsistent { detail: String },

    #[error("normalization evidence missing or wrong: {detail}")]
    Normalization { detail: String },

    #[error("solver precondition violated: {detail}")]
    Precondition { detail: String },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
