use thiserror::Error;

use crate::sim::plan::RatePlan;

/// Errors produced by the covertkey kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("distributions are over different alphabets ({left} vs {right} symbols)")]
    SupportMismatch { left: usize, right: usize },

    #[error("absolute continuity violated at symbol {index}: p = {p} but q = 0")]
    AbsoluteContinuityViolation { index: usize, p: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("axis {0} appears in more than one axis group")]
    AxisOverlap(usize),

    #[error("axis {axis} out of range for a joint with {rank} axes")]
    InvalidAxis { axis: usize, rank: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("sum law has {atoms} distinct atoms, above the cap of {cap}")]
    Overflow { atoms: usize, cap: usize },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("every region in the sweep collapses to the origin")]
    EmptyRegion,

    #[error("rate plan is infeasible after integer rounding: {}", .0.failure_summary())]
    InfeasiblePlan(Box<RatePlan>),

    #[error("enumeration needs {required} terms, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("invalid channel description: {0}")]
    InvalidChannel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
