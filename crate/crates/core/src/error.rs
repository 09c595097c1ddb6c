use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("range overflow: {0}")]
    RangeOverflow(String),

    #[error("{h} is not invertible modulo {k}")]
    NotInvertible { h: i64, k: u64 },

    #[error("non-finite argument {0}")]
    NonFinite(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("order {order} exceeds the limit {max}")]
    OrderTooLarge { order: u64, max: u64 },

    #[error("averaging window too wide: U = {u} but the limit is {limit}")]
    AveragingWindowTooWide { u: f64, limit: f64 },

    #[error("partition depth {given} too small; at least {required} levels are needed")]
    PartitionTooShallow { given: usize, required: usize },

    #[error("smoothed sum requested without a weight function")]
    WeightMissing,

    #[error("B1 not bounded away from zero: the phase has a saddle point in [{a}, {b}]")]
    SaddleInside { a: f64, b: f64 },

    #[error("outside the hypotheses: {0}")]
    OutsideHypotheses(String),

    #[error("insufficient spread: {0}")]
    InsufficientSpread(String),

    #[error("numeric budget exhausted: {0}")]
    BudgetExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
