//! zkVM-style cycle accounting.
//!
//! Compute cycles come from a per-class table; paging cycles come from
//! replaying the words a run touched onto fixed-size pages, charging a page-in
//! on first touch and a page-out per dirty page at halt.

mod account;
mod estimator;
mod model;

use thiserror::Error;

use crate::isa::InstrClass;
use crate::stats::StatsError;

pub use account::{account, charge_access, finalize, CycleBreakdown, PageTracker};
pub use estimator::{
    estimate_proving, fit_estimator, EstimatorFit, ProvingEstimator, DEFAULT_CORRELATION_FLOOR,
};
pub use model::{
    instruction_cost, CostModel, DEFAULT_PAGE_SIZE, DEFAULT_PAGING_CYCLES, R0_LIKE, UNIFORM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cost model has no entry for class `{0}`")]
    MissingClass(InstrClass),
    #[error("page size {0} is not a power of two >= 4")]
    BadPageSize(u32),
    #[error("unknown cost model `{0}` (built-ins: uniform, r0-like)")]
    UnknownModel(String),
    #[error("cost model file: {0}")]
    Parse(String),
    #[error("need at least two samples with distinct cycle counts")]
    DegenerateSamples,
    #[error("correlation {pearson:.4} is below the floor {floor}")]
    WeakCorrelation { pearson: f64, floor: f64 },
    #[error("invalid estimator (intercept {intercept}, slope {slope})")]
    InvalidEstimator { intercept: f64, slope: f64 },
    #[error(transparent)]
    Stats(#[from] StatsError),
}
