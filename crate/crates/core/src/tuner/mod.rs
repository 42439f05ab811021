//! Genetic search over optimizer pass sequences with emulated cycles as the
//! fitness, and frequency mining of the best and worst sequences found.

mod config;
mod evaluate;
mod ga;
mod mine;

use thiserror::Error;

pub use config::{FitnessTarget, TuneConfig, LONG_ITERATIONS};
pub use evaluate::{rank, EvalStatus, Evaluation, Evaluator, Fitness, OracleFinding};
pub use ga::{tune, TuneResult};
pub use mine::{count_grams, mine_subsequences, GramCount, MiningTables, PoolTables};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TunerError {
    #[error("invalid tuner configuration: {0}")]
    ConfigInvalid(String),
    #[error("baseline build or run failed: {0}")]
    BaselineBuildFailed(String),
    #[error("`{program}` has {available} finite candidates, {requested} requested")]
    InsufficientCandidates { program: String, available: usize, requested: usize },
    #[error("tuning log: {0}")]
    Log(String),
}
