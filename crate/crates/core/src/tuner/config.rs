use serde::{Deserialize, Serialize};

use super::TunerError;
use crate::cost::{CostModel, ProvingEstimator};
use crate::toolchain::PassCatalog;

/// What the search minimizes. Estimated proving time is a non-decreasing
/// linear function of total cycles, so both targets rank candidates alike;
/// the proving target additionally reports seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "kebab-case")]
pub enum FitnessTarget {
    #[default]
    Cycles,
    ProvingSeconds { estimator: ProvingEstimator },
}

/// Genetic-search settings.
#[derive(Debug, Clone)]
pub struct TuneConfig {
    pub catalog: PassCatalog,
    pub max_depth: usize,
    /// Budget in candidate evaluations, cache hits included.
    pub iterations: usize,
    pub population: usize,
    pub mutation_rate: f64,
    pub tournament: usize,
    pub elitism: usize,
    pub seed: u64,
    /// Instruction limit per candidate run; `None` means ten times the
    /// baseline's retired count (at least one million).
    pub limit: Option<u64>,
    pub target: FitnessTarget,
    pub model: CostModel,
    /// Whether to also evaluate the six standard levels for comparison.
    pub compare_levels: bool,
    /// Parallel evaluation width; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// Iteration budget of the long ("suite") mode.
pub const LONG_ITERATIONS: usize = 1600;

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            catalog: PassCatalog::default_catalog(),
            max_depth: 20,
            iterations: 160,
            population: 20,
            mutation_rate: 0.3,
            tournament: 2,
            elitism: 1,
            seed: 0,
            limit: None,
            target: FitnessTarget::Cycles,
            model: CostModel::r0_like(),
            compare_levels: true,
            jobs: None,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<(), TunerError> {
        let bad = |m: &str| Err(TunerError::ConfigInvalid(m.to_string()));
        if self.catalog.is_empty() {
            return bad("the pass catalog is empty");
        }
        if self.max_depth == 0 {
            return bad("max depth must be at least 1");
        }
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation rate must lie in [0, 1]");
        }
        if self.tournament == 0 {
            return bad("tournament size must be at least 1");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.limit == Some(0) {
            return bad("instruction limit must be positive");
        }
        Ok(())
    }
}
