use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::stats::{pearson, spearman};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

/// Pearson and Spearman coefficients of two equally long series (at least
/// three points, each with non-zero variance).
pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<Correlation, HarnessError> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(HarnessError::DegenerateSeries(format!(
            "need two series of equal length >= 3, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let degenerate = |e: crate::stats::StatsError| HarnessError::DegenerateSeries(e.to_string());
    Ok(Correlation {
        pearson: pearson(xs, ys).map_err(degenerate)?,
        spearman: spearman(xs, ys).map_err(degenerate)?,
    })
}
