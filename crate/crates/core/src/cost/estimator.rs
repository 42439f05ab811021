use serde::{Deserialize, Serialize};

use super::account::CycleBreakdown;
use super::CostError;
use crate::stats::{least_squares, pearson, StatsError};

/// Linear proving-time model `seconds = intercept + slope * total_cycles`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvingEstimator {
    pub intercept: f64,
    pub slope: f64,
}

/// Default minimum Pearson coefficient accepted by [`fit_estimator`].
pub const DEFAULT_CORRELATION_FLOOR: f64 = 0.9;

impl ProvingEstimator {
    pub fn new(intercept: f64, slope: f64) -> Result<Self, CostError> {
        if !(slope >= 0.0) || !intercept.is_finite() || !slope.is_finite() {
            return Err(CostError::InvalidEstimator { intercept, slope });
        }
        Ok(ProvingEstimator { intercept, slope })
    }

    pub fn estimate_cycles(&self, total_cycles: u64) -> f64 {
        self.intercept + self.slope * total_cycles as f64
    }
}

pub fn estimate_proving(breakdown: &CycleBreakdown, est: &ProvingEstimator) -> f64 {
    est.estimate_cycles(breakdown.total)
}

/// A fitted estimator and the correlation of the data it was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorFit {
    pub estimator: ProvingEstimator,
    pub pearson: f64,
}

/// Least-squares fit of `(cycles, seconds)` samples.
///
/// Refuses data whose Pearson coefficient is below `floor` (signed, so any
/// negative slope is rejected) or whose correlation is undefined.
pub fn fit_estimator(samples: &[(u64, f64)], floor: f64) -> Result<EstimatorFit, CostError> {
    if samples.len() < 2 {
        return Err(CostError::DegenerateSamples);
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0 as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (intercept, slope) = match least_squares(&xs, &ys) {
        Ok(fit) => fit,
        Err(StatsError::ZeroVariance) => return Err(CostError::DegenerateSamples),
        Err(e) => return Err(CostError::Stats(e)),
    };
    let r = match pearson(&xs, &ys) {
        Ok(r) => r,
        Err(StatsError::ZeroVariance) => return Err(CostError::WeakCorrelation { pearson: 0.0, floor }),
        Err(e) => return Err(CostError::Stats(e)),
    };
    if r < floor || slope < 0.0 {
        return Err(CostError::WeakCorrelation { pearson: r, floor });
    }
    Ok(EstimatorFit {
        estimator: ProvingEstimator::new(intercept, slope)?,
        pearson: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn breakdown(total: u64) -> CycleBreakdown {
        CycleBreakdown {
            compute: total,
            paging: 0,
            total,
            per_class: BTreeMap::new(),
            page_ins: 0,
            page_outs: 0,
        }
    }

    #[test]
    fn linear_evaluation() {
        let est = ProvingEstimator::new(0.0, 1e-6).unwrap();
        assert!((estimate_proving(&breakdown(1_000_000), &est) - 1.0).abs() < 1e-12);
        let flat = ProvingEstimator::new(3.5, 0.0).unwrap();
        for t in [0, 10, 1 << 40] {
            assert_eq!(estimate_proving(&breakdown(t), &flat), 3.5);
        }
    }

    #[test]
    fn negative_slope_is_invalid() {
        assert!(ProvingEstimator::new(0.0, -1.0).is_err());
    }

    #[test]
    fn fit_exact_line() {
        let fit = fit_estimator(&[(1, 2.0), (2, 4.0), (3, 6.0)], DEFAULT_CORRELATION_FLOOR).unwrap();
        assert!(fit.estimator.intercept.abs() < 1e-12);
        assert!((fit.estimator.slope - 2.0).abs() < 1e-12);
        assert!((fit.pearson - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_degenerate() {
        assert_eq!(
            fit_estimator(&[(1, 1.0), (1, 2.0)], 0.9),
            Err(CostError::DegenerateSamples)
        );
        assert_eq!(fit_estimator(&[(1, 1.0)], 0.9), Err(CostError::DegenerateSamples));
    }

    #[test]
    fn fit_rejects_negative_slope() {
        // Hand least squares: mean x 2, mean y 4, Sxy = -4, Sxx = 2, slope -2, r = -1.
        let err = fit_estimator(&[(1, 6.0), (2, 4.0), (3, 2.0)], 0.9).unwrap_err();
        match err {
            CostError::WeakCorrelation { pearson, .. } => assert!((pearson + 1.0).abs() < 1e-12),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn fit_rejects_weak_correlation() {
        let samples = [(1, 1.0), (2, 3.0), (3, 1.0), (4, 3.0), (5, 2.0)];
        assert!(matches!(
            fit_estimator(&samples, 0.9),
            Err(CostError::WeakCorrelation { .. })
        ));
    }
}
