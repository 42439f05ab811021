use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runner::MetricsRow;
use super::HarnessError;

/// A cost-like quantity of a row; lower is better for all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    TotalCycles,
    ComputeCycles,
    PagingCycles,
    ProvingSeconds,
    EmulationSeconds,
    NativeSeconds,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::TotalCycles,
        Metric::ComputeCycles,
        Metric::PagingCycles,
        Metric::ProvingSeconds,
        Metric::EmulationSeconds,
        Metric::NativeSeconds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TotalCycles => "total-cycles",
            Metric::ComputeCycles => "compute-cycles",
            Metric::PagingCycles => "paging-cycles",
            Metric::ProvingSeconds => "proving-seconds",
            Metric::EmulationSeconds => "emulation-seconds",
            Metric::NativeSeconds => "native-seconds",
        }
    }

    pub fn value(self, row: &MetricsRow) -> Option<f64> {
        if !row.ok() {
            return None;
        }
        let b = row.breakdown.as_ref()?;
        match self {
            Metric::TotalCycles => Some(b.total as f64),
            Metric::ComputeCycles => Some(b.compute as f64),
            Metric::PagingCycles => Some(b.paging as f64),
            Metric::ProvingSeconds => row.proving_seconds,
            Metric::EmulationSeconds => Some(row.emu_seconds),
            Metric::NativeSeconds => row.native_seconds,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpactCategory {
    SevereLoss,
    ModerateLoss,
    Neutral,
    ModerateGain,
    SevereGain,
}

impl ImpactCategory {
    pub const ALL: [ImpactCategory; 5] = [
        ImpactCategory::SevereLoss,
        ImpactCategory::ModerateLoss,
        ImpactCategory::Neutral,
        ImpactCategory::ModerateGain,
        ImpactCategory::SevereGain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImpactCategory::SevereLoss => "severe-loss",
            ImpactCategory::ModerateLoss => "moderate-loss",
            ImpactCategory::Neutral => "neutral",
            ImpactCategory::ModerateGain => "moderate-gain",
            ImpactCategory::SevereGain => "severe-gain",
        }
    }
}

/// Category boundaries in percent. The neutral band `[-moderate, moderate]`
/// is closed; `±severe` belong to the severe categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactThresholds {
    pub moderate: f64,
    pub severe: f64,
}

impl Default for ImpactThresholds {
    fn default() -> Self {
        ImpactThresholds { moderate: 2.0, severe: 5.0 }
    }
}

impl ImpactThresholds {
    pub fn new(moderate: f64, severe: f64) -> Result<Self, HarnessError> {
        if !(moderate >= 0.0 && severe > moderate && severe.is_finite()) {
            return Err(HarnessError::BadThresholds { moderate, severe });
        }
        Ok(ImpactThresholds { moderate, severe })
    }

    pub fn categorize(&self, percent: f64) -> ImpactCategory {
        if percent >= self.severe {
            ImpactCategory::SevereGain
        } else if percent > self.moderate {
            ImpactCategory::ModerateGain
        } else if percent >= -self.moderate {
            ImpactCategory::Neutral
        } else if percent > -self.severe {
            ImpactCategory::ModerateLoss
        } else {
            ImpactCategory::SevereLoss
        }
    }
}

/// Categorizes with the default ±2 / ±5 boundaries.
pub fn categorize(percent: f64) -> ImpactCategory {
    ImpactThresholds::default().categorize(percent)
}

/// Relative change of one profile against the baseline; positive = better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub program: String,
    pub profile: String,
    pub model: String,
    pub metric: Metric,
    pub baseline: f64,
    pub value: f64,
    pub percent: f64,
    pub category: ImpactCategory,
}

pub fn impact_percent(baseline: f64, value: f64) -> f64 {
    (baseline - value) / baseline * 100.0
}

pub fn impact(baseline: &MetricsRow, row: &MetricsRow, metric: Metric) -> Result<ImpactRow, HarnessError> {
    impact_with(baseline, row, metric, &ImpactThresholds::default())
}

pub fn impact_with(
    baseline: &MetricsRow,
    row: &MetricsRow,
    metric: Metric,
    thresholds: &ImpactThresholds,
) -> Result<ImpactRow, HarnessError> {
    if baseline.program != row.program || baseline.model != row.model {
        return Err(HarnessError::MismatchedRows {
            baseline: format!("{}/{}", baseline.program, baseline.model),
            row: format!("{}/{}", row.program, row.model),
        });
    }
    let base = metric
        .value(baseline)
        .filter(|v| *v > 0.0)
        .ok_or_else(|| HarnessError::ZeroBaseline { program: baseline.program.clone(), metric })?;
    let value = metric.value(row).ok_or_else(|| HarnessError::MissingValue {
        program: row.program.clone(),
        profile: row.profile.clone(),
        metric,
    })?;
    let percent = impact_percent(base, value);
    Ok(ImpactRow {
        program: row.program.clone(),
        profile: row.profile.clone(),
        model: row.model.clone(),
        metric,
        baseline: base,
        value,
        percent,
        category: thresholds.categorize(percent),
    })
}

/// Gain/loss tallies plus the per-category breakdown.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub gains: usize,
    pub losses: usize,
    pub neutral: usize,
    pub by_category: BTreeMap<ImpactCategory, usize>,
}

impl OutcomeCounts {
    fn add(&mut self, cat: ImpactCategory) {
        match cat {
            ImpactCategory::ModerateGain | ImpactCategory::SevereGain => self.gains += 1,
            ImpactCategory::ModerateLoss | ImpactCategory::SevereLoss => self.losses += 1,
            ImpactCategory::Neutral => self.neutral += 1,
        }
        *self.by_category.entry(cat).or_default() += 1;
    }

    pub fn category(&self, cat: ImpactCategory) -> usize {
        self.by_category.get(&cat).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTally {
    pub overall: OutcomeCounts,
    pub by_profile: BTreeMap<String, OutcomeCounts>,
    pub by_model: BTreeMap<String, OutcomeCounts>,
}

pub fn count_outcomes(rows: &[ImpactRow]) -> OutcomeTally {
    let mut t = OutcomeTally::default();
    for r in rows {
        t.overall.add(r.category);
        t.by_profile.entry(r.profile.clone()).or_default().add(r.category);
        t.by_model.entry(r.model.clone()).or_default().add(r.category);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CycleBreakdown;
    use crate::harness::RunStatus;

    pub(crate) fn row(program: &str, profile: &str, model: &str, total: u64) -> MetricsRow {
        MetricsRow {
            program: program.into(),
            profile: profile.into(),
            artifact: None,
            model: model.into(),
            status: RunStatus::Exited(0),
            retired: Some(total),
            breakdown: Some(CycleBreakdown {
                compute: total,
                paging: 0,
                total,
                per_class: BTreeMap::new(),
                page_ins: 0,
                page_outs: 0,
            }),
            emu_seconds: 0.0,
            proving_seconds: None,
            native_seconds: None,
            output_hash: None,
        }
    }

    fn pct(base: u64, v: u64) -> ImpactRow {
        impact(&row("p", "baseline", "m", base), &row("p", "x", "m", v), Metric::TotalCycles).unwrap()
    }

    #[test]
    fn worked_examples() {
        let r = pct(100, 94);
        assert!((r.percent - 6.0).abs() < 1e-12);
        assert_eq!(r.category, ImpactCategory::SevereGain);
        assert_eq!(pct(100, 100).category, ImpactCategory::Neutral);
        let r = pct(100, 102);
        assert_eq!(r.percent, -2.0);
        assert_eq!(r.category, ImpactCategory::Neutral);
    }

    #[test]
    fn boundaries() {
        let eps = 1e-9;
        let cases = [
            (-5.0, ImpactCategory::SevereLoss),
            (-5.0 + eps, ImpactCategory::ModerateLoss),
            (-2.0 - eps, ImpactCategory::ModerateLoss),
            (-2.0, ImpactCategory::Neutral),
            (0.0, ImpactCategory::Neutral),
            (2.0, ImpactCategory::Neutral),
            (2.0 + eps, ImpactCategory::ModerateGain),
            (5.0 - eps, ImpactCategory::ModerateGain),
            (5.0, ImpactCategory::SevereGain),
        ];
        for (p, c) in cases {
            assert_eq!(categorize(p), c, "{p}");
        }
    }

    #[test]
    fn errors() {
        let a = row("p", "baseline", "m", 100);
        assert!(matches!(
            impact(&a, &row("q", "x", "m", 1), Metric::TotalCycles),
            Err(HarnessError::MismatchedRows { .. })
        ));
        assert!(matches!(
            impact(&a, &row("p", "x", "other", 1), Metric::TotalCycles),
            Err(HarnessError::MismatchedRows { .. })
        ));
        assert!(matches!(
            impact(&row("p", "baseline", "m", 0), &a, Metric::TotalCycles),
            Err(HarnessError::ZeroBaseline { .. })
        ));
        assert!(impact(&a, &a, Metric::ProvingSeconds).is_err());
        assert!(ImpactThresholds::new(3.0, 1.0).is_err());
    }

    #[test]
    fn custom_thresholds() {
        let t = ImpactThresholds::new(1.0, 10.0).unwrap();
        assert_eq!(t.categorize(1.5), ImpactCategory::ModerateGain);
        assert_eq!(t.categorize(-10.0), ImpactCategory::SevereLoss);
    }

    #[test]
    fn tallies() {
        let rows: Vec<ImpactRow> = [94, 97, 103, 100].iter().map(|&v| pct(100, v)).collect();
        let t = count_outcomes(&rows);
        assert_eq!((t.overall.gains, t.overall.losses, t.overall.neutral), (2, 1, 1));
        assert_eq!(t.overall.category(ImpactCategory::SevereGain), 1);
        assert_eq!(t.by_profile["x"].gains, 2);
        assert_eq!(count_outcomes(&[]), OutcomeTally::default());
    }
}
