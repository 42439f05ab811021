//! Corpus runs, impact metrics, correlation, native timing, the differential
//! oracle and report rendering.

mod correlate;
mod impact;
mod manifest;
mod native;
mod oracle;
mod report;
mod runner;

use thiserror::Error;

pub use correlate::{correlate, Correlation};
pub use impact::{
    categorize, count_outcomes, impact, impact_percent, impact_with, ImpactCategory, ImpactRow, ImpactThresholds,
    Metric, OutcomeCounts, OutcomeTally,
};
pub use manifest::{CorpusManifest, ManifestDefaults, Program, DEFAULT_LIMIT};
pub use native::{native_time, NativeConfig, NativeTiming};
pub use oracle::{compare, diff_oracle, inject_output_fault, DivergenceKind, OracleReport, OracleVerdict};
pub use report::{
    emit_report, impact_csv, impact_rows, metrics_csv, read_rows_jsonl, write_rows_jsonl, ReportFormat,
    ReportOptions, TunerComparison, IMPACT_SCHEMA, METRICS_SCHEMA,
};
pub use runner::{default_registry, execute_elf, Bench, Execution, MetricsRow, RunStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("rows are not comparable: baseline {baseline}, row {row}")]
    MismatchedRows { baseline: String, row: String },
    #[error("baseline {metric} of `{program}` is zero or missing")]
    ZeroBaseline { program: String, metric: Metric },
    #[error("`{program}` under {profile} has no {metric} value")]
    MissingValue { program: String, profile: String, metric: Metric },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("impact thresholds must satisfy 0 <= moderate < severe (got {moderate}, {severe})")]
    BadThresholds { moderate: f64, severe: f64 },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("host build failed: {0}")]
    HostBuildFailed(String),
    #[error("host run failed: {0}")]
    HostRunFailed(String),
    #[error("corpus manifest: {0}")]
    Manifest(String),
    #[error("fault injection: {0}")]
    Injection(String),
    #[error("i/o: {0}")]
    Io(String),
}
