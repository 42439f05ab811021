use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::correlate::correlate;
use super::impact::{count_outcomes, impact_with, ImpactCategory, ImpactRow, ImpactThresholds, Metric};
use super::runner::MetricsRow;
use super::HarnessError;
use crate::analyzer::Finding;
use crate::stats::{mean, std_dev};

pub const METRICS_SCHEMA: &str = "# zkopt metrics v1";
pub const IMPACT_SCHEMA: &str = "# zkopt impact v1; percent = (baseline - value) / baseline * 100, positive is better";

const METRICS_COLUMNS: [&str; 17] = [
    "program",
    "profile",
    "model",
    "artifact",
    "status",
    "exit_code",
    "retired",
    "compute",
    "paging",
    "total",
    "page_ins",
    "page_outs",
    "emu_seconds",
    "proving_seconds",
    "native_seconds",
    "output_hash",
    "detail",
];

const IMPACT_COLUMNS: [&str; 8] = ["program", "profile", "model", "metric", "baseline", "value", "percent", "category"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    MetricsCsv,
    ImpactCsv,
    Summary,
}

/// Autotuned result next to the best standard level for one program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerComparison {
    pub program: String,
    pub model: String,
    pub tuned_cycles: u64,
    pub o3_cycles: u64,
    pub best_sequence: Vec<String>,
}

impl TunerComparison {
    pub fn speedup(&self) -> f64 {
        self.o3_cycles as f64 / self.tuned_cycles as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportOptions {
    pub metric: Option<Metric>,
    pub thresholds: ImpactThresholds,
    pub tuner: Vec<TunerComparison>,
    /// Static findings per program, rendered as their own section.
    pub findings: Vec<(String, Finding)>,
}

impl ReportOptions {
    fn metric(&self) -> Metric {
        self.metric.unwrap_or(Metric::TotalCycles)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn first_line(s: &str) -> String {
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    line.chars().take(200).collect()
}

fn csv_bytes(schema: &str, header: &[&str], records: Vec<Vec<String>>) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "{schema}").unwrap();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).unwrap();
    for r in records {
        w.write_record(&r).unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

/// Impact of every non-baseline row against the baseline row of the same
/// program and model. Rows without a usable value are skipped.
pub fn impact_rows(rows: &[MetricsRow], metric: Metric, thresholds: &ImpactThresholds) -> Vec<ImpactRow> {
    let baselines: BTreeMap<(&str, &str), &MetricsRow> = rows
        .iter()
        .filter(|r| r.profile == "baseline")
        .map(|r| ((r.program.as_str(), r.model.as_str()), r))
        .collect();
    rows.iter()
        .filter(|r| r.profile != "baseline")
        .filter_map(|r| {
            let base = baselines.get(&(r.program.as_str(), r.model.as_str()))?;
            impact_with(base, r, metric, thresholds).ok()
        })
        .collect()
}

pub fn emit_report(rows: &[MetricsRow], format: ReportFormat, options: &ReportOptions) -> Vec<u8> {
    match format {
        ReportFormat::MetricsCsv => metrics_csv(rows),
        ReportFormat::ImpactCsv => impact_csv(&impact_rows(rows, options.metric(), &options.thresholds)),
        ReportFormat::Summary => summary(rows, options).into_bytes(),
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Vec<u8> {
    let records = rows
        .iter()
        .map(|r| {
            let b = r.breakdown.as_ref();
            vec![
                r.program.clone(),
                r.profile.clone(),
                r.model.clone(),
                opt(r.artifact.as_ref()),
                r.status.label().to_string(),
                opt(r.status.exit_code()),
                opt(r.retired),
                opt(b.map(|b| b.compute)),
                opt(b.map(|b| b.paging)),
                opt(b.map(|b| b.total)),
                opt(b.map(|b| b.page_ins)),
                opt(b.map(|b| b.page_outs)),
                format!("{:.6}", r.emu_seconds),
                opt(r.proving_seconds.map(|s| format!("{s:.6}"))),
                opt(r.native_seconds.map(|s| format!("{s:.6}"))),
                opt(r.output_hash.as_ref()),
                opt(r.status.detail().map(first_line)),
            ]
        })
        .collect();
    csv_bytes(METRICS_SCHEMA, &METRICS_COLUMNS, records)
}

pub fn impact_csv(rows: &[ImpactRow]) -> Vec<u8> {
    let records = rows
        .iter()
        .map(|r| {
            vec![
                r.program.clone(),
                r.profile.clone(),
                r.model.clone(),
                r.metric.name().to_string(),
                format!("{}", r.baseline),
                format!("{}", r.value),
                format!("{:.4}", r.percent),
                r.category.name().to_string(),
            ]
        })
        .collect();
    csv_bytes(IMPACT_SCHEMA, &IMPACT_COLUMNS, records)
}

fn summary(rows: &[MetricsRow], options: &ReportOptions) -> String {
    let metric = options.metric();
    let impacts = impact_rows(rows, metric, &options.thresholds);
    let mut s = String::new();
    writeln!(s, "# zkopt summary").unwrap();
    writeln!(s).unwrap();
    writeln!(s, "metric: {metric}").unwrap();
    writeln!(s, "impact percent: (baseline - value) / baseline * 100; positive is an improvement").unwrap();
    writeln!(
        s,
        "categories: severe >= {0}%, moderate > {1}%, neutral within [-{1}%, {1}%]",
        options.thresholds.severe, options.thresholds.moderate
    )
    .unwrap();
    writeln!(s, "averages: arithmetic mean of per-program percents").unwrap();
    writeln!(s, "rows: {} ({} failed)", rows.len(), rows.iter().filter(|r| !r.ok()).count()).unwrap();

    let mut by_model: BTreeMap<&str, Vec<&ImpactRow>> = BTreeMap::new();
    for r in &impacts {
        by_model.entry(&r.model).or_default().push(r);
    }
    for (model, list) in &by_model {
        writeln!(s, "\n## Per-profile impact, model {model}\n").unwrap();
        writeln!(
            s,
            "| profile | n | mean % | std % | severe-loss | moderate-loss | neutral | moderate-gain | severe-gain |"
        )
        .unwrap();
        writeln!(s, "|---|---|---|---|---|---|---|---|---|").unwrap();
        let mut by_profile: Vec<(&str, Vec<&ImpactRow>)> = Vec::new();
        for r in list {
            match by_profile.iter_mut().find(|(p, _)| *p == r.profile) {
                Some((_, v)) => v.push(r),
                None => by_profile.push((&r.profile, vec![r])),
            }
        }
        for (profile, group) in by_profile {
            let pct: Vec<f64> = group.iter().map(|r| r.percent).collect();
            let owned: Vec<ImpactRow> = group.iter().map(|r| (*r).clone()).collect();
            let t = count_outcomes(&owned).overall;
            let sd = if pct.len() > 1 { format!("{:.2}", std_dev(&pct)) } else { "-".into() };
            write!(s, "| {profile} | {} | {:.2} | {sd} |", pct.len(), mean(&pct)).unwrap();
            for c in ImpactCategory::ALL {
                write!(s, " {} |", t.category(c)).unwrap();
            }
            writeln!(s).unwrap();
        }
    }

    let tally = count_outcomes(&impacts);
    writeln!(s, "\n## Gains and losses\n").unwrap();
    writeln!(s, "| model | gains (>{0}%) | losses (<-{0}%) | neutral |", options.thresholds.moderate).unwrap();
    writeln!(s, "|---|---|---|---|").unwrap();
    for (model, c) in &tally.by_model {
        writeln!(s, "| {model} | {} | {} | {} |", c.gains, c.losses, c.neutral).unwrap();
    }

    writeln!(s, "\n## Correlation\n").unwrap();
    let mut models: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
    models.sort();
    models.dedup();
    for model in models {
        let ok: Vec<&MetricsRow> = rows.iter().filter(|r| r.model == model && r.ok()).collect();
        let cycles: Vec<f64> = ok.iter().map(|r| r.total_cycles().unwrap() as f64).collect();
        let pairs: [(&str, Vec<Option<f64>>); 2] = [
            ("emulation seconds", ok.iter().map(|r| Some(r.emu_seconds)).collect()),
            ("proving seconds", ok.iter().map(|r| r.proving_seconds).collect()),
        ];
        for (name, ys) in pairs {
            let line = match ys.iter().copied().collect::<Option<Vec<f64>>>() {
                Some(ys) => match correlate(&cycles, &ys) {
                    Ok(c) => format!("pearson {:.4}, spearman {:.4} (n = {})", c.pearson, c.spearman, ys.len()),
                    Err(e) => format!("n/a ({e})"),
                },
                None => "n/a (not measured)".to_string(),
            };
            writeln!(s, "- {model}: cycles vs {name}: {line}").unwrap();
        }
    }

    if !options.tuner.is_empty() {
        writeln!(s, "\n## Autotuning vs -O3\n").unwrap();
        writeln!(s, "| program | model | tuned cycles | O3 cycles | speedup | best sequence |").unwrap();
        writeln!(s, "|---|---|---|---|---|---|").unwrap();
        for t in &options.tuner {
            writeln!(
                s,
                "| {} | {} | {} | {} | {:.2}x | {} |",
                t.program,
                t.model,
                t.tuned_cycles,
                t.o3_cycles,
                t.speedup(),
                t.best_sequence.join(" ")
            )
            .unwrap();
        }
    }

    if !options.findings.is_empty() {
        writeln!(s, "\n## Static findings\n").unwrap();
        for (program, f) in &options.findings {
            writeln!(s, "- {program}: {f}").unwrap();
        }
    }

    let failed: Vec<&MetricsRow> = rows.iter().filter(|r| !r.ok()).collect();
    if !failed.is_empty() {
        writeln!(s, "\n## Failed rows\n").unwrap();
        for r in failed {
            writeln!(
                s,
                "- {} / {} / {}: {} {}",
                r.program,
                r.profile,
                r.model,
                r.status.label(),
                opt(r.status.detail().map(first_line))
            )
            .unwrap();
        }
    }
    s
}

/// Rows as JSON lines, the storage format `report` renders from.
pub fn write_rows_jsonl(rows: &[MetricsRow], mut out: impl Write) -> Result<(), HarnessError> {
    for r in rows {
        let line = serde_json::to_string(r).map_err(|e| HarnessError::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_rows_jsonl(input: impl BufRead) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line).map_err(|e| HarnessError::Io(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CycleBreakdown;
    use crate::harness::RunStatus;

    fn row(program: &str, profile: &str, total: u64) -> MetricsRow {
        MetricsRow {
            program: program.into(),
            profile: profile.into(),
            artifact: Some(format!("{program}-{profile}")),
            model: "r0-like".into(),
            status: RunStatus::Exited(0),
            retired: Some(total / 2),
            breakdown: Some(CycleBreakdown {
                compute: total,
                paging: 0,
                total,
                per_class: BTreeMap::new(),
                page_ins: 0,
                page_outs: 0,
            }),
            emu_seconds: total as f64 * 1e-6,
            proving_seconds: None,
            native_seconds: None,
            output_hash: None,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let text = String::from_utf8(emit_report(&[], ReportFormat::MetricsCsv, &ReportOptions::default())).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with(METRICS_SCHEMA));
        let text = String::from_utf8(emit_report(&[], ReportFormat::ImpactCsv, &ReportOptions::default())).unwrap();
        assert_eq!(text.lines().nth(1), Some(IMPACT_COLUMNS.join(",").as_str()));
    }

    #[test]
    fn impact_rows_pair_with_baseline() {
        let rows = vec![row("a", "baseline", 10000), row("a", "O3", 9000), row("b", "O3", 5)];
        let imp = impact_rows(&rows, Metric::TotalCycles, &ImpactThresholds::default());
        assert_eq!(imp.len(), 1);
        assert!((imp[0].percent - 10.0).abs() < 1e-12);
    }

    #[test]
    fn speedup_rendering() {
        let opts = ReportOptions {
            tuner: vec![TunerComparison {
                program: "p".into(),
                model: "r0-like".into(),
                tuned_cycles: 50_000,
                o3_cycles: 110_000,
                best_sequence: vec!["inline".into(), "mem2reg".into()],
            }],
            ..Default::default()
        };
        let text = String::from_utf8(emit_report(&[], ReportFormat::Summary, &opts)).unwrap();
        assert!(text.contains("| 50000 | 110000 | 2.20x | inline mem2reg |"), "{text}");
        assert!(!text.contains("Static findings"));
    }

    #[test]
    fn findings_section() {
        use crate::analyzer::{Insight, RuleId};
        let opts = ReportOptions {
            findings: vec![(
                "div".into(),
                Finding {
                    rule: RuleId::R1,
                    start: 0x100,
                    end: 0x110,
                    description: "shift sequence".into(),
                    delta: 4,
                    insight: Insight::I3,
                },
            )],
            ..Default::default()
        };
        let text = String::from_utf8(emit_report(&[], ReportFormat::Summary, &opts)).unwrap();
        assert!(text.contains("- div: R1 [I3] 0x00000100..0x00000110 +4 cycles: shift sequence"), "{text}");
    }

    #[test]
    fn jsonl_round_trip() {
        let mut rows = vec![row("a", "baseline", 10000), row("a", "O3", 9000)];
        rows.push(MetricsRow {
            status: RunStatus::BuildFailed("boom\nmore".into()),
            breakdown: None,
            ..row("a", "passes:licm", 1)
        });
        let mut buf = Vec::new();
        write_rows_jsonl(&rows, &mut buf).unwrap();
        assert_eq!(read_rows_jsonl(buf.as_slice()).unwrap(), rows);
    }
}
