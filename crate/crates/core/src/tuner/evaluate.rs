use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FitnessTarget, TuneConfig};
use super::TunerError;
use crate::cost::account;
use crate::harness::{compare, execute_elf, Bench, Execution, OracleVerdict, Program, RunStatus};
use crate::toolchain::{OptProfile, ProfileKind};

/// Candidate fitness. Failures are a separate state, never a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fitness {
    Finite(u64),
    Infinite,
}

impl Fitness {
    pub fn cycles(self) -> Option<u64> {
        match self {
            Fitness::Finite(c) => Some(c),
            Fitness::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Fitness::Finite(_))
    }
}

impl std::fmt::Display for Fitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fitness::Finite(c) => write!(f, "{c} cycles"),
            Fitness::Infinite => f.write_str("infinite"),
        }
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Fitness::Finite(a), Fitness::Finite(b)) => a.cmp(b),
            (Fitness::Finite(_), Fitness::Infinite) => Ordering::Less,
            (Fitness::Infinite, Fitness::Finite(_)) => Ordering::Greater,
            (Fitness::Infinite, Fitness::Infinite) => Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum EvalStatus {
    Ok,
    BuildFailed(String),
    RunFailed(String),
    LimitReached,
    Diverged(String),
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub passes: Vec<String>,
    #[serde(flatten)]
    pub status: EvalStatus,
    pub fitness: Fitness,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub proving_seconds: Option<f64>,
    pub artifact: Option<String>,
    /// True when the result came from an earlier evaluation of the same
    /// sequence or the same binary.
    pub cached: bool,
}

/// Deterministic ranking: fitness, then shorter sequence, then pass order.
pub fn rank(a: &Evaluation, b: &Evaluation) -> Ordering {
    a.fitness
        .cmp(&b.fitness)
        .then(a.passes.len().cmp(&b.passes.len()))
        .then_with(|| a.passes.cmp(&b.passes))
}

/// A divergent candidate, kept as an oracle finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFinding {
    pub passes: Vec<String>,
    pub artifact: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone)]
struct Outcome {
    status: EvalStatus,
    fitness: Fitness,
}

/// Builds and scores candidates of one program against its baseline run.
pub struct Evaluator<'a> {
    bench: &'a Bench<'a>,
    program: &'a Program,
    config: &'a TuneConfig,
    baseline: Execution,
    baseline_cycles: u64,
    limit: u64,
    by_sequence: BTreeMap<Vec<String>, Result<String, String>>,
    by_artifact: BTreeMap<String, Outcome>,
    findings: Vec<OracleFinding>,
}

impl<'a> Evaluator<'a> {
    /// Builds and runs the baseline, which every candidate is compared with.
    pub fn new(bench: &'a Bench<'a>, program: &'a Program, config: &'a TuneConfig) -> Result<Self, TunerError> {
        let (_, baseline) = bench.execute(program, &OptProfile::baseline());
        let trace = match (&baseline.status, &baseline.trace) {
            (RunStatus::Exited(_), Some(t)) => t,
            (status, _) => {
                return Err(TunerError::BaselineBuildFailed(format!(
                    "{}: {}",
                    status.label(),
                    status.detail().unwrap_or("")
                )))
            }
        };
        let baseline_cycles = account(trace, &config.model).total;
        let limit = config.limit.unwrap_or_else(|| (trace.retired.saturating_mul(10)).max(1_000_000));
        Ok(Evaluator {
            bench,
            program,
            config,
            baseline,
            baseline_cycles,
            limit,
            by_sequence: BTreeMap::new(),
            by_artifact: BTreeMap::new(),
            findings: Vec::new(),
        })
    }

    pub fn baseline_cycles(&self) -> u64 {
        self.baseline_cycles
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn findings(&self) -> &[OracleFinding] {
        &self.findings
    }

    pub fn evaluate(&mut self, passes: &[String]) -> Evaluation {
        self.evaluate_batch(&[passes.to_vec()]).pop().expect("one result")
    }

    /// Evaluates a batch. Builds and runs of new sequences happen in
    /// parallel; results and cache flags depend only on batch order.
    pub fn evaluate_batch(&mut self, batch: &[Vec<String>]) -> Vec<Evaluation> {
        let mut fresh: Vec<&Vec<String>> = Vec::new();
        for p in batch {
            if !self.by_sequence.contains_key(p) && !fresh.contains(&p) {
                fresh.push(p);
            }
        }
        let built: Vec<Result<(String, Vec<u8>), String>> = self.install(|| {
            fresh
                .par_iter()
                .map(|p| {
                    self.bench
                        .build(self.program, &OptProfile::passes(p.iter().cloned()))
                        .map(|a| (a.hash.clone(), a.elf.clone()))
                })
                .collect()
        });

        let mut to_run: Vec<(String, Vec<u8>)> = Vec::new();
        for (p, b) in fresh.iter().zip(built) {
            let entry = match b {
                Ok((hash, elf)) => {
                    if !self.by_artifact.contains_key(&hash) && !to_run.iter().any(|(h, _)| *h == hash) {
                        to_run.push((hash.clone(), elf));
                    }
                    Ok(hash)
                }
                Err(e) => Err(e),
            };
            self.by_sequence.insert((*p).clone(), entry);
        }
        let outcomes: Vec<Outcome> = self.install(|| {
            to_run
                .par_iter()
                .map(|(_, elf)| self.score(&execute_elf(elf, self.limit, &self.bench.registry)))
                .collect()
        });
        let mut new_hashes = Vec::new();
        for ((hash, _), o) in to_run.into_iter().zip(outcomes) {
            new_hashes.push(hash.clone());
            self.by_artifact.insert(hash, o);
        }

        let mut seen_now: Vec<&Vec<String>> = Vec::new();
        let mut hashes_now: Vec<String> = Vec::new();
        let mut out = Vec::with_capacity(batch.len());
        for p in batch {
            let first_of_seq = fresh.contains(&p) && !seen_now.contains(&p);
            seen_now.push(p);
            let eval = match self.by_sequence[p].clone() {
                Err(e) => Evaluation {
                    passes: p.clone(),
                    status: EvalStatus::BuildFailed(e),
                    fitness: Fitness::Infinite,
                    proving_seconds: None,
                    artifact: None,
                    cached: !first_of_seq,
                },
                Ok(hash) => {
                    let o = self.by_artifact[&hash].clone();
                    let first_of_hash = new_hashes.contains(&hash) && !hashes_now.contains(&hash);
                    hashes_now.push(hash.clone());
                    if let (EvalStatus::Diverged(d), true) = (&o.status, first_of_hash) {
                        self.findings.push(OracleFinding {
                            passes: p.clone(),
                            artifact: Some(hash.clone()),
                            detail: d.clone(),
                        });
                    }
                    Evaluation {
                        passes: p.clone(),
                        proving_seconds: self.proving(o.fitness),
                        status: o.status,
                        fitness: o.fitness,
                        artifact: Some(hash),
                        cached: !(first_of_seq && first_of_hash),
                    }
                }
            };
            out.push(eval);
        }
        out
    }

    fn proving(&self, f: Fitness) -> Option<f64> {
        match (self.config.target, f) {
            (FitnessTarget::ProvingSeconds { estimator }, Fitness::Finite(c)) => Some(estimator.estimate_cycles(c)),
            _ => None,
        }
    }

    fn score(&self, exec: &Execution) -> Outcome {
        let infinite = |status| Outcome { status, fitness: Fitness::Infinite };
        match &exec.status {
            RunStatus::LimitReached => return infinite(EvalStatus::LimitReached),
            RunStatus::Fault(d) | RunStatus::LoadFailed(d) => return infinite(EvalStatus::RunFailed(d.clone())),
            RunStatus::BuildFailed(d) => return infinite(EvalStatus::BuildFailed(d.clone())),
            RunStatus::Exited(_) => {}
        }
        match compare(&self.baseline, exec) {
            OracleVerdict::Equivalent => {
                let trace = exec.trace.as_ref().expect("exited runs carry a trace");
                Outcome { status: EvalStatus::Ok, fitness: Fitness::Finite(account(trace, &self.config.model).total) }
            }
            OracleVerdict::Divergent { detail, .. } | OracleVerdict::Inconclusive { detail } => {
                infinite(EvalStatus::Diverged(detail))
            }
        }
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match self.config.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
                .install(f),
            None => f(),
        }
    }

    /// Builds and scores a non-sequence profile (standard levels). Not part
    /// of any search budget.
    pub fn evaluate_profile(&mut self, profile: &OptProfile) -> Evaluation {
        if let ProfileKind::PassSequence { passes } = &profile.kind {
            return self.evaluate(passes);
        }
        let (art, exec) = self.bench.execute(self.program, profile);
        let o = self.score(&exec);
        Evaluation {
            passes: Vec::new(),
            proving_seconds: self.proving(o.fitness),
            status: o.status,
            fitness: o.fitness,
            artifact: art.map(|a| a.hash.clone()),
            cached: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(passes: &[&str], f: Fitness) -> Evaluation {
        Evaluation {
            passes: passes.iter().map(|s| s.to_string()).collect(),
            status: EvalStatus::Ok,
            fitness: f,
            proving_seconds: None,
            artifact: None,
            cached: false,
        }
    }

    #[test]
    fn infinite_sorts_last() {
        assert!(Fitness::Finite(u64::MAX) < Fitness::Infinite);
        assert!(Fitness::Finite(1) < Fitness::Finite(2));
    }

    #[test]
    fn ranking_ties() {
        let a = ev(&["licm"], Fitness::Finite(10));
        let b = ev(&["gvn", "dce"], Fitness::Finite(10));
        let c = ev(&["dce"], Fitness::Finite(10));
        let d = ev(&[], Fitness::Finite(9));
        let mut v = vec![a.clone(), b.clone(), c.clone(), d.clone()];
        v.sort_by(rank);
        assert_eq!(v, vec![d, c, a, b]);
    }

    #[test]
    fn evaluation_json_keeps_status_out_of_fitness() {
        let mut e = ev(&["licm"], Fitness::Infinite);
        e.status = EvalStatus::Diverged("output".into());
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"fitness\":\"infinite\""), "{json}");
        assert_eq!(serde_json::from_str::<Evaluation>(&json).unwrap(), e);
    }
}
