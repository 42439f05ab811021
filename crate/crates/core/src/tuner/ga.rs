use std::collections::BTreeMap;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TuneConfig;
use super::evaluate::{rank, Evaluation, Evaluator, Fitness, OracleFinding};
use super::TunerError;
use crate::harness::{Bench, Program};
use crate::toolchain::{OptLevel, OptProfile};

/// Outcome of one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub program: String,
    pub model: String,
    pub seed: u64,
    pub iterations: usize,
    pub baseline: u64,
    pub best: Evaluation,
    /// Best fitness seen so far, recorded after each generation.
    pub history: Vec<Fitness>,
    /// Every evaluation in the order it was charged to the budget.
    pub log: Vec<Evaluation>,
    /// Standard levels, evaluated outside the budget.
    pub levels: BTreeMap<OptLevel, Evaluation>,
    pub findings: Vec<OracleFinding>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Record {
    Header { program: String, model: String, seed: u64, iterations: usize, baseline: u64 },
    Evaluation(Evaluation),
    Level { level: OptLevel, #[serde(flatten)] evaluation: Evaluation },
    Finding(OracleFinding),
    Summary { best: Evaluation, history: Vec<Fitness> },
}

impl TuneResult {
    /// JSON lines: a header, one record per evaluation, level comparisons,
    /// oracle findings and a closing summary.
    pub fn to_jsonl(&self) -> String {
        let mut records = vec![Record::Header {
            program: self.program.clone(),
            model: self.model.clone(),
            seed: self.seed,
            iterations: self.iterations,
            baseline: self.baseline,
        }];
        records.extend(self.log.iter().cloned().map(Record::Evaluation));
        records.extend(
            self.levels
                .iter()
                .map(|(level, e)| Record::Level { level: *level, evaluation: e.clone() }),
        );
        records.extend(self.findings.iter().cloned().map(Record::Finding));
        records.push(Record::Summary { best: self.best.clone(), history: self.history.clone() });
        let mut out = String::new();
        for r in records {
            out.push_str(&serde_json::to_string(&r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(input: impl BufRead) -> Result<Self, TunerError> {
        let mut header = None;
        let mut summary = None;
        let mut log = Vec::new();
        let mut levels = BTreeMap::new();
        let mut findings = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| TunerError::Log(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| TunerError::Log(format!("line {}: {e}", i + 1)))?;
            match rec {
                Record::Header { program, model, seed, iterations, baseline } => {
                    header = Some((program, model, seed, iterations, baseline))
                }
                Record::Evaluation(e) => log.push(e),
                Record::Level { level, evaluation } => {
                    levels.insert(level, evaluation);
                }
                Record::Finding(f) => findings.push(f),
                Record::Summary { best, history } => summary = Some((best, history)),
            }
        }
        let (program, model, seed, iterations, baseline) =
            header.ok_or_else(|| TunerError::Log("missing header record".into()))?;
        let (best, history) = summary.ok_or_else(|| TunerError::Log("missing summary record".into()))?;
        Ok(TuneResult { program, model, seed, iterations, baseline, best, history, log, levels, findings })
    }
}

struct Search<'c> {
    config: &'c TuneConfig,
    names: Vec<String>,
    rng: ChaCha8Rng,
}

impl Search<'_> {
    fn random_pass(&mut self) -> String {
        self.names[self.rng.gen_range(0..self.names.len())].clone()
    }

    fn random_sequence(&mut self) -> Vec<String> {
        let len = self.rng.gen_range(0..=self.config.max_depth);
        (0..len).map(|_| self.random_pass()).collect()
    }

    fn tournament<'p>(&mut self, pop: &'p [Evaluation]) -> &'p Evaluation {
        let mut best = &pop[self.rng.gen_range(0..pop.len())];
        for _ in 1..self.config.tournament {
            let other = &pop[self.rng.gen_range(0..pop.len())];
            if rank(other, best).is_lt() {
                best = other;
            }
        }
        best
    }

    fn crossover(&mut self, a: &[String], b: &[String]) -> Vec<String> {
        let cut_a = self.rng.gen_range(0..=a.len());
        let cut_b = self.rng.gen_range(0..=b.len());
        let mut child: Vec<String> = a[..cut_a].iter().chain(&b[cut_b..]).cloned().collect();
        child.truncate(self.config.max_depth);
        child
    }

    fn mutate(&mut self, seq: &mut Vec<String>) {
        let can_grow = seq.len() < self.config.max_depth;
        let op = self.rng.gen_range(0..3);
        match op {
            0 if !seq.is_empty() => {
                let i = self.rng.gen_range(0..seq.len());
                seq[i] = self.random_pass();
            }
            2 if !seq.is_empty() => {
                let i = self.rng.gen_range(0..seq.len());
                seq.remove(i);
            }
            _ if can_grow => {
                let i = self.rng.gen_range(0..=seq.len());
                let p = self.random_pass();
                seq.insert(i, p);
            }
            _ => {
                let i = self.rng.gen_range(0..seq.len());
                seq[i] = self.random_pass();
            }
        }
    }
}

/// Genetic search over pass sequences for one program.
///
/// The random stream lives on this thread only; candidate builds and runs
/// may fan out, but their results are consumed in a fixed order.
pub fn tune(bench: &Bench, program: &Program, config: &TuneConfig) -> Result<TuneResult, TunerError> {
    config.validate()?;
    let mut evaluator = Evaluator::new(bench, program, config)?;
    let mut search = Search {
        config,
        names: config.catalog.names().map(str::to_string).collect(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let mut log: Vec<Evaluation> = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<Evaluation> = None;

    let mut run_batch = |batch: Vec<Vec<String>>, log: &mut Vec<Evaluation>, best: &mut Option<Evaluation>| {
        let room = config.iterations - log.len();
        let batch: Vec<Vec<String>> = batch.into_iter().take(room).collect();
        let evals = evaluator.evaluate_batch(&batch);
        for e in &evals {
            if best.as_ref().map_or(true, |b| rank(e, b).is_lt()) {
                *best = Some(e.clone());
            }
        }
        log.extend(evals.iter().cloned());
        evals
    };

    let initial: Vec<Vec<String>> = (0..config.population).map(|_| search.random_sequence()).collect();
    let mut population = run_batch(initial, &mut log, &mut best);
    history.push(best.as_ref().expect("population is non-empty").fitness);

    while log.len() < config.iterations {
        population.sort_by(rank);
        let elites: Vec<Evaluation> = population.iter().take(config.elitism).cloned().collect();
        let mut children = Vec::new();
        while elites.len() + children.len() < config.population {
            let a = search.tournament(&population).passes.clone();
            let b = search.tournament(&population).passes.clone();
            let mut child = search.crossover(&a, &b);
            if search.rng.gen_bool(config.mutation_rate) {
                search.mutate(&mut child);
            }
            children.push(child);
        }
        let evaluated = run_batch(children, &mut log, &mut best);
        population = elites.into_iter().chain(evaluated).collect();
        history.push(best.as_ref().expect("best exists").fitness);
    }

    let levels = if config.compare_levels {
        OptLevel::ALL
            .into_iter()
            .map(|l| (l, evaluator.evaluate_profile(&OptProfile::level(l))))
            .collect()
    } else {
        BTreeMap::new()
    };

    Ok(TuneResult {
        program: program.id.clone(),
        model: config.model.name().to_string(),
        seed: config.seed,
        iterations: config.iterations,
        baseline: evaluator.baseline_cycles(),
        best: best.expect("at least one evaluation"),
        history,
        log,
        levels,
        findings: evaluator.findings().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolchain::PassCatalog;

    fn search(depth: usize, seed: u64) -> Search<'static> {
        let config = Box::leak(Box::new(TuneConfig { max_depth: depth, ..TuneConfig::default() }));
        Search {
            names: config.catalog.names().map(str::to_string).collect(),
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    #[test]
    fn operators_respect_depth() {
        let mut s = search(4, 1);
        for _ in 0..500 {
            let a = s.random_sequence();
            let b = s.random_sequence();
            assert!(a.len() <= 4 && b.len() <= 4);
            let mut c = s.crossover(&a, &b);
            assert!(c.len() <= 4);
            s.mutate(&mut c);
            assert!(c.len() <= 4);
        }
    }

    #[test]
    fn mutation_changes_length_by_at_most_one() {
        let mut s = search(20, 3);
        for _ in 0..200 {
            let mut seq = s.random_sequence();
            let before = seq.len();
            s.mutate(&mut seq);
            assert!(seq.len().abs_diff(before) <= 1);
        }
        let mut empty = Vec::new();
        s.mutate(&mut empty);
        assert_eq!(empty.len(), 1);
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let a: Vec<_> = (0..20).map({
            let mut s = search(20, 7);
            move |_| s.random_sequence()
        }).collect();
        let b: Vec<_> = (0..20).map({
            let mut s = search(20, 7);
            move |_| s.random_sequence()
        }).collect();
        assert_eq!(a, b);
        assert!(PassCatalog::default_catalog().len() > 1);
    }
}
