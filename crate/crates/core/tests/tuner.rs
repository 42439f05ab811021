use std::path::PathBuf;

use zkopt::harness::{Bench, Program};
use zkopt::toolchain::{Toolchain, ToolchainConfig};
use zkopt::tuner::{tune, EvalStatus, Evaluator, Fitness, TuneConfig, TuneResult};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/src").join(name)
}

fn small_config(seed: u64) -> TuneConfig {
    TuneConfig { iterations: 24, population: 6, max_depth: 5, seed, compare_levels: false, ..TuneConfig::default() }
}

#[test]
fn empty_sequence_scores_exactly_the_baseline() {
    let tc = Toolchain::new(ToolchainConfig::default()).unwrap();
    let bench = Bench::new(Some(&tc));
    let program = Program::from_source("spill", corpus("spill.c")).with_define("ITERS", "50");
    let config = TuneConfig::default();
    let mut ev = Evaluator::new(&bench, &program, &config).unwrap();
    let e = ev.evaluate(&[]);
    assert_eq!(e.status, EvalStatus::Ok);
    assert_eq!(e.fitness, Fitness::Finite(ev.baseline_cycles()));
    let again = ev.evaluate(&[]);
    assert!(again.cached);
    assert_eq!(again.fitness, e.fitness);
    let singles: Vec<Vec<String>> = tc.catalog().names().map(|n| vec![n.to_string()]).collect();
    let swept = ev.evaluate_batch(&singles);
    assert_eq!(swept.len(), singles.len());
    let best = swept.iter().map(|s| s.fitness).min().unwrap();
    assert!(best < e.fitness, "no single pass beats the baseline: {best:?}");
}

#[test]
fn small_search_is_reproducible_and_monotone() {
    let tc = Toolchain::new(ToolchainConfig::default()).unwrap();
    let bench = Bench::new(Some(&tc));
    let program = Program::from_source("spill", corpus("spill.c")).with_define("ITERS", "50");
    let a = tune(&bench, &program, &small_config(7)).unwrap();
    let b = tune(&bench, &program, &small_config(7)).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    assert_eq!(a.log.len(), 24);
    assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
    assert!(a.log.iter().all(|e| e.passes.len() <= 5));
    assert_eq!(*a.history.last().unwrap(), a.best.fitness);
    assert!(a.log.iter().all(|e| e.fitness >= a.best.fitness));
    let parsed = TuneResult::from_jsonl(a.to_jsonl().as_bytes()).unwrap();
    assert_eq!(parsed, a);

    let fresh_config = small_config(7);
    let mut ev = Evaluator::new(&bench, &program, &fresh_config).unwrap();
    assert_eq!(ev.evaluate(&a.best.passes).fitness, a.best.fitness);
}

#[test]
fn baseline_failure_is_reported() {
    let tc = Toolchain::new(ToolchainConfig::default()).unwrap();
    let bench = Bench::new(Some(&tc));
    let program = Program::from_source("missing", "/no/such/source.c");
    assert!(matches!(
        tune(&bench, &program, &small_config(1)),
        Err(zkopt::tuner::TunerError::BaselineBuildFailed(_))
    ));
}
