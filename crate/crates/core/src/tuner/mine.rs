use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::evaluate::{rank, Evaluation};
use super::ga::TuneResult;
use super::TunerError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramCount {
    pub gram: Vec<String>,
    /// Number of sequences in the pool containing the gram at least once.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolTables {
    pub sequences: usize,
    pub unigrams: Vec<GramCount>,
    pub bigrams: Vec<GramCount>,
}

impl PoolTables {
    pub fn unigram(&self, pass: &str) -> usize {
        self.unigrams.iter().find(|g| g.gram == [pass]).map_or(0, |g| g.count)
    }

    pub fn bigram(&self, a: &str, b: &str) -> usize {
        self.bigrams.iter().find(|g| g.gram == [a, b]).map_or(0, |g| g.count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningTables {
    pub best: PoolTables,
    pub worst: PoolTables,
}

fn sorted(counts: BTreeMap<Vec<String>, usize>) -> Vec<GramCount> {
    let mut v: Vec<GramCount> = counts.into_iter().map(|(gram, count)| GramCount { gram, count }).collect();
    v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.gram.cmp(&b.gram)));
    v
}

/// Counts, for every gram of length 1 (and 2 when `n == 2`), how many
/// sequences of the pool contain it.
pub fn count_grams(pool: &[Vec<String>], n: usize) -> PoolTables {
    let mut uni: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut bi: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for seq in pool {
        let singles: BTreeSet<&String> = seq.iter().collect();
        for p in singles {
            *uni.entry(vec![p.clone()]).or_default() += 1;
        }
        if n >= 2 {
            let pairs: BTreeSet<&[String]> = seq.windows(2).collect();
            for w in pairs {
                *bi.entry(w.to_vec()).or_default() += 1;
            }
        }
    }
    PoolTables { sequences: pool.len(), unigrams: sorted(uni), bigrams: sorted(bi) }
}

/// Gram frequencies in the best and worst `k` distinct finite candidates of
/// each result.
pub fn mine_subsequences(results: &[TuneResult], k: usize, n: usize) -> Result<MiningTables, TunerError> {
    if !(1..=2).contains(&n) {
        return Err(TunerError::ConfigInvalid(format!("gram length must be 1 or 2, got {n}")));
    }
    if k == 0 {
        return Err(TunerError::ConfigInvalid("k must be at least 1".into()));
    }
    let mut best = Vec::new();
    let mut worst = Vec::new();
    for r in results {
        let mut seen = BTreeSet::new();
        let mut finite: Vec<&Evaluation> = r
            .log
            .iter()
            .filter(|e| e.fitness.is_finite() && seen.insert(e.passes.clone()))
            .collect();
        if finite.len() < k {
            return Err(TunerError::InsufficientCandidates {
                program: r.program.clone(),
                available: finite.len(),
                requested: k,
            });
        }
        finite.sort_by(|a, b| rank(a, b));
        best.extend(finite[..k].iter().map(|e| e.passes.clone()));
        worst.extend(finite[finite.len() - k..].iter().map(|e| e.passes.clone()));
    }
    Ok(MiningTables { best: count_grams(&best, n), worst: count_grams(&worst, n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuner::{EvalStatus, Fitness};

    fn seq(s: &[&str]) -> Vec<String> {
        s.iter().map(|p| p.to_string()).collect()
    }

    fn result(evals: Vec<(Vec<String>, Fitness)>) -> TuneResult {
        let log: Vec<Evaluation> = evals
            .into_iter()
            .map(|(passes, fitness)| Evaluation {
                passes,
                status: if fitness.is_finite() { EvalStatus::Ok } else { EvalStatus::LimitReached },
                fitness,
                proving_seconds: None,
                artifact: None,
                cached: false,
            })
            .collect();
        TuneResult {
            program: "p".into(),
            model: "m".into(),
            seed: 0,
            iterations: log.len(),
            baseline: 100,
            best: log[0].clone(),
            history: vec![],
            log,
            levels: BTreeMap::new(),
            findings: vec![],
        }
    }

    #[test]
    fn counting_example() {
        let t = count_grams(&[seq(&["inline", "licm"]), seq(&["inline"])], 2);
        assert_eq!(t.unigram("inline"), 2);
        assert_eq!(t.unigram("licm"), 1);
        assert_eq!(t.bigram("inline", "licm"), 1);
        assert_eq!(t.bigrams.len(), 1);
    }

    #[test]
    fn pools_from_results() {
        let r = result(vec![
            (seq(&["a", "b"]), Fitness::Finite(5)),
            (seq(&["c"]), Fitness::Finite(50)),
            (seq(&["a"]), Fitness::Finite(7)),
            (seq(&["d"]), Fitness::Infinite),
            (seq(&["a", "b"]), Fitness::Finite(5)),
        ]);
        let m = mine_subsequences(&[r.clone()], 1, 2).unwrap();
        assert_eq!(m.best.unigram("a"), 1);
        assert_eq!(m.best.bigram("a", "b"), 1);
        assert_eq!(m.worst.unigram("c"), 1);
        assert_eq!(m.worst.unigram("d"), 0);
        let only_unigrams = mine_subsequences(&[r.clone()], 2, 1).unwrap();
        assert!(only_unigrams.best.bigrams.is_empty());
        assert!(matches!(
            mine_subsequences(&[r.clone()], 4, 2),
            Err(TunerError::InsufficientCandidates { available: 3, .. })
        ));
        assert!(mine_subsequences(&[r], 1, 3).is_err());
    }

    #[test]
    fn skewed_pool() {
        let mut pool = Vec::new();
        for i in 0..580 {
            if i < 573 {
                pool.push(seq(&["inline", "instcombine", "inline"]));
            } else {
                pool.push(seq(&["licm"]));
            }
        }
        let t = count_grams(&pool, 2);
        assert_eq!(t.unigram("inline"), 573);
        assert_eq!(t.unigrams[0].gram, ["inline"]);
        assert_eq!(t.sequences, 580);
    }
}
