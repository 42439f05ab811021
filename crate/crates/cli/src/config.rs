//! The run configuration file. Every field is optional; command-line flags
//! take precedence over whatever is set here.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub toolchain: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub models: Vec<String>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
    pub estimator: Option<EstimatorSection>,
    pub tune: TuneSection,
    pub impact: ImpactSection,
    pub analyzer: AnalyzerSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub max_depth: Option<usize>,
    pub population: Option<usize>,
    pub mutation_rate: Option<f64>,
    pub tournament: Option<usize>,
    pub elitism: Option<usize>,
    pub limit: Option<u64>,
    /// `cycles` or `proving`.
    pub target: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactSection {
    pub metric: Option<String>,
    pub moderate: Option<f64>,
    pub severe: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerSection {
    pub page_threshold: Option<usize>,
    pub loop_ratio: Option<f64>,
}

impl RunConfig {
    /// Reads a config file. Relative paths are resolved against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.manifest, &mut cfg.toolchain, &mut cfg.catalog, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zkopt.toml");
        std::fs::write(
            &path,
            "manifest = \"corpus/manifest.toml\"\nmodels = [\"uniform\"]\nseed = 3\n[tune]\nmax_depth = 4\n",
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.manifest.unwrap(), dir.path().join("corpus/manifest.toml"));
        assert_eq!(cfg.models, ["uniform"]);
        assert_eq!((cfg.seed, cfg.tune.max_depth), (Some(3), Some(4)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zkopt.toml");
        std::fs::write(&path, "sed = 3\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
