use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::catalog::PassCatalog;
use super::ToolchainError;

/// Preset optimization level of the front-end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptLevel {
    O0,
    O1,
    O2,
    O3,
    Os,
    Oz,
}

impl OptLevel {
    pub const ALL: [OptLevel; 6] = [
        OptLevel::O0,
        OptLevel::O1,
        OptLevel::O2,
        OptLevel::O3,
        OptLevel::Os,
        OptLevel::Oz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptLevel::O0 => "O0",
            OptLevel::O1 => "O1",
            OptLevel::O2 => "O2",
            OptLevel::O3 => "O3",
            OptLevel::Os => "Os",
            OptLevel::Oz => "Oz",
        }
    }

    /// Front-end flag, e.g. `-O2`.
    pub fn flag(self) -> String {
        format!("-{}", self.name())
    }

    /// Code generator level used with this preset. The code generator has no
    /// size levels, so `Os`/`Oz` use its default level.
    pub fn codegen_flag(self) -> &'static str {
        match self {
            OptLevel::O0 => "-O0",
            OptLevel::O1 => "-O1",
            OptLevel::O2 | OptLevel::Os | OptLevel::Oz => "-O2",
            OptLevel::O3 => "-O3",
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptLevel {
    type Err = ToolchainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix('-').unwrap_or(s);
        OptLevel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| ToolchainError::BadProfile(format!("unknown level `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    Baseline,
    StandardLevel { level: OptLevel },
    PassSequence { passes: Vec<String> },
}

/// One way of compiling a program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OptProfile {
    #[serde(flatten)]
    pub kind: ProfileKind,
    /// Integer knobs forwarded to the optimizer, keyed by option name
    /// (`inline-threshold`, `unroll-threshold`, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, i64>,
    #[serde(default)]
    pub lto: bool,
}

impl OptProfile {
    pub fn baseline() -> Self {
        Self::from_kind(ProfileKind::Baseline)
    }

    pub fn level(level: OptLevel) -> Self {
        Self::from_kind(ProfileKind::StandardLevel { level })
    }

    pub fn passes<S: Into<String>>(passes: impl IntoIterator<Item = S>) -> Self {
        Self::from_kind(ProfileKind::PassSequence {
            passes: passes.into_iter().map(Into::into).collect(),
        })
    }

    fn from_kind(kind: ProfileKind) -> Self {
        OptProfile {
            kind,
            thresholds: BTreeMap::new(),
            lto: false,
        }
    }

    pub fn with_threshold(mut self, name: impl Into<String>, value: i64) -> Self {
        self.thresholds.insert(name.into(), value);
        self
    }

    pub fn with_lto(mut self, lto: bool) -> Self {
        self.lto = lto;
        self
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self.kind, ProfileKind::Baseline)
    }

    /// Pass list of a sequence profile; empty for the other kinds.
    pub fn pass_list(&self) -> &[String] {
        match &self.kind {
            ProfileKind::PassSequence { passes } => passes,
            _ => &[],
        }
    }

    /// Stable textual identity, round-trippable through [`OptProfile::parse`].
    ///
    /// Forms: `baseline`, `O3`, `passes:inline,licm` (`passes:` alone is the
    /// empty sequence), optionally followed by `+name=value` thresholds and `+lto`.
    pub fn id(&self) -> String {
        let mut id = match &self.kind {
            ProfileKind::Baseline => "baseline".to_string(),
            ProfileKind::StandardLevel { level } => level.name().to_string(),
            ProfileKind::PassSequence { passes } => format!("passes:{}", passes.join(",")),
        };
        for (name, value) in &self.thresholds {
            id.push_str(&format!("+{name}={value}"));
        }
        if self.lto {
            id.push_str("+lto");
        }
        id
    }

    pub fn parse(id: &str) -> Result<Self, ToolchainError> {
        let mut parts = id.split('+');
        let head = parts.next().unwrap_or_default().trim();
        let mut profile = if head == "baseline" {
            OptProfile::baseline()
        } else if let Some(list) = head.strip_prefix("passes:") {
            let passes: Vec<&str> = list.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
            OptProfile::passes(passes)
        } else {
            OptProfile::level(head.parse()?)
        };
        for part in parts {
            if part == "lto" {
                profile.lto = true;
                continue;
            }
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| ToolchainError::BadProfile(format!("bad profile suffix `+{part}`")))?;
            let value = value
                .parse()
                .map_err(|_| ToolchainError::BadProfile(format!("threshold `{name}` is not an integer")))?;
            profile.thresholds.insert(name.to_string(), value);
        }
        Ok(profile)
    }

    /// Checks the profile against a catalog and depth bound.
    pub fn validate(&self, catalog: &PassCatalog, max_depth: usize) -> Result<(), ToolchainError> {
        match &self.kind {
            ProfileKind::Baseline => {
                if !self.thresholds.is_empty() {
                    return Err(ToolchainError::BadProfile(
                        "the baseline profile takes no thresholds".into(),
                    ));
                }
            }
            ProfileKind::StandardLevel { .. } => {}
            ProfileKind::PassSequence { passes } => {
                if passes.len() > max_depth {
                    return Err(ToolchainError::BadProfile(format!(
                        "{} passes exceed the maximum depth {max_depth}",
                        passes.len()
                    )));
                }
                if let Some(p) = passes.iter().find(|p| !catalog.contains(p)) {
                    return Err(ToolchainError::BadProfile(format!("pass `{p}` is not in the catalog")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for OptProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for OptProfile {
    type Err = ToolchainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OptProfile::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        let cases = [
            OptProfile::baseline(),
            OptProfile::level(OptLevel::Oz),
            OptProfile::passes(["inline", "licm"]),
            OptProfile::passes(Vec::<String>::new()),
            OptProfile::level(OptLevel::O3).with_threshold("inline-threshold", 4328).with_lto(true),
        ];
        for p in cases {
            assert_eq!(OptProfile::parse(&p.id()).unwrap(), p, "{}", p.id());
        }
        assert_eq!(OptProfile::passes(["inline", "licm"]).id(), "passes:inline,licm");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(OptProfile::parse("O7").is_err());
        assert!(OptProfile::parse("O2+inline-threshold").is_err());
        assert!(OptProfile::parse("O2+inline-threshold=x").is_err());
    }

    #[test]
    fn validation() {
        let cat = PassCatalog::from_names(["inline", "licm"]).unwrap();
        assert!(OptProfile::passes(["inline", "licm"]).validate(&cat, 2).is_ok());
        assert!(OptProfile::passes(["inline", "licm", "inline"]).validate(&cat, 2).is_err());
        assert!(OptProfile::passes(["gvn"]).validate(&cat, 20).is_err());
        assert!(OptProfile::baseline().with_threshold("inline-threshold", 1).validate(&cat, 20).is_err());
        assert!(OptProfile::level(OptLevel::O2).with_threshold("inline-threshold", 1).validate(&cat, 20).is_ok());
    }
}
