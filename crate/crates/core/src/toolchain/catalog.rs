use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::profile::{OptLevel, OptProfile};
use super::ToolchainError;

/// Pipeline level a pass runs at. The optimizer cannot mix levels in a flat
/// list, so every pass is wrapped in the adaptor for its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassNest {
    #[default]
    Module,
    Cgscc,
    Function,
    Loop,
    LoopMssa,
}

impl PassNest {
    pub fn wrap(self, pass: &str) -> String {
        match self {
            PassNest::Module => pass.to_string(),
            PassNest::Cgscc => format!("cgscc({pass})"),
            PassNest::Function => format!("function({pass})"),
            PassNest::Loop => format!("function(loop({pass}))"),
            PassNest::LoopMssa => format!("function(loop-mssa({pass}))"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassEntry {
    pub name: String,
    #[serde(default)]
    pub nest: PassNest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Ordered set of passes that may appear in sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCatalog {
    #[serde(rename = "pass", default)]
    passes: Vec<PassEntry>,
}

const DEFAULT_PASSES: &[(&str, PassNest, Option<&str>)] = &[
    ("inline", PassNest::Cgscc, None),
    ("always-inline", PassNest::Module, None),
    ("licm", PassNest::LoopMssa, None),
    ("instcombine", PassNest::Function, None),
    ("sroa", PassNest::Function, None),
    ("simplifycfg", PassNest::Function, None),
    ("loop-unroll", PassNest::Function, None),
    ("loop-deletion", PassNest::Loop, None),
    ("loop-extract", PassNest::Module, None),
    ("jump-threading", PassNest::Function, None),
    ("reg2mem", PassNest::Function, None),
    ("ipsccp", PassNest::Module, None),
    ("attributor", PassNest::Module, None),
    ("speculative-execution", PassNest::Function, None),
    ("loop-data-prefetch", PassNest::Function, None),
    ("hotcoldsplit", PassNest::Module, Some("registered name of hot-cold splitting")),
    ("mem2reg", PassNest::Function, None),
    ("gvn", PassNest::Function, None),
    ("dce", PassNest::Function, None),
    ("sccp", PassNest::Function, None),
    ("indvars", PassNest::Loop, None),
    ("loop-rotate", PassNest::Loop, None),
    ("tailcallelim", PassNest::Function, None),
    ("early-cse", PassNest::Function, None),
    ("correlated-propagation", PassNest::Function, None),
];

impl PassCatalog {
    pub fn new(passes: Vec<PassEntry>) -> Result<Self, ToolchainError> {
        let mut seen = BTreeSet::new();
        for p in &passes {
            if p.name.is_empty() || p.name.contains([',', '(', ')', ' ']) {
                return Err(ToolchainError::Catalog(format!("invalid pass name `{}`", p.name)));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(ToolchainError::Catalog(format!("duplicate pass `{}`", p.name)));
            }
        }
        Ok(PassCatalog { passes })
    }

    /// The 25 passes discussed in the study, with their pipeline levels.
    pub fn default_catalog() -> Self {
        let passes = DEFAULT_PASSES
            .iter()
            .map(|&(name, nest, note)| PassEntry {
                name: name.to_string(),
                nest,
                note: note.map(str::to_string),
            })
            .collect();
        PassCatalog { passes }
    }

    /// Catalog of module-level entries; handy for tests.
    pub fn from_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, ToolchainError> {
        Self::new(
            names
                .into_iter()
                .map(|n| PassEntry { name: n.into(), nest: PassNest::Module, note: None })
                .collect(),
        )
    }

    pub fn from_toml(text: &str) -> Result<Self, ToolchainError> {
        let raw: PassCatalog = toml::from_str(text).map_err(|e| ToolchainError::Catalog(e.to_string()))?;
        Self::new(raw.passes)
    }

    pub fn load(path: &Path) -> Result<Self, ToolchainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ToolchainError::Catalog(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("catalog serializes")
    }

    pub fn len(&self) -> usize {
        self.passes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passes.is_empty()
    }

    pub fn entries(&self) -> &[PassEntry] {
        &self.passes
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.passes.iter().map(|p| p.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&PassEntry> {
        self.passes.iter().find(|p| p.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Renders an ordered pass list as an optimizer pipeline string. Names
    /// outside the catalog are passed through unwrapped so the optimizer can
    /// reject them itself.
    pub fn pipeline(&self, passes: &[String]) -> String {
        passes
            .iter()
            .map(|p| match self.get(p) {
                Some(entry) => entry.nest.wrap(p),
                None => p.clone(),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl Default for PassCatalog {
    fn default() -> Self {
        Self::default_catalog()
    }
}

/// Baseline, one single-pass profile per catalog entry, then the six levels.
pub fn expand_profiles(catalog: &PassCatalog) -> Result<Vec<OptProfile>, ToolchainError> {
    if catalog.is_empty() {
        return Err(ToolchainError::Catalog("the pass catalog is empty".into()));
    }
    let mut out = Vec::with_capacity(catalog.len() + 7);
    out.push(OptProfile::baseline());
    out.extend(catalog.names().map(|n| OptProfile::passes([n])));
    out.extend(OptLevel::ALL.into_iter().map(OptProfile::level));
    Ok(out)
}
