use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::toolchain::SourceUnit;

/// Instruction limit used when neither the program nor the manifest sets one.
pub const DEFAULT_LIMIT: u64 = 200_000_000;

/// One corpus entry: a C source or a ready ELF.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Program {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elf: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub defines: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<u64>,
}

impl Program {
    pub fn from_source(id: impl Into<String>, source: impl Into<PathBuf>) -> Self {
        Program { id: id.into(), source: Some(source.into()), elf: None, defines: BTreeMap::new(), limit: None }
    }

    pub fn from_elf(id: impl Into<String>, elf: impl Into<PathBuf>) -> Self {
        Program { id: id.into(), source: None, elf: Some(elf.into()), defines: BTreeMap::new(), limit: None }
    }

    pub fn with_define(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.defines.insert(name.into(), value.into());
        self
    }

    pub fn with_limit(mut self, limit: u64) -> Self {
        self.limit = Some(limit);
        self
    }

    /// The translation unit to compile, if this entry has a source.
    pub fn unit(&self) -> Option<SourceUnit> {
        self.source.as_ref().map(|p| SourceUnit {
            id: self.id.clone(),
            path: p.clone(),
            defines: self.defines.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDefaults {
    pub limit: u64,
}

impl Default for ManifestDefaults {
    fn default() -> Self {
        ManifestDefaults { limit: DEFAULT_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    #[serde(default)]
    pub defaults: ManifestDefaults,
    #[serde(default, rename = "program")]
    pub programs: Vec<Program>,
}

impl CorpusManifest {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let m: CorpusManifest = toml::from_str(text).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Loads a manifest, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))?;
        let mut m = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in &mut m.programs {
            for f in [&mut p.source, &mut p.elf].into_iter().flatten() {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok(m)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let mut ids = BTreeSet::new();
        for p in &self.programs {
            if !ids.insert(&p.id) {
                return Err(HarnessError::Manifest(format!("duplicate program id `{}`", p.id)));
            }
            if p.source.is_some() == p.elf.is_some() {
                return Err(HarnessError::Manifest(format!(
                    "program `{}` needs exactly one of `source` and `elf`",
                    p.id
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Program> {
        self.programs.iter().find(|p| p.id == id)
    }

    pub fn limit_for(&self, program: &Program) -> u64 {
        program.limit.unwrap_or(self.defaults.limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        std::fs::write(
            &path,
            "[defaults]\nlimit = 1000\n\n[[program]]\nid = \"a\"\nsource = \"src/a.c\"\ndefines = { N = \"4\" }\n\n[[program]]\nid = \"b\"\nelf = \"/abs/b.elf\"\nlimit = 7\n",
        )
        .unwrap();
        let m = CorpusManifest::load(&path).unwrap();
        let a = m.get("a").unwrap();
        assert_eq!(a.source.as_deref(), Some(dir.path().join("src/a.c").as_path()));
        assert_eq!(m.limit_for(a), 1000);
        assert_eq!(a.unit().unwrap().defines["N"], "4");
        let b = m.get("b").unwrap();
        assert_eq!(m.limit_for(b), 7);
        assert!(b.unit().is_none());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(CorpusManifest::from_toml("[[program]]\nid = \"a\"\n").is_err());
        assert!(CorpusManifest::from_toml(
            "[[program]]\nid = \"a\"\nelf = \"x\"\n[[program]]\nid = \"a\"\nelf = \"y\"\n"
        )
        .is_err());
        assert!(CorpusManifest::from_toml("[[program]]\nid = \"a\"\nelf = \"x\"\nbogus = 1\n").is_err());
    }
}
