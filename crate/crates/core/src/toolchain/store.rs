use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::driver::BuildArtifact;
use super::ToolchainError;

/// Content-addressed artifact store shared by concurrent builds.
///
/// With a directory, each insert also writes `<hash>.elf` and `<hash>.log`.
#[derive(Debug, Default)]
pub struct ArtifactStore {
    dir: Option<PathBuf>,
    items: Mutex<BTreeMap<String, Arc<BuildArtifact>>>,
}

impl ArtifactStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn persistent(dir: impl Into<PathBuf>) -> Result<Self, ToolchainError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| ToolchainError::Io(format!("{}: {e}", dir.display())))?;
        Ok(ArtifactStore { dir: Some(dir), items: Mutex::new(BTreeMap::new()) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Inserts an artifact, returning the stored copy. An artifact whose
    /// hash is already present keeps the first copy.
    pub fn insert(&self, artifact: BuildArtifact) -> Result<Arc<BuildArtifact>, ToolchainError> {
        if let Some(dir) = &self.dir {
            let io = |e: std::io::Error| ToolchainError::Io(format!("{}: {e}", dir.display()));
            std::fs::write(dir.join(format!("{}.elf", artifact.hash)), &artifact.elf).map_err(io)?;
            std::fs::write(dir.join(format!("{}.log", artifact.hash)), &artifact.log).map_err(io)?;
        }
        let mut items = self.items.lock().unwrap();
        Ok(items.entry(artifact.hash.clone()).or_insert_with(|| Arc::new(artifact)).clone())
    }

    pub fn get(&self, hash: &str) -> Option<Arc<BuildArtifact>> {
        self.items.lock().unwrap().get(hash).cloned()
    }

    pub fn len(&self) -> usize {
        self.items.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
