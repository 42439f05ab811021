//! Compiler driver: turns a C source and an optimization profile into a
//! statically linked RV32IM ELF by running front-end, optimizer, code
//! generator and linker as subprocesses.

mod catalog;
mod driver;
mod profile;
mod store;

use thiserror::Error;

pub use catalog::{expand_profiles, PassCatalog, PassEntry, PassNest};
pub use driver::{
    content_hash, BuildArtifact, BuildPlan, BuildStep, SourceUnit, Stage, Toolchain, ToolchainConfig,
    TOOLCHAIN_ENV,
};
pub use profile::{OptLevel, OptProfile, ProfileKind};
pub use store::ArtifactStore;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToolchainError {
    #[error("tool `{0}` not found on the tool path, PATH or the Rust llvm-tools directory")]
    ToolNotFound(String),
    #[error("{stage} stage failed (exit {status:?})\n{log}")]
    CompileFailed { stage: String, status: Option<i32>, log: String },
    #[error("optimizer rejected pass `{pass}`: {stderr}")]
    UnknownPass { pass: String, stderr: String },
    #[error("invalid profile: {0}")]
    BadProfile(String),
    #[error("pass catalog: {0}")]
    Catalog(String),
    #[error("toolchain config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}
