use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use log::debug;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::catalog::PassCatalog;
use super::profile::{OptProfile, ProfileKind};
use super::ToolchainError;

/// Environment variable naming a toolchain config file.
pub const TOOLCHAIN_ENV: &str = "ZKOPT_TOOLCHAIN";

const RT_START: &str = include_str!("../../../../corpus/rt/start.S");
const RT_C: &str = include_str!("../../../../corpus/rt/zkrt.c");
const RT_H: &str = include_str!("../../../../corpus/rt/zkrt.h");
const RT_LD: &str = include_str!("../../../../corpus/rt/link.ld");
const RT_FILES: [&str; 4] = ["start.S", "zkrt.c", "zkrt.h", "link.ld"];

fn argv(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Tool locations and argv templates.
///
/// Templates are argv lists whose first element is the tool. Elements may use
/// `{input}`, `{output}`, `{level}`, `{codegen_level}` and `{runtime}` inside
/// larger strings; `{passes}` becomes one `-passes=...` argument; elements equal
/// to `{thresholds}`, `{defines}` or `{objects}` splice zero or more arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolchainConfig {
    /// Directories searched for tools before `PATH`.
    pub tool_dirs: Vec<PathBuf>,
    /// Directory holding `start.S`, `zkrt.c`, `zkrt.h` and `link.ld`. When
    /// unset, the copies built into the library are used.
    pub runtime_dir: Option<PathBuf>,
    /// Pass catalog file; the built-in catalog when unset.
    pub catalog: Option<PathBuf>,
    pub max_depth: usize,
    pub frontend: Vec<String>,
    pub optimizer: Vec<String>,
    pub codegen: Vec<String>,
    pub linker: Vec<String>,
    pub bitcode_linker: Vec<String>,
    pub runtime_asm: Vec<String>,
    pub runtime_c: Vec<String>,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        ToolchainConfig {
            tool_dirs: Vec::new(),
            runtime_dir: None,
            catalog: None,
            max_depth: 20,
            frontend: argv(&[
                "clang",
                "--target=riscv32",
                "-march=rv32im",
                "-mabi=ilp32",
                "{level}",
                "-Xclang",
                "-disable-O0-optnone",
                "-ffreestanding",
                "-fno-builtin",
                "-I{runtime}",
                "{defines}",
                "{thresholds}",
                "-emit-llvm",
                "-c",
                "{input}",
                "-o",
                "{output}",
            ]),
            optimizer: argv(&["opt", "{passes}", "{thresholds}", "{input}", "-o", "{output}"]),
            codegen: argv(&[
                "llc",
                "{codegen_level}",
                "-march=riscv32",
                "-mattr=+m",
                "-filetype=obj",
                "{input}",
                "-o",
                "{output}",
            ]),
            linker: argv(&["ld.lld", "-T", "{runtime}/link.ld", "--no-relax", "{objects}", "-o", "{output}"]),
            bitcode_linker: argv(&["llvm-link", "{objects}", "-o", "{output}"]),
            runtime_asm: argv(&[
                "clang",
                "--target=riscv32",
                "-march=rv32im",
                "-mabi=ilp32",
                "-c",
                "{input}",
                "-o",
                "{output}",
            ]),
            runtime_c: argv(&[
                "clang",
                "--target=riscv32",
                "-march=rv32im",
                "-mabi=ilp32",
                "-O1",
                "-ffreestanding",
                "-fno-builtin",
                "-I{runtime}",
                "-c",
                "{input}",
                "-o",
                "{output}",
            ]),
        }
    }
}

impl ToolchainConfig {
    pub fn from_toml(text: &str) -> Result<Self, ToolchainError> {
        toml::from_str(text).map_err(|e| ToolchainError::Config(e.to_string()))
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ToolchainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ToolchainError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.tool_dirs.iter_mut().for_each(fix);
        cfg.runtime_dir.as_mut().map(fix);
        cfg.catalog.as_mut().map(fix);
        Ok(cfg)
    }

    /// Config from `ZKOPT_TOOLCHAIN` when set, defaults otherwise.
    pub fn from_env() -> Result<Self, ToolchainError> {
        match std::env::var_os(TOOLCHAIN_ENV) {
            Some(p) => Self::load(Path::new(&p)),
            None => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// A C translation unit plus preprocessor definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub id: String,
    pub path: PathBuf,
    pub defines: BTreeMap<String, String>,
}

impl SourceUnit {
    pub fn new(id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        SourceUnit { id: id.into(), path: path.into(), defines: BTreeMap::new() }
    }

    pub fn with_define(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.defines.insert(name.into(), value.into());
        self
    }

    /// `id@hash`, where the hash covers the file contents and the defines.
    pub fn identity(&self) -> Result<String, ToolchainError> {
        let text = std::fs::read(&self.path)
            .map_err(|e| ToolchainError::Io(format!("{}: {e}", self.path.display())))?;
        let mut h = Sha256::new();
        h.update(&text);
        for (k, v) in &self.defines {
            h.update(format!("\0{k}={v}").as_bytes());
        }
        Ok(format!("{}@{}", self.id, &hex::encode(h.finalize())[..16]))
    }
}

/// Hex SHA-256 of an ELF image.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output of one build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildArtifact {
    pub elf: Vec<u8>,
    pub hash: String,
    pub log: String,
    pub profile: OptProfile,
    pub source: String,
}

impl BuildArtifact {
    pub fn new(elf: Vec<u8>, log: String, profile: OptProfile, source: String) -> Self {
        let hash = content_hash(&elf);
        BuildArtifact { elf, hash, log, profile, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    RuntimeAsm,
    RuntimeC,
    RuntimeBitcode,
    Frontend,
    BitcodeLink,
    Optimizer,
    Codegen,
    Link,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::RuntimeAsm => "runtime-asm",
            Stage::RuntimeC => "runtime-c",
            Stage::RuntimeBitcode => "runtime-bitcode",
            Stage::Frontend => "frontend",
            Stage::BitcodeLink => "bitcode-link",
            Stage::Optimizer => "optimizer",
            Stage::Codegen => "codegen",
            Stage::Link => "link",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildStep {
    pub stage: Stage,
    pub argv: Vec<String>,
}

/// The commands a build runs, relative to its working directory. The final
/// image is always `prog.elf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildPlan {
    pub steps: Vec<BuildStep>,
}

impl BuildPlan {
    pub fn runs(&self, stage: Stage) -> bool {
        self.steps.iter().any(|s| s.stage == stage)
    }
}

struct Vars<'a> {
    input: &'a str,
    output: &'a str,
    level: &'a str,
    codegen_level: &'a str,
    passes: &'a str,
    thresholds: &'a [String],
    defines: &'a [String],
    objects: &'a [&'a str],
}

fn render(template: &[String], v: &Vars) -> Vec<String> {
    let mut out = Vec::with_capacity(template.len());
    for item in template {
        match item.as_str() {
            "{thresholds}" => out.extend(v.thresholds.iter().cloned()),
            "{defines}" => out.extend(v.defines.iter().cloned()),
            "{objects}" => out.extend(v.objects.iter().map(|s| s.to_string())),
            "{passes}" => out.push(format!("-passes={}", v.passes)),
            _ => out.push(
                item.replace("{input}", v.input)
                    .replace("{output}", v.output)
                    .replace("{level}", v.level)
                    .replace("{codegen_level}", v.codegen_level)
                    .replace("{runtime}", "rt"),
            ),
        }
    }
    out
}

/// A configured compiler driver.
#[derive(Debug)]
pub struct Toolchain {
    config: ToolchainConfig,
    catalog: PassCatalog,
    resolved: Mutex<BTreeMap<String, PathBuf>>,
}

impl Toolchain {
    pub fn new(config: ToolchainConfig) -> Result<Self, ToolchainError> {
        let catalog = match &config.catalog {
            Some(p) => PassCatalog::load(p)?,
            None => PassCatalog::default_catalog(),
        };
        Ok(Self::with_catalog(config, catalog))
    }

    pub fn with_catalog(config: ToolchainConfig, catalog: PassCatalog) -> Self {
        Toolchain { config, catalog, resolved: Mutex::new(BTreeMap::new()) }
    }

    pub fn from_env() -> Result<Self, ToolchainError> {
        Self::new(ToolchainConfig::from_env()?)
    }

    pub fn config(&self) -> &ToolchainConfig {
        &self.config
    }

    pub fn catalog(&self) -> &PassCatalog {
        &self.catalog
    }

    /// Resolves every tool the templates mention.
    pub fn check(&self) -> Result<(), ToolchainError> {
        let c = &self.config;
        for t in [&c.frontend, &c.optimizer, &c.codegen, &c.linker, &c.bitcode_linker, &c.runtime_asm, &c.runtime_c] {
            if let Some(tool) = t.first() {
                self.resolve_tool(tool)?;
            }
        }
        Ok(())
    }

    pub fn resolve_tool(&self, tool: &str) -> Result<PathBuf, ToolchainError> {
        if let Some(p) = self.resolved.lock().unwrap().get(tool) {
            return Ok(p.clone());
        }
        let found = find_tool(tool, &self.config.tool_dirs)
            .ok_or_else(|| ToolchainError::ToolNotFound(tool.to_string()))?;
        debug!("tool {tool} -> {}", found.display());
        self.resolved.lock().unwrap().insert(tool.to_string(), found.clone());
        Ok(found)
    }

    /// Commands for building `unit` under `profile`, run inside the build
    /// directory where the source is `prog.c` and the runtime lives in `rt/`.
    pub fn plan(&self, unit: &SourceUnit, profile: &OptProfile) -> BuildPlan {
        let c = &self.config;
        let defines: Vec<String> = unit
            .defines
            .iter()
            .map(|(k, v)| if v.is_empty() { format!("-D{k}") } else { format!("-D{k}={v}") })
            .collect();
        let threshold_args: Vec<String> =
            profile.thresholds.iter().map(|(k, v)| format!("-{k}={v}")).collect();
        let mllvm_args: Vec<String> = threshold_args
            .iter()
            .flat_map(|a| ["-mllvm".to_string(), a.clone()])
            .collect();

        let (level, codegen_level, passes) = match &profile.kind {
            ProfileKind::Baseline => ("-O0".to_string(), "-O0", None),
            ProfileKind::StandardLevel { level } => (level.flag(), level.codegen_flag(), None),
            ProfileKind::PassSequence { passes } => (
                "-O0".to_string(),
                "-O0",
                (!passes.is_empty()).then(|| self.catalog.pipeline(passes)),
            ),
        };
        let frontend_thresholds: &[String] = match profile.kind {
            ProfileKind::StandardLevel { .. } => &mllvm_args,
            _ => &[],
        };
        let empty: [String; 0] = [];
        let vars = |input, output, objects| Vars {
            input,
            output,
            level: &level,
            codegen_level,
            passes: passes.as_deref().unwrap_or(""),
            thresholds: &empty,
            defines: &empty,
            objects,
        };

        let mut steps = Vec::new();
        let mut step = |stage, argv| steps.push(BuildStep { stage, argv });
        step(Stage::RuntimeAsm, render(&c.runtime_asm, &vars("rt/start.S", "start.o", &[])));
        step(
            Stage::Frontend,
            render(
                &c.frontend,
                &Vars { defines: &defines, thresholds: frontend_thresholds, ..vars("prog.c", "prog.bc", &[]) },
            ),
        );
        let mut bitcode = "prog.bc";
        let objects: &[&str] = if profile.lto {
            step(Stage::RuntimeBitcode, render(&c.frontend, &vars("rt/zkrt.c", "zkrt.bc", &[])));
            step(Stage::BitcodeLink, render(&c.bitcode_linker, &vars("", "linked.bc", &["prog.bc", "zkrt.bc"])));
            bitcode = "linked.bc";
            &["start.o", "prog.o"]
        } else {
            step(Stage::RuntimeC, render(&c.runtime_c, &vars("rt/zkrt.c", "zkrt.o", &[])));
            &["start.o", "prog.o", "zkrt.o"]
        };
        if passes.is_some() {
            step(
                Stage::Optimizer,
                render(&c.optimizer, &Vars { thresholds: &threshold_args, ..vars(bitcode, "opt.bc", &[]) }),
            );
            bitcode = "opt.bc";
        }
        step(Stage::Codegen, render(&c.codegen, &vars(bitcode, "prog.o", &[])));
        step(Stage::Link, render(&c.linker, &vars("", "prog.elf", objects)));
        BuildPlan { steps }
    }

    /// Builds one ELF in a private temporary directory.
    pub fn compile(&self, unit: &SourceUnit, profile: &OptProfile) -> Result<BuildArtifact, ToolchainError> {
        if profile.is_baseline() && !profile.thresholds.is_empty() {
            return Err(ToolchainError::BadProfile("the baseline profile takes no thresholds".into()));
        }
        let source = unit.identity()?;
        let io = |e: std::io::Error| ToolchainError::Io(e.to_string());
        let dir = tempfile::Builder::new().prefix("zkopt-build-").tempdir().map_err(io)?;
        let work = dir.path();
        std::fs::copy(&unit.path, work.join("prog.c"))
            .map_err(|e| ToolchainError::Io(format!("{}: {e}", unit.path.display())))?;
        self.stage_runtime(&work.join("rt"))?;

        let plan = self.plan(unit, profile);
        let mut log = format!("# source {source}\n# profile {}\n", profile.id());
        for step in &plan.steps {
            let tool = self.resolve_tool(&step.argv[0])?;
            log.push_str(&format!("$ {}\n", step.argv.join(" ")));
            let out = Command::new(&tool).args(&step.argv[1..]).current_dir(work).output().map_err(io)?;
            let stderr = String::from_utf8_lossy(&out.stderr);
            log.push_str(&String::from_utf8_lossy(&out.stdout));
            log.push_str(&stderr);
            if !out.status.success() {
                if step.stage == Stage::Optimizer {
                    if let Some(pass) = unknown_pass(&stderr) {
                        return Err(ToolchainError::UnknownPass { pass, stderr: stderr.into_owned() });
                    }
                }
                return Err(ToolchainError::CompileFailed {
                    stage: step.stage.name().to_string(),
                    status: out.status.code(),
                    log,
                });
            }
        }
        let elf = std::fs::read(work.join("prog.elf")).map_err(io)?;
        Ok(BuildArtifact::new(elf, log, profile.clone(), source))
    }

    fn stage_runtime(&self, rt: &Path) -> Result<(), ToolchainError> {
        let io = |e: std::io::Error| ToolchainError::Io(format!("{}: {e}", rt.display()));
        std::fs::create_dir_all(rt).map_err(io)?;
        match &self.config.runtime_dir {
            Some(dir) => {
                for f in RT_FILES {
                    std::fs::copy(dir.join(f), rt.join(f))
                        .map_err(|e| ToolchainError::Io(format!("{}: {e}", dir.join(f).display())))?;
                }
            }
            None => {
                for (f, text) in RT_FILES.iter().zip([RT_START, RT_C, RT_H, RT_LD]) {
                    std::fs::write(rt.join(f), text).map_err(io)?;
                }
            }
        }
        Ok(())
    }
}

fn unknown_pass(stderr: &str) -> Option<String> {
    let rest = &stderr[stderr.find("unknown pass name '")? + "unknown pass name '".len()..];
    Some(rest[..rest.find('\'')?].to_string())
}

fn find_tool(tool: &str, extra_dirs: &[PathBuf]) -> Option<PathBuf> {
    let as_path = Path::new(tool);
    if as_path.components().count() > 1 {
        return as_path.is_file().then(|| as_path.to_path_buf());
    }
    let path_dirs = std::env::var_os("PATH")
        .map(|p| std::env::split_paths(&p).collect::<Vec<_>>())
        .unwrap_or_default();
    extra_dirs
        .iter()
        .cloned()
        .chain(path_dirs)
        .chain(llvm_tools_dirs())
        .map(|d| d.join(tool))
        .find(|p| p.is_file())
}

/// `bin` directories of the active Rust sysroot, where the llvm-tools
/// component installs `opt`, `llc` and friends.
fn llvm_tools_dirs() -> Vec<PathBuf> {
    let Ok(out) = Command::new("rustc").args(["--print", "sysroot"]).output() else {
        return Vec::new();
    };
    let sysroot = PathBuf::from(String::from_utf8_lossy(&out.stdout).trim());
    let Ok(entries) = std::fs::read_dir(sysroot.join("lib/rustlib")) else {
        return Vec::new();
    };
    let mut dirs: Vec<PathBuf> = entries.flatten().map(|e| e.path().join("bin")).filter(|p| p.is_dir()).collect();
    dirs.sort();
    dirs
}
