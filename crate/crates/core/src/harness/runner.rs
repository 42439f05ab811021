use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{Program, DEFAULT_LIMIT};
use crate::cost::{account, estimate_proving, CostModel, CycleBreakdown, ProvingEstimator};
use crate::elf::load_elf;
use crate::isa::{EcallRegistry, Emulator, RunExit, RunTrace, Sha256Accelerator, ECALL_SHA256};
use crate::toolchain::{ArtifactStore, BuildArtifact, OptProfile, Toolchain};

/// How a benchmark run ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum RunStatus {
    Exited(u32),
    LimitReached,
    Fault(String),
    BuildFailed(String),
    LoadFailed(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Exited(_) => "exited",
            RunStatus::LimitReached => "limit",
            RunStatus::Fault(_) => "fault",
            RunStatus::BuildFailed(_) => "build-failed",
            RunStatus::LoadFailed(_) => "load-failed",
        }
    }

    pub fn exit_code(&self) -> Option<u32> {
        match self {
            RunStatus::Exited(c) => Some(*c),
            _ => None,
        }
    }

    pub fn detail(&self) -> Option<&str> {
        match self {
            RunStatus::Fault(d) | RunStatus::BuildFailed(d) | RunStatus::LoadFailed(d) => Some(d),
            _ => None,
        }
    }
}

/// Result of running one ELF once. Cost models are applied afterwards.
#[derive(Debug, Clone)]
pub struct Execution {
    pub status: RunStatus,
    pub output: Vec<u8>,
    pub trace: Option<RunTrace>,
    pub emu_seconds: f64,
}

impl Execution {
    pub fn failed(status: RunStatus) -> Self {
        Execution { status, output: Vec::new(), trace: None, emu_seconds: 0.0 }
    }

    pub fn output_hash(&self) -> Option<String> {
        self.trace.as_ref().map(|_| hex::encode(Sha256::digest(&self.output)))
    }
}

/// Registry used by benchmark runs: the SHA-256 accelerator at its usual id.
pub fn default_registry() -> EcallRegistry {
    let mut reg = EcallRegistry::new();
    reg.register(ECALL_SHA256, Arc::new(Sha256Accelerator));
    reg
}

pub fn execute_elf(elf: &[u8], limit: u64, registry: &EcallRegistry) -> Execution {
    let image = match load_elf(elf) {
        Ok(img) => img,
        Err(e) => return Execution::failed(RunStatus::LoadFailed(e.to_string())),
    };
    let emu = Emulator::with_registry(&image, registry.clone());
    let start = Instant::now();
    let trace = match emu.execute(emu.initial_state(), limit.max(1)) {
        Ok(t) => t,
        Err(e) => return Execution::failed(RunStatus::Fault(e.to_string())),
    };
    let emu_seconds = start.elapsed().as_secs_f64();
    let status = match &trace.exit {
        RunExit::Exited(c) => RunStatus::Exited(*c),
        RunExit::LimitReached => RunStatus::LimitReached,
        RunExit::Fault(e) => RunStatus::Fault(e.to_string()),
    };
    Execution { status, output: trace.output.clone(), trace: Some(trace), emu_seconds }
}

/// One (program, profile, cost model) measurement.
///
/// Cycle fields are present only for runs that exited; failed builds and runs
/// are kept with their status so nothing disappears from a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub program: String,
    pub profile: String,
    pub artifact: Option<String>,
    pub model: String,
    #[serde(flatten)]
    pub status: RunStatus,
    pub retired: Option<u64>,
    pub breakdown: Option<CycleBreakdown>,
    pub emu_seconds: f64,
    pub proving_seconds: Option<f64>,
    pub native_seconds: Option<f64>,
    pub output_hash: Option<String>,
}

impl MetricsRow {
    pub fn ok(&self) -> bool {
        matches!(self.status, RunStatus::Exited(_)) && self.breakdown.is_some()
    }

    pub fn total_cycles(&self) -> Option<u64> {
        self.breakdown.as_ref().map(|b| b.total)
    }

    /// Same row with wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        MetricsRow { emu_seconds: 0.0, native_seconds: None, ..self.clone() }
    }
}

/// Shared context for building and running corpus programs.
#[derive(Debug, Clone)]
pub struct Bench<'a> {
    pub toolchain: Option<&'a Toolchain>,
    pub store: Option<&'a ArtifactStore>,
    pub estimator: Option<ProvingEstimator>,
    pub registry: EcallRegistry,
    pub default_limit: u64,
}

impl<'a> Bench<'a> {
    pub fn new(toolchain: Option<&'a Toolchain>) -> Self {
        Bench { toolchain, store: None, estimator: None, registry: default_registry(), default_limit: DEFAULT_LIMIT }
    }

    pub fn with_store(mut self, store: &'a ArtifactStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn with_estimator(mut self, estimator: ProvingEstimator) -> Self {
        self.estimator = Some(estimator);
        self
    }

    pub fn with_default_limit(mut self, limit: u64) -> Self {
        self.default_limit = limit;
        self
    }

    pub fn limit_for(&self, program: &Program) -> u64 {
        program.limit.unwrap_or(self.default_limit)
    }

    /// Compiles `program` (or reads its prebuilt ELF) under `profile`.
    pub fn build(&self, program: &Program, profile: &OptProfile) -> Result<Arc<BuildArtifact>, String> {
        let artifact = if let Some(path) = &program.elf {
            if !profile.is_baseline() {
                return Err(format!("prebuilt ELF `{}` cannot be rebuilt under profile {profile}", program.id));
            }
            let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            BuildArtifact::new(bytes, "prebuilt ELF\n".into(), profile.clone(), program.id.clone())
        } else {
            let unit = program.unit().ok_or_else(|| format!("program `{}` has no source", program.id))?;
            let tc = self.toolchain.ok_or_else(|| "no toolchain configured".to_string())?;
            tc.compile(&unit, profile).map_err(|e| e.to_string())?
        };
        match self.store {
            Some(store) => store.insert(artifact).map_err(|e| e.to_string()),
            None => Ok(Arc::new(artifact)),
        }
    }

    /// Builds and runs once.
    pub fn execute(&self, program: &Program, profile: &OptProfile) -> (Option<Arc<BuildArtifact>>, Execution) {
        match self.build(program, profile) {
            Ok(art) => {
                let exec = execute_elf(&art.elf, self.limit_for(program), &self.registry);
                (Some(art), exec)
            }
            Err(e) => (None, Execution::failed(RunStatus::BuildFailed(e))),
        }
    }

    /// Turns one execution into one row per cost model.
    pub fn rows(
        &self,
        program: &Program,
        profile: &OptProfile,
        artifact: Option<&BuildArtifact>,
        exec: &Execution,
        models: &[CostModel],
    ) -> Vec<MetricsRow> {
        models
            .iter()
            .map(|model| {
                let breakdown = match (&exec.status, &exec.trace) {
                    (RunStatus::Exited(_), Some(trace)) => Some(account(trace, model)),
                    _ => None,
                };
                let proving_seconds = match (&breakdown, &self.estimator) {
                    (Some(b), Some(est)) => Some(estimate_proving(b, est)),
                    _ => None,
                };
                MetricsRow {
                    program: program.id.clone(),
                    profile: profile.id(),
                    artifact: artifact.map(|a| a.hash.clone()),
                    model: model.name().to_string(),
                    status: exec.status.clone(),
                    retired: exec.trace.as_ref().map(|t| t.retired),
                    breakdown,
                    emu_seconds: exec.emu_seconds,
                    proving_seconds,
                    native_seconds: None,
                    output_hash: exec.output_hash(),
                }
            })
            .collect()
    }

    pub fn run_benchmark(&self, program: &Program, profile: &OptProfile, model: &CostModel) -> MetricsRow {
        let (art, exec) = self.execute(program, profile);
        self.rows(program, profile, art.as_deref(), &exec, std::slice::from_ref(model))
            .pop()
            .expect("one model gives one row")
    }

    /// Every program under every profile and model. Rows come back ordered by
    /// (program, profile, model) position in the inputs, independent of which
    /// job finishes first.
    pub fn run_matrix(
        &self,
        programs: &[Program],
        profiles: &[OptProfile],
        models: &[CostModel],
        jobs: Option<usize>,
    ) -> Vec<MetricsRow> {
        let pairs: Vec<(&Program, &OptProfile)> =
            programs.iter().flat_map(|p| profiles.iter().map(move |f| (p, f))).collect();
        let work = || -> Vec<MetricsRow> {
            pairs
                .par_iter()
                .map(|(program, profile)| {
                    let (art, exec) = self.execute(program, profile);
                    self.rows(program, profile, art.as_deref(), &exec, models)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        };
        match jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
                .install(work),
            None => work(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elf::{write_elf, Segment};
    use crate::isa::asm;

    fn exit_elf(code: i32) -> Vec<u8> {
        let words = [asm::li(10, code), asm::li(17, 93), asm::ecall()];
        let data: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        let seg = Segment { vaddr: 0x1_0000, file_size: data.len() as u32, data, writable: false, executable: true };
        write_elf(0x1_0000, &[seg])
    }

    #[test]
    fn prebuilt_elf_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exit.elf");
        std::fs::write(&path, exit_elf(3)).unwrap();
        let bench = Bench::new(None);
        let row = bench.run_benchmark(&Program::from_elf("exit", &path), &OptProfile::baseline(), &CostModel::uniform());
        assert!(row.ok());
        assert_eq!(row.status, RunStatus::Exited(3));
        assert_eq!(row.total_cycles(), Some(3));
        assert_eq!(row.retired, Some(3));
        let again = bench.run_benchmark(&Program::from_elf("exit", &path), &OptProfile::baseline(), &CostModel::uniform());
        assert_eq!(row.without_timing(), again.without_timing());
    }

    #[test]
    fn missing_elf_is_a_failed_row() {
        let row = Bench::new(None).run_benchmark(
            &Program::from_elf("gone", "/no/such/file.elf"),
            &OptProfile::baseline(),
            &CostModel::r0_like(),
        );
        assert!(!row.ok());
        assert!(matches!(&row.status, RunStatus::BuildFailed(d) if d.contains("/no/such/file.elf")));
        assert!(row.breakdown.is_none() && row.artifact.is_none());
    }

    #[test]
    fn prebuilt_rejects_other_profiles_and_sources_need_toolchain() {
        let bench = Bench::new(None);
        assert!(bench.build(&Program::from_elf("x", "/x"), &OptProfile::passes(["licm"])).is_err());
        assert!(bench.build(&Program::from_source("x", "/x.c"), &OptProfile::baseline()).is_err());
    }

    #[test]
    fn load_failure_and_limit() {
        let reg = default_registry();
        assert!(matches!(execute_elf(b"nope", 10, &reg).status, RunStatus::LoadFailed(_)));
        let spin = {
            let data: Vec<u8> = asm::jal(0, 0).to_le_bytes().to_vec();
            write_elf(0x1_0000, &[Segment { vaddr: 0x1_0000, file_size: 4, data, writable: false, executable: true }])
        };
        let exec = execute_elf(&spin, 100, &reg);
        assert_eq!(exec.status, RunStatus::LimitReached);
        assert_eq!(exec.trace.unwrap().retired, 100);
    }

    #[test]
    fn matrix_order_is_input_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut programs = Vec::new();
        for code in [5, 1, 9] {
            let path = dir.path().join(format!("p{code}.elf"));
            std::fs::write(&path, exit_elf(code)).unwrap();
            programs.push(Program::from_elf(format!("p{code}"), path));
        }
        let rows = Bench::new(None).run_matrix(
            &programs,
            &[OptProfile::baseline()],
            &[CostModel::uniform(), CostModel::r0_like()],
            Some(3),
        );
        let keys: Vec<(String, String)> = rows.iter().map(|r| (r.program.clone(), r.model.clone())).collect();
        assert_eq!(keys.len(), 6);
        assert_eq!(keys[0], ("p5".to_string(), "uniform".to_string()));
        assert_eq!(keys[1], ("p5".to_string(), "r0-like".to_string()));
        assert_eq!(keys[5], ("p9".to_string(), "r0-like".to_string()));
    }
}
