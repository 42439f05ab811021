use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::stats::median;
use crate::toolchain::{OptLevel, SourceUnit};

const HOST_H: &str = include_str!("../../../../corpus/rt/host/zkrt.h");
const HOST_C: &str = include_str!("../../../../corpus/rt/host/zkrt_host.c");

/// Host compiler and repetition count for native timing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NativeConfig {
    pub compiler: String,
    pub repetitions: usize,
}

impl Default for NativeConfig {
    fn default() -> Self {
        NativeConfig { compiler: "cc".into(), repetitions: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeTiming {
    pub median_seconds: f64,
    pub samples: Vec<f64>,
}

/// Builds `unit` for the host at `level` against a host shim of the guest
/// runtime, runs it `repetitions` times and reports the median wall time.
pub fn native_time(unit: &SourceUnit, level: OptLevel, config: &NativeConfig) -> Result<NativeTiming, HarnessError> {
    let dir = tempfile::tempdir().map_err(|e| HarnessError::Io(e.to_string()))?;
    let work = dir.path();
    let write = |name: &str, text: &str| std::fs::write(work.join(name), text).map_err(|e| HarnessError::Io(e.to_string()));
    write("zkrt.h", HOST_H)?;
    write("zkrt_host.c", HOST_C)?;
    let bin = work.join("prog");
    let mut cmd = Command::new(&config.compiler);
    cmd.arg(level.flag()).arg("-I").arg(work);
    for (k, v) in &unit.defines {
        cmd.arg(if v.is_empty() { format!("-D{k}") } else { format!("-D{k}={v}") });
    }
    cmd.arg(&unit.path).arg(work.join("zkrt_host.c")).arg("-o").arg(&bin);
    let out = cmd
        .output()
        .map_err(|e| HarnessError::HostBuildFailed(format!("{}: {e}", config.compiler)))?;
    if !out.status.success() {
        return Err(HarnessError::HostBuildFailed(String::from_utf8_lossy(&out.stderr).into_owned()));
    }
    let samples = (0..config.repetitions.max(1))
        .map(|_| time_once(&bin))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NativeTiming { median_seconds: median(&samples), samples })
}

fn time_once(bin: &Path) -> Result<f64, HarnessError> {
    let start = Instant::now();
    let status = Command::new(bin)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map_err(|e| HarnessError::HostRunFailed(e.to_string()))?;
    let elapsed = start.elapsed().as_secs_f64();
    // Guest programs may exit non-zero on purpose; only signals are failures.
    if status.code().is_none() {
        return Err(HarnessError::HostRunFailed(format!("terminated by signal ({status})")));
    }
    Ok(elapsed)
}
