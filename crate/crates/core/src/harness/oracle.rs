use serde::{Deserialize, Serialize};

use super::runner::{Bench, Execution, MetricsRow, RunStatus};
use super::{HarnessError, Program};
use crate::cost::CostModel;
use crate::elf::{load_elf, write_elf};
use crate::isa::{encode, InstrClass, Opcode, Reg};
use crate::toolchain::OptProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    Exit,
    Output,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum OracleVerdict {
    Equivalent,
    Divergent { kind: DivergenceKind, detail: String },
    Inconclusive { detail: String },
}

impl OracleVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, OracleVerdict::Equivalent)
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, OracleVerdict::Divergent { .. })
    }

    pub fn divergence(&self) -> Option<DivergenceKind> {
        match self {
            OracleVerdict::Divergent { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

fn describe(s: &RunStatus) -> String {
    match s.detail() {
        Some(d) => format!("{}: {d}", s.label()),
        None => match s.exit_code() {
            Some(c) => format!("exit {c}"),
            None => s.label().to_string(),
        },
    }
}

/// Compares two executions of the same program.
pub fn compare(a: &Execution, b: &Execution) -> OracleVerdict {
    use RunStatus::*;
    match (&a.status, &b.status) {
        (BuildFailed(_) | LoadFailed(_), _) | (_, BuildFailed(_) | LoadFailed(_)) => OracleVerdict::Inconclusive {
            detail: format!("not runnable: {} / {}", describe(&a.status), describe(&b.status)),
        },
        (x, y) if x == y && !matches!(x, Exited(_)) => OracleVerdict::Inconclusive {
            detail: format!("both sides: {}", describe(x)),
        },
        (LimitReached, _) | (_, LimitReached) => OracleVerdict::Divergent {
            kind: DivergenceKind::Limit,
            detail: format!("{} vs {}", describe(&a.status), describe(&b.status)),
        },
        (Exited(x), Exited(y)) if x == y => {
            if a.output == b.output {
                OracleVerdict::Equivalent
            } else {
                let at = a.output.iter().zip(&b.output).position(|(p, q)| p != q);
                let at = at.unwrap_or(a.output.len().min(b.output.len()));
                OracleVerdict::Divergent {
                    kind: DivergenceKind::Output,
                    detail: format!(
                        "outputs differ at byte {at} ({} vs {} bytes)",
                        a.output.len(),
                        b.output.len()
                    ),
                }
            }
        }
        _ => OracleVerdict::Divergent {
            kind: DivergenceKind::Exit,
            detail: format!("{} vs {}", describe(&a.status), describe(&b.status)),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub program: String,
    pub profiles: [String; 2],
    #[serde(flatten)]
    pub verdict: OracleVerdict,
    pub rows: [MetricsRow; 2],
}

/// Builds `program` under both profiles, runs each, and compares them.
pub fn diff_oracle(
    bench: &Bench,
    program: &Program,
    a: &OptProfile,
    b: &OptProfile,
    model: &CostModel,
) -> OracleReport {
    let (art_a, exec_a) = bench.execute(program, a);
    let (art_b, exec_b) = bench.execute(program, b);
    let models = std::slice::from_ref(model);
    let row_a = bench.rows(program, a, art_a.as_deref(), &exec_a, models).remove(0);
    let row_b = bench.rows(program, b, art_b.as_deref(), &exec_b, models).remove(0);
    OracleReport {
        program: program.id.clone(),
        profiles: [a.id(), b.id()],
        verdict: compare(&exec_a, &exec_b),
        rows: [row_a, row_b],
    }
}

/// Fault-injection fixture: rewrites every `li rd, '\n'` whose value is
/// stored as a byte within the next few instructions to load `'\v'` instead,
/// so each printed line ends in a different byte. Returns a section-less ELF.
pub fn inject_output_fault(elf: &[u8]) -> Result<Vec<u8>, HarnessError> {
    const WINDOW: usize = 8;
    let image = load_elf(elf).map_err(|e| HarnessError::Injection(e.to_string()))?;
    let code: Vec<_> = image.code_words().collect();
    let mut sites = Vec::new();
    for (i, (addr, insn)) in code.iter().enumerate() {
        let Ok(insn) = insn else { continue };
        if insn.op != Opcode::Addi || insn.rs1 != Reg::ZERO || insn.imm != 10 || insn.rd == Reg::ZERO {
            continue;
        }
        for (_, next) in code.iter().skip(i + 1).take(WINDOW) {
            let Ok(next) = next else { break };
            if next.op == Opcode::Sb && next.rs2 == insn.rd {
                sites.push((*addr, insn.rd));
                break;
            }
            if next.dest() == Some(insn.rd) || next.is_branch() || next.class() == InstrClass::Jump {
                break;
            }
        }
    }
    if sites.is_empty() {
        return Err(HarnessError::Injection("no newline store found".into()));
    }
    let mut segments = image.segments().to_vec();
    for (addr, rd) in sites {
        let word = encode(Opcode::Addi, rd, Reg::ZERO, Reg::ZERO, 11).to_le_bytes();
        let seg = segments.iter_mut().find(|s| s.contains(addr)).expect("site lies in a segment");
        let off = (addr - seg.vaddr) as usize;
        seg.data[off..off + 4].copy_from_slice(&word);
    }
    Ok(write_elf(image.entry(), &segments))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exited(code: u32, out: &[u8]) -> Execution {
        Execution { status: RunStatus::Exited(code), output: out.to_vec(), trace: None, emu_seconds: 0.0 }
    }

    fn status(s: RunStatus) -> Execution {
        Execution::failed(s)
    }

    #[test]
    fn verdicts() {
        assert_eq!(compare(&exited(0, b"a"), &exited(0, b"a")), OracleVerdict::Equivalent);
        assert_eq!(compare(&exited(0, b"ab"), &exited(0, b"ac")).divergence(), Some(DivergenceKind::Output));
        assert_eq!(compare(&exited(0, b"a"), &exited(1, b"a")).divergence(), Some(DivergenceKind::Exit));
        assert_eq!(
            compare(&exited(0, b""), &status(RunStatus::LimitReached)).divergence(),
            Some(DivergenceKind::Limit)
        );
        assert!(matches!(
            compare(&status(RunStatus::LimitReached), &status(RunStatus::LimitReached)),
            OracleVerdict::Inconclusive { .. }
        ));
        assert!(matches!(
            compare(&exited(0, b""), &status(RunStatus::BuildFailed("x".into()))),
            OracleVerdict::Inconclusive { .. }
        ));
        assert_eq!(
            compare(&exited(0, b""), &status(RunStatus::Fault("ebreak".into()))).divergence(),
            Some(DivergenceKind::Exit)
        );
    }

    #[test]
    fn symmetric_kinds() {
        let cases = [
            exited(0, b"a"),
            exited(0, b"b"),
            exited(2, b"a"),
            status(RunStatus::LimitReached),
            status(RunStatus::Fault("f".into())),
            status(RunStatus::BuildFailed("b".into())),
        ];
        for x in &cases {
            for y in &cases {
                let (p, q) = (compare(x, y), compare(y, x));
                assert_eq!(std::mem::discriminant(&p), std::mem::discriminant(&q));
                assert_eq!(p.divergence(), q.divergence());
            }
        }
    }
}
