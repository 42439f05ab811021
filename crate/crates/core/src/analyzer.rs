//! Static scanner for code shapes that are cheap on conventional CPUs but
//! costly under zkVM cycle accounting.
//!
//! Findings are advisory. Each carries a signed cycle delta computed from
//! the supplied cost model: positive means the flagged form costs more than
//! the alternative named in the description.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{instruction_cost, CostModel};
use crate::elf::LoadedImage;
use crate::isa::{decode, encode, Instruction, Opcode, Reg};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error("nothing decodable at entry point {entry:#x}")]
    UndecodableImage { entry: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Insight {
    I1,
    I2,
    I3,
    I4,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Insight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One flagged location. `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: RuleId,
    pub start: u32,
    pub end: u32,
    pub description: String,
    pub delta: i64,
    pub insight: Insight,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {:#010x}..{:#010x} {:+} cycles: {}",
            self.rule, self.insight, self.start, self.end, self.delta, self.description
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzerConfig {
    /// Writable footprint, in model pages, above which R3 fires.
    pub page_threshold: usize,
    /// Loop-control fraction of a loop body above which R4 fires.
    pub loop_ratio: f64,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig { page_threshold: 16, loop_ratio: 0.5 }
    }
}

/// Findings plus notes about code that could not be decoded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanReport {
    pub findings: Vec<Finding>,
    pub notes: Vec<String>,
}

pub fn scan(image: &LoadedImage, model: &CostModel) -> Result<Vec<Finding>, AnalyzerError> {
    scan_with(image, model, &AnalyzerConfig::default()).map(|r| r.findings)
}

pub fn scan_with(
    image: &LoadedImage,
    model: &CostModel,
    config: &AnalyzerConfig,
) -> Result<ScanReport, AnalyzerError> {
    if !matches!(image.fetch(image.entry()), Some(Ok(_))) {
        return Err(AnalyzerError::UndecodableImage { entry: image.entry() });
    }
    let mut report = ScanReport::default();
    let runs = decoded_runs(image, &mut report.notes);
    for run in &runs {
        for i in 0..run.insns.len() {
            let tail = &run.insns[i..];
            let at = run.base + 4 * i as u32;
            if let Some(f) = division_idiom(tail, at, model) {
                report.findings.push(f);
            }
            if let Some(f) = abs_idiom(tail, at, model) {
                report.findings.push(f);
            }
        }
        report.findings.extend(loop_bookkeeping(run, model, config.loop_ratio));
    }
    report.findings.extend(paging_footprint(image, model, config.page_threshold));
    report.findings.sort_by_key(|f| (f.start, f.rule));
    Ok(report)
}

/// Serializes findings as one JSON object per line.
pub fn findings_jsonl(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| serde_json::to_string(f).expect("findings serialize") + "\n")
        .collect()
}

/// Maximal runs of consecutive decodable instructions.
struct Run {
    base: u32,
    insns: Vec<Instruction>,
}

fn decoded_runs(image: &LoadedImage, notes: &mut Vec<String>) -> Vec<Run> {
    fn note(bad: &mut Option<(u32, u32)>, notes: &mut Vec<String>) {
        if let Some((s, e)) = bad.take() {
            notes.push(format!("skipped undecodable words {s:#x}..{e:#x}"));
        }
    }
    let mut runs: Vec<Run> = Vec::new();
    let mut bad: Option<(u32, u32)> = None;
    for (addr, decoded) in image.code_words() {
        match decoded {
            Ok(insn) => {
                note(&mut bad, notes);
                match runs.last_mut() {
                    Some(r) if r.base + 4 * r.insns.len() as u32 == addr => r.insns.push(*insn),
                    _ => runs.push(Run { base: addr, insns: vec![*insn] }),
                }
            }
            Err(_) => {
                match &mut bad {
                    Some((_, e)) if *e == addr => *e = addr + 4,
                    _ => {
                        note(&mut bad, notes);
                        bad = Some((addr, addr + 4));
                    }
                }
                runs.push(Run { base: addr + 4, insns: Vec::new() });
            }
        }
    }
    note(&mut bad, notes);
    runs.retain(|r| !r.insns.is_empty());
    runs
}

fn synth(op: Opcode, rd: Reg, rs1: Reg, rs2: Reg, imm: i32) -> Instruction {
    decode(encode(op, rd, rs1, rs2, imm)).expect("synthesized instruction decodes")
}

fn cost_sum<'a>(insns: impl IntoIterator<Item = &'a Instruction>, model: &CostModel) -> i64 {
    insns.into_iter().map(|i| instruction_cost(i, model) as i64).sum()
}

fn is(i: &Instruction, op: Opcode) -> bool {
    i.op == op
}

/// `srai t,x,31; srli t,t,32-k; add y,x,t; srai y,y,k` (or the three-word
/// `srli t,x,31; add y,x,t; srai y,y,1` for k = 1), compared with
/// `li t,2^k; div y,x,t`.
fn division_idiom(w: &[Instruction], at: u32, model: &CostModel) -> Option<Finding> {
    let (window, x, k): (&[Instruction], Reg, i32) = if w.len() >= 4
        && is(&w[0], Opcode::Srai)
        && w[0].imm == 31
        && is(&w[1], Opcode::Srli)
        && w[1].rs1 == w[0].rd
        && w[1].rd == w[0].rd
        && (1..32).contains(&w[1].imm)
    {
        (&w[..4], w[0].rs1, 32 - w[1].imm)
    } else if w.len() >= 3 && is(&w[0], Opcode::Srli) && w[0].imm == 31 {
        (&w[..3], w[0].rs1, 1)
    } else {
        return None;
    };
    let t = window[window.len() - 3].rd;
    let add = &window[window.len() - 2];
    let shift = &window[window.len() - 1];
    let chained = t != Reg::ZERO
        && t != x
        && is(add, Opcode::Add)
        && add.rd != Reg::ZERO
        && ((add.rs1 == x && add.rs2 == t) || (add.rs1 == t && add.rs2 == x))
        && is(shift, Opcode::Srai)
        && shift.rs1 == add.rd
        && shift.rd != Reg::ZERO
        && shift.imm == k;
    if !chained {
        return None;
    }
    let mut alternative = match k {
        0..=10 => vec![synth(Opcode::Addi, t, Reg::ZERO, Reg::ZERO, 1 << k)],
        11 => vec![synth(Opcode::Lui, t, Reg::ZERO, Reg::ZERO, 1 << 12), synth(Opcode::Addi, t, t, Reg::ZERO, -2048)],
        _ => vec![synth(Opcode::Lui, t, Reg::ZERO, Reg::ZERO, (1u32 << k) as i32)],
    };
    alternative.push(synth(Opcode::Div, shift.rd, x, t, 0));
    let len = window.len() as u32;
    Some(Finding {
        rule: RuleId::R1,
        start: at,
        end: at + 4 * len,
        description: format!(
            "shift sequence for signed division of {x} by {}; a single div would do",
            1u64 << k
        ),
        delta: cost_sum(window, model) - cost_sum(&alternative, model),
        insight: Insight::I3,
    })
}

/// `srai m,x,31; xor y,x,m; sub z,y,m` or `srai m,x,31; add y,x,m; xor z,y,m`,
/// compared with `bgez x, +8; sub z,zero,x`.
fn abs_idiom(w: &[Instruction], at: u32, model: &CostModel) -> Option<Finding> {
    let [mask, mix, fin, ..] = w else { return None };
    let x = mask.rs1;
    let m = mask.rd;
    if !is(mask, Opcode::Srai) || mask.imm != 31 || m == Reg::ZERO || m == x {
        return None;
    }
    let uses_both = |i: &Instruction| (i.rs1 == x && i.rs2 == m) || (i.rs1 == m && i.rs2 == x);
    let y = mix.rd;
    let chained = y != Reg::ZERO
        && y != m
        && uses_both(mix)
        && fin.rd != Reg::ZERO
        && match (mix.op, fin.op) {
            (Opcode::Xor, Opcode::Sub) => fin.rs1 == y && fin.rs2 == m,
            (Opcode::Add, Opcode::Xor) => (fin.rs1 == y && fin.rs2 == m) || (fin.rs1 == m && fin.rs2 == y),
            _ => false,
        };
    if !chained {
        return None;
    }
    let alternative = [
        synth(Opcode::Bge, Reg::ZERO, x, Reg::ZERO, 8),
        synth(Opcode::Sub, fin.rd, Reg::ZERO, x, 0),
    ];
    Some(Finding {
        rule: RuleId::R2,
        start: at,
        end: at + 12,
        description: format!("branchless absolute value of {x}; a branch and negate would do"),
        delta: cost_sum(&w[..3], model) - cost_sum(&alternative, model),
        insight: Insight::I4,
    })
}

fn paging_footprint(image: &LoadedImage, model: &CostModel, threshold: usize) -> Option<Finding> {
    let page = model.page_size() as u64;
    let mut pages = BTreeSet::new();
    let mut range: Option<(u32, u64)> = None;
    for seg in image.segments().iter().filter(|s| s.writable && !s.data.is_empty()) {
        let first = seg.vaddr as u64 / page;
        let last = (seg.end() - 1) / page;
        pages.extend(first..=last);
        range = Some(match range {
            None => (seg.vaddr, seg.end()),
            Some((s, e)) => (s.min(seg.vaddr), e.max(seg.end())),
        });
    }
    let (start, end) = range?;
    if pages.len() <= threshold {
        return None;
    }
    let n = pages.len() as i64;
    Some(Finding {
        rule: RuleId::R3,
        start,
        end: end.min(u32::MAX as u64) as u32,
        description: format!(
            "writable segments span {n} pages (threshold {threshold}); cost shown if every page is paged in and out"
        ),
        delta: n * (model.page_in_cost() + model.page_out_cost()) as i64,
        insight: Insight::I1,
    })
}

fn is_stack_base(r: Reg) -> bool {
    r == Reg::SP || r.index() == 8
}

/// Marks the backward slice of loop-control values inside `body`, starting
/// from the registers read by the closing branch at `close`. Counters kept in stack slots are
/// followed through the matching loads and stores.
fn control_slice(body: &[Instruction], close: usize) -> BTreeSet<usize> {
    let mut marked = BTreeSet::from([close]);
    let mut pending: Vec<(usize, BTreeSet<Reg>)> = vec![(close, body[close].sources().into_iter().collect())];
    let mut slots: BTreeSet<(Reg, i32)> = BTreeSet::new();
    while let Some((from, mut live)) = pending.pop() {
        live.remove(&Reg::ZERO);
        for idx in (0..from).rev() {
            if live.is_empty() {
                break;
            }
            let insn = &body[idx];
            let Some(d) = insn.dest() else { continue };
            if !live.contains(&d) {
                continue;
            }
            let counts = matches!(
                insn.op,
                Opcode::Addi | Opcode::Add | Opcode::Sub | Opcode::Slt | Opcode::Sltu | Opcode::Slti | Opcode::Sltiu
            ) || (insn.op == Opcode::Lw && is_stack_base(insn.rs1));
            live.remove(&d);
            if !counts {
                continue;
            }
            marked.insert(idx);
            if insn.op == Opcode::Lw {
                slots.insert((insn.rs1, insn.imm));
            } else {
                live.extend(insn.sources().into_iter().filter(|r| *r != Reg::ZERO));
            }
        }
        for (idx, insn) in body.iter().enumerate() {
            if insn.op == Opcode::Sw && slots.contains(&(insn.rs1, insn.imm)) && marked.insert(idx) {
                pending.push((idx, BTreeSet::from([insn.rs2])));
            }
        }
    }
    marked
}

fn loop_bookkeeping(run: &Run, model: &CostModel, ratio: f64) -> Vec<Finding> {
    let mut out = Vec::new();
    for (close, insn) in run.insns.iter().enumerate() {
        let backward = insn.imm < 0 && (insn.is_branch() || (insn.op == Opcode::Jal && insn.rd == Reg::ZERO));
        if !backward {
            continue;
        }
        let at = run.base + 4 * close as u32;
        let target = at.wrapping_add(insn.imm as u32);
        if target < run.base || target > at || (target - run.base) % 4 != 0 {
            continue;
        }
        let head = ((target - run.base) / 4) as usize;
        let body = &run.insns[head..=close];
        if body.len() < 2 {
            continue;
        }
        let marked = control_slice(body, body.len() - 1);
        let share = marked.len() as f64 / body.len() as f64;
        if share <= ratio {
            continue;
        }
        out.push(Finding {
            rule: RuleId::R4,
            start: target,
            end: at + 4,
            description: format!(
                "{} of {} loop-body instructions are loop control; unrolling candidate (delta is control cost per iteration)",
                marked.len(),
                body.len()
            ),
            delta: cost_sum(marked.iter().map(|&i| &body[i]), model),
            insight: Insight::I3,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::asm;

    fn image(words: &[u32]) -> LoadedImage {
        LoadedImage::from_words(0x1000, words)
    }

    #[test]
    fn division_body_costs_four_more_under_r0_like() {
        let words = [asm::srai(11, 10, 31), asm::srli(11, 11, 29), asm::add(10, 10, 11), asm::srai(10, 10, 3), asm::ret()];
        let found = scan(&image(&words), &CostModel::r0_like()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].rule, found[0].delta, found[0].start, found[0].end), (RuleId::R1, 4, 0x1000, 0x1010));
        let uniform = scan(&image(&words), &CostModel::uniform()).unwrap();
        assert_eq!(uniform[0].delta, 2);
    }

    #[test]
    fn halving_variant() {
        let words = [asm::srli(5, 10, 31), asm::add(6, 5, 10), asm::srai(10, 6, 1), asm::ret()];
        let found = scan(&image(&words), &CostModel::r0_like()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].delta, (2 + 1 + 2) - (1 + 2));
    }

    #[test]
    fn absolute_value() {
        let words = [asm::srai(11, 10, 31), asm::xor(10, 10, 11), asm::sub(10, 10, 11), asm::ret()];
        let found = scan(&image(&words), &CostModel::r0_like()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].rule, found[0].insight, found[0].delta), (RuleId::R2, Insight::I4, 3));
    }

    #[test]
    fn broken_chains_are_ignored() {
        let words = [asm::srai(11, 10, 31), asm::xor(10, 12, 11), asm::sub(10, 10, 11), asm::ret()];
        assert!(scan(&image(&words), &CostModel::r0_like()).unwrap().is_empty());
        let words = [asm::srai(11, 10, 31), asm::srli(11, 11, 29), asm::add(10, 10, 11), asm::srai(10, 10, 4)];
        assert!(scan(&image(&words), &CostModel::r0_like()).unwrap().is_empty());
    }

    #[test]
    fn nops_and_undecodable_entry() {
        assert!(scan(&image(&[asm::nop(); 8]), &CostModel::r0_like()).unwrap().is_empty());
        assert_eq!(
            scan(&image(&[0xffff_ffff, asm::nop()]), &CostModel::r0_like()),
            Err(AnalyzerError::UndecodableImage { entry: 0x1000 })
        );
    }

    #[test]
    fn illegal_words_split_windows_and_are_noted() {
        let words = [asm::nop(), asm::srai(11, 10, 31), asm::xor(10, 10, 11), 0, asm::sub(10, 10, 11)];
        let r = scan_with(&image(&words), &CostModel::r0_like(), &AnalyzerConfig::default()).unwrap();
        assert!(r.findings.is_empty());
        assert_eq!(r.notes, vec!["skipped undecodable words 0x100c..0x1010".to_string()]);
    }

    #[test]
    fn tight_counter_loop() {
        // loop: addi a0,a0,1; addi t0,t0,4; blt a0,a1,loop
        let words = [asm::addi(10, 10, 1), asm::addi(5, 5, 4), asm::blt(10, 11, -8), asm::ret()];
        let found = scan(&image(&words), &CostModel::uniform()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].rule, RuleId::R4);
        assert_eq!(found[0].delta, 2);
        assert_eq!((found[0].start, found[0].end), (0x1000, 0x100c));
    }

    #[test]
    fn stack_counter_loop_at_low_optimization() {
        // loop: lw a0,-20(s0); addi a0,a0,1; sw a0,-20(s0); lw a0,-20(s0); lw a1,-24(s0); blt a0,a1,loop
        let words = [
            asm::lw(10, 8, -20),
            asm::addi(10, 10, 1),
            asm::sw(10, 8, -20),
            asm::lw(10, 8, -20),
            asm::lw(11, 8, -24),
            asm::blt(10, 11, -20),
        ];
        let found = scan(&image(&words), &CostModel::uniform()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].delta, 6);
    }

    #[test]
    fn heavy_body_is_not_flagged() {
        let mut words = vec![asm::addi(10, 10, 1)];
        words.extend((0..6).map(|i| asm::mul(12 + (i % 3), 12, 13)));
        words.push(asm::blt(10, 11, -28));
        assert!(scan(&image(&words), &CostModel::uniform()).unwrap().is_empty());
    }
}
