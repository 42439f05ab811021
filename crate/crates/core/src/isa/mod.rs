//! RV32IM decoding and deterministic execution.
//!
//! Execution reports a small event stream per step (memory access, branch
//! outcome, env-call, halt); guest memory separately records which words were
//! touched so cost models can replay the paging footprint after the fact.

mod decode;
mod exec;
mod instruction;
mod machine;

use thiserror::Error;

pub use decode::{decode, encode};
pub use exec::{
    handle_ecall, run, step, step_with, Accelerator, ClassCounts, EcallRegistry, Emulator,
    EventTallies, RunExit, RunTrace, Sha256Accelerator, StepEvent, StepEvents, ECALL_EXIT,
    ECALL_SHA256, ECALL_WRITE, MAX_ECALL_BUFFER,
};
pub use instruction::{Format, InstrClass, Instruction, Opcode, Reg};
pub use machine::{HaltState, MachineState, Memory, WordTouch, CHUNK_SIZE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsaError {
    #[error("illegal instruction {word:#010x}")]
    IllegalInstruction { word: u32 },
    #[error("illegal instruction {word:#010x} at pc {pc:#x}")]
    IllegalAt { pc: u32, word: u32 },
    #[error("misaligned {width}-byte access to {addr:#x} at pc {pc:#x}")]
    MisalignedAccess { pc: u32, addr: u32, width: u32 },
    #[error("jump from {pc:#x} to misaligned target {target:#x}")]
    MisalignedFetch { pc: u32, target: u32 },
    #[error("pc {pc:#x} is outside every loaded code segment")]
    OutOfImageFetch { pc: u32 },
    #[error("unknown env-call {id:#x} at pc {pc:#x}")]
    UnknownEcall { pc: u32, id: u32 },
    #[error("env-call buffer {addr:#x}+{len} is invalid (pc {pc:#x})")]
    MemoryFault { pc: u32, addr: u32, len: u32 },
    #[error("ebreak at pc {pc:#x}")]
    Breakpoint { pc: u32 },
    #[error("machine already halted")]
    Halted,
    #[error("instruction limit reached after {retired} instructions")]
    CycleLimitExceeded { retired: u64 },
    #[error("instruction limit must be positive")]
    InvalidLimit,
}

/// Small assembler used by fixtures: each helper returns one encoded word.
pub mod asm {
    use super::{encode, Opcode, Reg};

    fn r(op: Opcode, rd: u8, rs1: u8, rs2: u8) -> u32 {
        encode(op, Reg::from_field(rd as u32), Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), 0)
    }

    fn i(op: Opcode, rd: u8, rs1: u8, imm: i32) -> u32 {
        encode(op, Reg::from_field(rd as u32), Reg::from_field(rs1 as u32), Reg::ZERO, imm)
    }

    pub fn addi(rd: u8, rs1: u8, imm: i32) -> u32 {
        i(Opcode::Addi, rd, rs1, imm)
    }
    pub fn li(rd: u8, imm: i32) -> u32 {
        addi(rd, 0, imm)
    }
    pub fn lui(rd: u8, imm: i32) -> u32 {
        i(Opcode::Lui, rd, 0, imm << 12)
    }
    pub fn add(rd: u8, rs1: u8, rs2: u8) -> u32 {
        r(Opcode::Add, rd, rs1, rs2)
    }
    pub fn sub(rd: u8, rs1: u8, rs2: u8) -> u32 {
        r(Opcode::Sub, rd, rs1, rs2)
    }
    pub fn xor(rd: u8, rs1: u8, rs2: u8) -> u32 {
        r(Opcode::Xor, rd, rs1, rs2)
    }
    pub fn div(rd: u8, rs1: u8, rs2: u8) -> u32 {
        r(Opcode::Div, rd, rs1, rs2)
    }
    pub fn mul(rd: u8, rs1: u8, rs2: u8) -> u32 {
        r(Opcode::Mul, rd, rs1, rs2)
    }
    pub fn srai(rd: u8, rs1: u8, sh: i32) -> u32 {
        i(Opcode::Srai, rd, rs1, sh)
    }
    pub fn srli(rd: u8, rs1: u8, sh: i32) -> u32 {
        i(Opcode::Srli, rd, rs1, sh)
    }
    pub fn slli(rd: u8, rs1: u8, sh: i32) -> u32 {
        i(Opcode::Slli, rd, rs1, sh)
    }
    pub fn lw(rd: u8, rs1: u8, imm: i32) -> u32 {
        i(Opcode::Lw, rd, rs1, imm)
    }
    pub fn sw(rs2: u8, rs1: u8, imm: i32) -> u32 {
        encode(Opcode::Sw, Reg::ZERO, Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), imm)
    }
    pub fn sb(rs2: u8, rs1: u8, imm: i32) -> u32 {
        encode(Opcode::Sb, Reg::ZERO, Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), imm)
    }
    pub fn beq(rs1: u8, rs2: u8, off: i32) -> u32 {
        encode(Opcode::Beq, Reg::ZERO, Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), off)
    }
    pub fn bne(rs1: u8, rs2: u8, off: i32) -> u32 {
        encode(Opcode::Bne, Reg::ZERO, Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), off)
    }
    pub fn blt(rs1: u8, rs2: u8, off: i32) -> u32 {
        encode(Opcode::Blt, Reg::ZERO, Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), off)
    }
    pub fn bge(rs1: u8, rs2: u8, off: i32) -> u32 {
        encode(Opcode::Bge, Reg::ZERO, Reg::from_field(rs1 as u32), Reg::from_field(rs2 as u32), off)
    }
    pub fn jal(rd: u8, off: i32) -> u32 {
        encode(Opcode::Jal, Reg::from_field(rd as u32), Reg::ZERO, Reg::ZERO, off)
    }
    pub fn ret() -> u32 {
        i(Opcode::Jalr, 0, 1, 0)
    }
    pub fn ecall() -> u32 {
        encode(Opcode::Ecall, Reg::ZERO, Reg::ZERO, Reg::ZERO, 0)
    }
    pub fn nop() -> u32 {
        addi(0, 0, 0)
    }

    /// `li a0, code; li a7, 93; ecall`
    pub fn exit(code: i32) -> [u32; 3] {
        [li(10, code), li(17, 93), ecall()]
    }
}
