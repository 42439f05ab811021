//! Workbench for measuring how compiler optimization choices change the cost of
//! running RV32IM guests under zkVM-style cycle models.

pub mod analyzer;
pub mod cost;
pub mod elf;
pub mod harness;
pub mod isa;
pub mod stats;
pub mod toolchain;
pub mod tuner;
