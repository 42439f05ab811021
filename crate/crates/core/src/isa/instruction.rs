use std::fmt;

use serde::{Deserialize, Serialize};

/// Every RV32IM operation the emulator understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Lui,
    Auipc,
    Jal,
    Jalr,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Fence,
    Ecall,
    Ebreak,
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
}

/// Cost-accounting bucket an opcode falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstrClass {
    Arithmetic,
    Shift,
    Bitwise,
    MulDiv,
    Load,
    Store,
    Branch,
    Jump,
    EnvCall,
}

impl InstrClass {
    pub const ALL: [InstrClass; 9] = [
        InstrClass::Arithmetic,
        InstrClass::Shift,
        InstrClass::Bitwise,
        InstrClass::MulDiv,
        InstrClass::Load,
        InstrClass::Store,
        InstrClass::Branch,
        InstrClass::Jump,
        InstrClass::EnvCall,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            InstrClass::Arithmetic => "arithmetic",
            InstrClass::Shift => "shift",
            InstrClass::Bitwise => "bitwise",
            InstrClass::MulDiv => "mul-div",
            InstrClass::Load => "load",
            InstrClass::Store => "store",
            InstrClass::Branch => "branch",
            InstrClass::Jump => "jump",
            InstrClass::EnvCall => "env-call",
        }
    }
}

impl fmt::Display for InstrClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Opcode {
    pub fn class(self) -> InstrClass {
        use Opcode::*;
        match self {
            Lui | Auipc | Addi | Slti | Sltiu | Add | Sub | Slt | Sltu | Fence => {
                InstrClass::Arithmetic
            }
            Slli | Srli | Srai | Sll | Srl | Sra => InstrClass::Shift,
            Xori | Ori | Andi | Xor | Or | And => InstrClass::Bitwise,
            Mul | Mulh | Mulhsu | Mulhu | Div | Divu | Rem | Remu => InstrClass::MulDiv,
            Lb | Lh | Lw | Lbu | Lhu => InstrClass::Load,
            Sb | Sh | Sw => InstrClass::Store,
            Beq | Bne | Blt | Bge | Bltu | Bgeu => InstrClass::Branch,
            Jal | Jalr => InstrClass::Jump,
            Ecall | Ebreak => InstrClass::EnvCall,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        use Opcode::*;
        match self {
            Lui => "lui",
            Auipc => "auipc",
            Jal => "jal",
            Jalr => "jalr",
            Beq => "beq",
            Bne => "bne",
            Blt => "blt",
            Bge => "bge",
            Bltu => "bltu",
            Bgeu => "bgeu",
            Lb => "lb",
            Lh => "lh",
            Lw => "lw",
            Lbu => "lbu",
            Lhu => "lhu",
            Sb => "sb",
            Sh => "sh",
            Sw => "sw",
            Addi => "addi",
            Slti => "slti",
            Sltiu => "sltiu",
            Xori => "xori",
            Ori => "ori",
            Andi => "andi",
            Slli => "slli",
            Srli => "srli",
            Srai => "srai",
            Add => "add",
            Sub => "sub",
            Sll => "sll",
            Slt => "slt",
            Sltu => "sltu",
            Xor => "xor",
            Srl => "srl",
            Sra => "sra",
            Or => "or",
            And => "and",
            Fence => "fence",
            Ecall => "ecall",
            Ebreak => "ebreak",
            Mul => "mul",
            Mulh => "mulh",
            Mulhsu => "mulhsu",
            Mulhu => "mulhu",
            Div => "div",
            Divu => "divu",
            Rem => "rem",
            Remu => "remu",
        }
    }

    /// Encoding format, which fixes how the immediate is assembled.
    pub fn format(self) -> Format {
        use Opcode::*;
        match self {
            Lui | Auipc => Format::U,
            Jal => Format::J,
            Beq | Bne | Blt | Bge | Bltu | Bgeu => Format::B,
            Sb | Sh | Sw => Format::S,
            Add | Sub | Sll | Slt | Sltu | Xor | Srl | Sra | Or | And | Mul | Mulh | Mulhsu
            | Mulhu | Div | Divu | Rem | Remu => Format::R,
            _ => Format::I,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    R,
    I,
    S,
    B,
    U,
    J,
}

/// A register index in `0..32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Reg(u8);

impl Reg {
    pub const ZERO: Reg = Reg(0);
    pub const RA: Reg = Reg(1);
    pub const SP: Reg = Reg(2);
    pub const A0: Reg = Reg(10);
    pub const A1: Reg = Reg(11);
    pub const A2: Reg = Reg(12);
    pub const A7: Reg = Reg(17);

    /// Masks to five bits; every encoding field is five bits wide.
    pub const fn from_field(bits: u32) -> Reg {
        Reg((bits & 0x1f) as u8)
    }

    pub fn new(index: u8) -> Option<Reg> {
        (index < 32).then_some(Reg(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn abi_name(self) -> &'static str {
        const NAMES: [&str; 32] = [
            "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3",
            "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11",
            "t3", "t4", "t5", "t6",
        ];
        NAMES[self.index()]
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abi_name())
    }
}

/// One decoded instruction. Unused operand fields are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Opcode,
    pub rd: Reg,
    pub rs1: Reg,
    pub rs2: Reg,
    pub imm: i32,
    pub raw: u32,
}

impl Instruction {
    pub fn class(&self) -> InstrClass {
        self.op.class()
    }

    pub fn is_branch(&self) -> bool {
        self.class() == InstrClass::Branch
    }

    /// Registers this instruction reads.
    pub fn sources(&self) -> Vec<Reg> {
        match self.op.format() {
            Format::R | Format::S | Format::B => vec![self.rs1, self.rs2],
            Format::I => match self.op {
                Opcode::Fence | Opcode::Ecall | Opcode::Ebreak => vec![],
                _ => vec![self.rs1],
            },
            Format::U | Format::J => vec![],
        }
    }

    /// Register written, if any (writes to x0 are discarded and reported as `None`).
    pub fn dest(&self) -> Option<Reg> {
        match self.op.format() {
            Format::S | Format::B => None,
            _ if matches!(self.op, Opcode::Fence | Opcode::Ecall | Opcode::Ebreak) => None,
            _ if self.rd == Reg::ZERO => None,
            _ => Some(self.rd),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.op.mnemonic();
        match self.op.format() {
            Format::R => write!(f, "{m} {}, {}, {}", self.rd, self.rs1, self.rs2),
            Format::I => match self.op {
                Opcode::Fence | Opcode::Ecall | Opcode::Ebreak => f.write_str(m),
                Opcode::Lb | Opcode::Lh | Opcode::Lw | Opcode::Lbu | Opcode::Lhu | Opcode::Jalr => {
                    write!(f, "{m} {}, {}({})", self.rd, self.imm, self.rs1)
                }
                _ => write!(f, "{m} {}, {}, {}", self.rd, self.rs1, self.imm),
            },
            Format::S => write!(f, "{m} {}, {}({})", self.rs2, self.imm, self.rs1),
            Format::B => write!(f, "{m} {}, {}, {}", self.rs1, self.rs2, self.imm),
            Format::U => write!(f, "{m} {}, {:#x}", self.rd, (self.imm as u32) >> 12),
            Format::J => write!(f, "{m} {}, {}", self.rd, self.imm),
        }
    }
}
