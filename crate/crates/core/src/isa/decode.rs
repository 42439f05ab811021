use super::instruction::{Format, Instruction, Opcode, Reg};
use super::IsaError;

const OP_LUI: u32 = 0b0110111;
const OP_AUIPC: u32 = 0b0010111;
const OP_JAL: u32 = 0b1101111;
const OP_JALR: u32 = 0b1100111;
const OP_BRANCH: u32 = 0b1100011;
const OP_LOAD: u32 = 0b0000011;
const OP_STORE: u32 = 0b0100011;
const OP_IMM: u32 = 0b0010011;
const OP_REG: u32 = 0b0110011;
const OP_MISC_MEM: u32 = 0b0001111;
const OP_SYSTEM: u32 = 0b1110011;

fn sext(value: u32, bits: u32) -> i32 {
    let shift = 32 - bits;
    ((value << shift) as i32) >> shift
}

fn imm_i(word: u32) -> i32 {
    (word as i32) >> 20
}

fn imm_s(word: u32) -> i32 {
    sext(((word >> 25) << 5) | ((word >> 7) & 0x1f), 12)
}

fn imm_b(word: u32) -> i32 {
    let bits = (((word >> 31) & 1) << 12)
        | (((word >> 7) & 1) << 11)
        | (((word >> 25) & 0x3f) << 5)
        | (((word >> 8) & 0xf) << 1);
    sext(bits, 13)
}

fn imm_u(word: u32) -> i32 {
    (word & 0xffff_f000) as i32
}

fn imm_j(word: u32) -> i32 {
    let bits = (((word >> 31) & 1) << 20)
        | (((word >> 12) & 0xff) << 12)
        | (((word >> 20) & 1) << 11)
        | (((word >> 21) & 0x3ff) << 1);
    sext(bits, 21)
}

/// Decodes one 32-bit word into an RV32IM instruction.
///
/// Compressed encodings (low bits != 0b11) and every floating-point opcode are
/// rejected as illegal.
pub fn decode(word: u32) -> Result<Instruction, IsaError> {
    let illegal = || IsaError::IllegalInstruction { word };
    if word & 0b11 != 0b11 {
        return Err(illegal());
    }
    let opcode = word & 0x7f;
    let rd = Reg::from_field(word >> 7);
    let rs1 = Reg::from_field(word >> 15);
    let rs2 = Reg::from_field(word >> 20);
    let funct3 = (word >> 12) & 0x7;
    let funct7 = word >> 25;

    let (op, imm) = match opcode {
        OP_LUI => (Opcode::Lui, imm_u(word)),
        OP_AUIPC => (Opcode::Auipc, imm_u(word)),
        OP_JAL => (Opcode::Jal, imm_j(word)),
        OP_JALR if funct3 == 0 => (Opcode::Jalr, imm_i(word)),
        OP_BRANCH => {
            let op = match funct3 {
                0b000 => Opcode::Beq,
                0b001 => Opcode::Bne,
                0b100 => Opcode::Blt,
                0b101 => Opcode::Bge,
                0b110 => Opcode::Bltu,
                0b111 => Opcode::Bgeu,
                _ => return Err(illegal()),
            };
            (op, imm_b(word))
        }
        OP_LOAD => {
            let op = match funct3 {
                0b000 => Opcode::Lb,
                0b001 => Opcode::Lh,
                0b010 => Opcode::Lw,
                0b100 => Opcode::Lbu,
                0b101 => Opcode::Lhu,
                _ => return Err(illegal()),
            };
            (op, imm_i(word))
        }
        OP_STORE => {
            let op = match funct3 {
                0b000 => Opcode::Sb,
                0b001 => Opcode::Sh,
                0b010 => Opcode::Sw,
                _ => return Err(illegal()),
            };
            (op, imm_s(word))
        }
        OP_IMM => match funct3 {
            0b000 => (Opcode::Addi, imm_i(word)),
            0b010 => (Opcode::Slti, imm_i(word)),
            0b011 => (Opcode::Sltiu, imm_i(word)),
            0b100 => (Opcode::Xori, imm_i(word)),
            0b110 => (Opcode::Ori, imm_i(word)),
            0b111 => (Opcode::Andi, imm_i(word)),
            0b001 if funct7 == 0 => (Opcode::Slli, rs2.index() as i32),
            0b101 if funct7 == 0 => (Opcode::Srli, rs2.index() as i32),
            0b101 if funct7 == 0b0100000 => (Opcode::Srai, rs2.index() as i32),
            _ => return Err(illegal()),
        },
        OP_REG => {
            let op = match (funct7, funct3) {
                (0, 0b000) => Opcode::Add,
                (0b0100000, 0b000) => Opcode::Sub,
                (0, 0b001) => Opcode::Sll,
                (0, 0b010) => Opcode::Slt,
                (0, 0b011) => Opcode::Sltu,
                (0, 0b100) => Opcode::Xor,
                (0, 0b101) => Opcode::Srl,
                (0b0100000, 0b101) => Opcode::Sra,
                (0, 0b110) => Opcode::Or,
                (0, 0b111) => Opcode::And,
                (1, 0b000) => Opcode::Mul,
                (1, 0b001) => Opcode::Mulh,
                (1, 0b010) => Opcode::Mulhsu,
                (1, 0b011) => Opcode::Mulhu,
                (1, 0b100) => Opcode::Div,
                (1, 0b101) => Opcode::Divu,
                (1, 0b110) => Opcode::Rem,
                (1, 0b111) => Opcode::Remu,
                _ => return Err(illegal()),
            };
            (op, 0)
        }
        // FENCE only; FENCE.I belongs to Zifencei and is not accepted.
        OP_MISC_MEM if funct3 == 0 => {
            return Ok(Instruction {
                op: Opcode::Fence,
                rd: Reg::ZERO,
                rs1: Reg::ZERO,
                rs2: Reg::ZERO,
                imm: 0,
                raw: word,
            })
        }
        OP_SYSTEM => {
            let op = match word {
                0x0000_0073 => Opcode::Ecall,
                0x0010_0073 => Opcode::Ebreak,
                _ => return Err(illegal()),
            };
            return Ok(Instruction {
                op,
                rd: Reg::ZERO,
                rs1: Reg::ZERO,
                rs2: Reg::ZERO,
                imm: 0,
                raw: word,
            });
        }
        _ => return Err(illegal()),
    };

    // Zero the fields the format does not carry so equality is operand-based.
    let (rd, rs1, rs2) = match op.format() {
        Format::R => (rd, rs1, rs2),
        Format::I => (rd, rs1, Reg::ZERO),
        Format::S | Format::B => (Reg::ZERO, rs1, rs2),
        Format::U | Format::J => (rd, Reg::ZERO, Reg::ZERO),
    };
    Ok(Instruction {
        op,
        rd,
        rs1,
        rs2,
        imm,
        raw: word,
    })
}

/// Encodes an instruction from its opcode and operand fields; the inverse of [`decode`].
///
/// `raw` on the input is ignored. Immediates are truncated to the width of the format.
pub fn encode(op: Opcode, rd: Reg, rs1: Reg, rs2: Reg, imm: i32) -> u32 {
    use Opcode::*;
    let rd = (rd.index() as u32) << 7;
    let rs1 = (rs1.index() as u32) << 15;
    let rs2 = (rs2.index() as u32) << 20;
    let imm = imm as u32;
    let r = |f7: u32, f3: u32| (f7 << 25) | rs2 | rs1 | (f3 << 12) | rd | OP_REG;
    let i = |opc: u32, f3: u32| ((imm & 0xfff) << 20) | rs1 | (f3 << 12) | rd | opc;
    let sh = |f7: u32, f3: u32| (f7 << 25) | ((imm & 0x1f) << 20) | rs1 | (f3 << 12) | rd | OP_IMM;
    let s = |f3: u32| {
        (((imm >> 5) & 0x7f) << 25) | rs2 | rs1 | (f3 << 12) | ((imm & 0x1f) << 7) | OP_STORE
    };
    let b = |f3: u32| {
        (((imm >> 12) & 1) << 31)
            | (((imm >> 5) & 0x3f) << 25)
            | rs2
            | rs1
            | (f3 << 12)
            | (((imm >> 1) & 0xf) << 8)
            | (((imm >> 11) & 1) << 7)
            | OP_BRANCH
    };
    match op {
        Lui => (imm & 0xffff_f000) | rd | OP_LUI,
        Auipc => (imm & 0xffff_f000) | rd | OP_AUIPC,
        Jal => {
            (((imm >> 20) & 1) << 31)
                | (((imm >> 1) & 0x3ff) << 21)
                | (((imm >> 11) & 1) << 20)
                | (((imm >> 12) & 0xff) << 12)
                | rd
                | OP_JAL
        }
        Jalr => i(OP_JALR, 0),
        Beq => b(0b000),
        Bne => b(0b001),
        Blt => b(0b100),
        Bge => b(0b101),
        Bltu => b(0b110),
        Bgeu => b(0b111),
        Lb => i(OP_LOAD, 0b000),
        Lh => i(OP_LOAD, 0b001),
        Lw => i(OP_LOAD, 0b010),
        Lbu => i(OP_LOAD, 0b100),
        Lhu => i(OP_LOAD, 0b101),
        Sb => s(0b000),
        Sh => s(0b001),
        Sw => s(0b010),
        Addi => i(OP_IMM, 0b000),
        Slti => i(OP_IMM, 0b010),
        Sltiu => i(OP_IMM, 0b011),
        Xori => i(OP_IMM, 0b100),
        Ori => i(OP_IMM, 0b110),
        Andi => i(OP_IMM, 0b111),
        Slli => sh(0, 0b001),
        Srli => sh(0, 0b101),
        Srai => sh(0b0100000, 0b101),
        Add => r(0, 0b000),
        Sub => r(0b0100000, 0b000),
        Sll => r(0, 0b001),
        Slt => r(0, 0b010),
        Sltu => r(0, 0b011),
        Xor => r(0, 0b100),
        Srl => r(0, 0b101),
        Sra => r(0b0100000, 0b101),
        Or => r(0, 0b110),
        And => r(0, 0b111),
        Mul => r(1, 0b000),
        Mulh => r(1, 0b001),
        Mulhsu => r(1, 0b010),
        Mulhu => r(1, 0b011),
        Div => r(1, 0b100),
        Divu => r(1, 0b101),
        Rem => r(1, 0b110),
        Remu => r(1, 0b111),
        Fence => 0x0ff0_000f,
        Ecall => 0x0000_0073,
        Ebreak => 0x0010_0073,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_nop() {
        let i = decode(0x0000_0013).unwrap();
        assert_eq!(i.op, Opcode::Addi);
        assert_eq!((i.rd, i.rs1, i.imm), (Reg::ZERO, Reg::ZERO, 0));
    }

    #[test]
    fn all_ones_is_illegal() {
        assert_eq!(
            decode(0xFFFF_FFFF),
            Err(IsaError::IllegalInstruction { word: 0xFFFF_FFFF })
        );
    }

    #[test]
    fn li_a1_5() {
        // `li a1, 5` as emitted by clang/llvm-mc for rv32im.
        let i = decode(0x0050_0593).unwrap();
        assert_eq!(i.op, Opcode::Addi);
        assert_eq!(i.rd, Reg::A1);
        assert_eq!(i.rs1, Reg::ZERO);
        assert_eq!(i.imm, 5);
    }

    #[test]
    fn reference_listing() {
        // (word, text) pairs from an llvm-objdump listing of rv32im code.
        let listing = [
            (0x41f5_5593, "srai a1, a0, 31"),
            (0x01d5_d593, "srli a1, a1, 29"),
            (0x00b5_0533, "add a0, a0, a1"),
            (0x4035_5513, "srai a0, a0, 3"),
            (0x0000_8067, "jalr zero, 0(ra)"),
            (0x02b5_4533, "div a0, a0, a1"),
            (0x00b5_4533, "xor a0, a0, a1"),
            (0x40b5_0533, "sub a0, a0, a1"),
            (0xfe01_0113, "addi sp, sp, -32"),
            (0x00112e23, "sw ra, 28(sp)"),
            (0x01c12083, "lw ra, 28(sp)"),
            (0x0000_0073, "ecall"),
        ];
        for (word, text) in listing {
            assert_eq!(decode(word).unwrap().to_string(), text, "{word:#010x}");
        }
    }

    #[test]
    fn branch_and_jump_immediates() {
        // beq a0, a1, -8
        let b = decode(encode(Opcode::Beq, Reg::ZERO, Reg::A0, Reg::A1, -8)).unwrap();
        assert_eq!(b.imm, -8);
        // j . (jal x0, 0)
        assert_eq!(encode(Opcode::Jal, Reg::ZERO, Reg::ZERO, Reg::ZERO, 0), 0x0000_006f);
        let j = decode(0x0000_006f).unwrap();
        assert_eq!((j.op, j.imm), (Opcode::Jal, 0));
        // jal ra, 2048
        let j = decode(encode(Opcode::Jal, Reg::RA, Reg::ZERO, Reg::ZERO, 2048)).unwrap();
        assert_eq!(j.imm, 2048);
    }

    #[test]
    fn floating_point_and_compressed_rejected() {
        // flw fa0, 0(a0)
        assert!(decode(0x0005_2507).is_err());
        // fadd.s fa0, fa0, fa1
        assert!(decode(0x00b5_7553).is_err());
        // c.nop
        assert!(decode(0x0000_0001).is_err());
        // csrrw
        assert!(decode(0x3400_1073).is_err());
    }
}
