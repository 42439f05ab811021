use proptest::prelude::*;

use zkopt::cost::{account, CostModel};
use zkopt::elf::LoadedImage;
use zkopt::harness::{categorize, correlate, ImpactCategory, ImpactThresholds};
use zkopt::isa::{asm, decode, encode, Emulator, InstrClass, Opcode, Reg};

const ALU_R: [Opcode; 18] = [
    Opcode::Add,
    Opcode::Sub,
    Opcode::Sll,
    Opcode::Slt,
    Opcode::Sltu,
    Opcode::Xor,
    Opcode::Srl,
    Opcode::Sra,
    Opcode::Or,
    Opcode::And,
    Opcode::Mul,
    Opcode::Mulh,
    Opcode::Mulhsu,
    Opcode::Mulhu,
    Opcode::Div,
    Opcode::Divu,
    Opcode::Rem,
    Opcode::Remu,
];
const ALU_I: [Opcode; 6] = [Opcode::Addi, Opcode::Slti, Opcode::Sltiu, Opcode::Xori, Opcode::Ori, Opcode::Andi];
const SHIFT_I: [Opcode; 3] = [Opcode::Slli, Opcode::Srli, Opcode::Srai];

fn reg() -> impl Strategy<Value = Reg> {
    (0u32..32).prop_map(Reg::from_field)
}

/// One register-only instruction word, `x0` allowed as destination.
fn alu_word() -> impl Strategy<Value = u32> {
    prop_oneof![
        (0..ALU_R.len(), reg(), reg(), reg()).prop_map(|(i, d, a, b)| encode(ALU_R[i], d, a, b, 0)),
        (0..ALU_I.len(), reg(), reg(), -2048i32..2048).prop_map(|(i, d, a, imm)| encode(ALU_I[i], d, a, Reg::ZERO, imm)),
        (0..SHIFT_I.len(), reg(), reg(), 0i32..32).prop_map(|(i, d, a, sh)| encode(SHIFT_I[i], d, a, Reg::ZERO, sh)),
        (reg(), any::<i32>()).prop_map(|(d, imm)| encode(Opcode::Lui, d, Reg::ZERO, Reg::ZERO, imm)),
        (reg(), any::<i32>()).prop_map(|(d, imm)| encode(Opcode::Auipc, d, Reg::ZERO, Reg::ZERO, imm)),
    ]
}

fn alu_program() -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(alu_word(), 1..48).prop_map(|mut words| {
        words.extend([asm::li(17, 93), asm::ecall()]);
        words
    })
}

proptest! {
    #[test]
    fn decode_encode_is_stable(word in any::<u32>()) {
        if let Ok(d) = decode(word) {
            let again = encode(d.op, d.rd, d.rs1, d.rs2, d.imm);
            let d2 = decode(again).expect("re-encoded word decodes");
            prop_assert_eq!((d2.op, d2.rd, d2.rs1, d2.rs2, d2.imm), (d.op, d.rd, d.rs1, d.rs2, d.imm));
            prop_assert_eq!(encode(d2.op, d2.rd, d2.rs1, d2.rs2, d2.imm), again);
        }
    }

    #[test]
    fn zero_register_never_changes(words in alu_program()) {
        let image = LoadedImage::from_words(0x1000, &words);
        let emu = Emulator::new(&image);
        let mut state = emu.initial_state();
        while !state.is_halted() {
            emu.step(&mut state).unwrap();
            prop_assert_eq!(state.reg(Reg::ZERO), 0);
        }
    }

    #[test]
    fn accounting_is_pure_and_decomposes(words in alu_program()) {
        let image = LoadedImage::from_words(0x1000, &words);
        let emu = Emulator::new(&image);
        let trace = emu.run(emu.initial_state(), 1_000).unwrap();
        for model in [CostModel::r0_like(), CostModel::uniform()] {
            let a = account(&trace, &model);
            prop_assert_eq!(&a, &account(&trace, &model));
            prop_assert!(a.is_consistent(&model));
            let compute: u64 = InstrClass::ALL.iter().map(|&c| trace.class_counts.get(c) * model.class_cost(c)).sum();
            prop_assert_eq!(a.compute, compute);
        }
    }

    #[test]
    fn categories_partition_and_are_monotone(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(categorize(lo) <= categorize(hi));
        let t = ImpactThresholds::default();
        let hits = ImpactCategory::ALL.iter().filter(|&&c| t.categorize(a) == c).count();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn correlation_invariances(
        pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40),
        scale in 0.1f64..100.0,
        shift in -1e3f64..1e3,
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let Ok(base) = correlate(&xs, &ys) else { return Ok(()) };
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&base.pearson));
        let sym = correlate(&ys, &xs).unwrap();
        prop_assert!((sym.pearson - base.pearson).abs() < 1e-9 && (sym.spearman - base.spearman).abs() < 1e-9);
        let affine: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let moved = correlate(&affine, &ys).unwrap();
        prop_assert!((moved.pearson - base.pearson).abs() < 1e-6);
        prop_assert!((moved.spearman - base.spearman).abs() < 1e-9);
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let mono = correlate(&cubed, &ys).unwrap();
        prop_assert!((mono.spearman - base.spearman).abs() < 1e-9);
        let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
        let neg = correlate(&flipped, &ys).unwrap();
        prop_assert!((neg.pearson + base.pearson).abs() < 1e-9);
    }
}
