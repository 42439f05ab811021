use proptest::prelude::*;
use zkopt::analyzer::{scan, RuleId};
use zkopt::cost::{instruction_cost, CostModel};
use zkopt::elf::LoadedImage;
use zkopt::isa::{asm, decode};

fn image(words: &[u32]) -> LoadedImage {
    LoadedImage::from_words(0x4000, words)
}

fn rules(words: &[u32]) -> Vec<RuleId> {
    scan(&image(words), &CostModel::r0_like()).unwrap().into_iter().map(|f| f.rule).collect()
}

fn cost(words: &[u32], model: &CostModel) -> i64 {
    words.iter().map(|w| instruction_cost(&decode(*w).unwrap(), model) as i64).sum()
}

/// Three distinct non-zero registers.
fn regs3() -> impl Strategy<Value = (u8, u8, u8)> {
    (1u8..32, 1u8..32, 1u8..32).prop_filter("distinct", |(a, b, c)| a != b && b != c && a != c)
}

fn division(x: u8, t: u8, y: u8, k: i32) -> Vec<u32> {
    vec![asm::srai(t, x, 31), asm::srli(t, t, 32 - k), asm::add(y, x, t), asm::srai(y, y, k)]
}

fn abs(x: u8, m: u8, y: u8) -> Vec<u32> {
    vec![asm::srai(m, x, 31), asm::xor(y, x, m), asm::sub(y, y, m)]
}

/// Rewrites one register field of one instruction, keeping the opcode.
fn rewrite(word: u32, field: usize, reg: u8) -> u32 {
    let shift = [7, 15, 20][field];
    (word & !(0x1f << shift)) | ((reg as u32) << shift)
}

proptest! {
    #[test]
    fn chained_division_is_found_with_model_delta((x, t, y) in regs3(), k in 2i32..=30) {
        let w = division(x, t, y, k);
        for model in [CostModel::r0_like(), CostModel::uniform()] {
            let found = scan(&image(&w), &model).unwrap();
            prop_assert_eq!(found.len(), 1);
            let alt = if k <= 10 { vec![asm::li(t, 1 << k)] } else if k == 11 { vec![asm::lui(t, 1), asm::addi(t, t, -2048)] } else { vec![asm::lui(t, 1 << (k - 12))] };
            let alt: Vec<u32> = alt.into_iter().chain([asm::div(y, x, t)]).collect();
            prop_assert_eq!(found[0].delta, cost(&w, &model) - cost(&alt, &model));
        }
    }

    #[test]
    fn broken_division_chain_is_ignored((x, t, y) in regs3(), k in 2i32..=30, pos in 0usize..4, field in 0usize..3, other in 0u8..32) {
        let w = division(x, t, y, k);
        let original = (w[pos] >> [7, 15, 20][field]) & 0x1f;
        // Skip fields that do not carry a register for the opcode at `pos`.
        let is_operand = !(field == 2 && pos != 2);
        prop_assume!(is_operand && other as u32 != original);
        let mut bad = w.clone();
        bad[pos] = rewrite(w[pos], field, other);
        // The final destination is free to change.
        prop_assume!(!(pos == 3 && field == 0 && other != 0));
        prop_assert!(!rules(&bad).contains(&RuleId::R1), "{:?}", bad);
    }

    #[test]
    fn shuffled_division_order_is_ignored((x, t, y) in regs3(), k in 2i32..=30, perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        prop_assume!(perm != [0, 1, 2, 3]);
        let w = division(x, t, y, k);
        let shuffled: Vec<u32> = perm.iter().map(|&i| w[i]).collect();
        prop_assert!(!rules(&shuffled).contains(&RuleId::R1));
    }

    #[test]
    fn chained_abs_is_found((x, m, y) in regs3()) {
        for model in [CostModel::r0_like(), CostModel::uniform()] {
            let found = scan(&image(&abs(x, m, y)), &model).unwrap();
            prop_assert_eq!(found.len(), 1);
            prop_assert_eq!(found[0].rule, RuleId::R2);
            let alt = [asm::bge(x, 0, 8), asm::sub(y, 0, x)];
            prop_assert_eq!(found[0].delta, cost(&abs(x, m, y), &model) - cost(&alt, &model));
        }
    }

    #[test]
    fn broken_abs_chain_is_ignored((x, m, y) in regs3(), pos in 0usize..3, field in 0usize..3, other in 0u8..32) {
        let w = abs(x, m, y);
        let original = (w[pos] >> [7, 15, 20][field]) & 0x1f;
        prop_assume!(!(field == 2 && pos == 0) && other as u32 != original);
        // The final destination is free to change.
        prop_assume!(!(pos == 2 && field == 0 && other != 0));
        let mut bad = w.clone();
        bad[pos] = rewrite(w[pos], field, other);
        prop_assert!(!rules(&bad).contains(&RuleId::R2), "{:?}", bad);
    }

    #[test]
    fn shuffled_abs_order_is_ignored((x, m, y) in regs3(), perm in Just([0usize, 1, 2]).prop_shuffle()) {
        prop_assume!(perm != [0, 1, 2]);
        let w = abs(x, m, y);
        let shuffled: Vec<u32> = perm.iter().map(|&i| w[i]).collect();
        prop_assert!(!rules(&shuffled).contains(&RuleId::R2));
    }

    #[test]
    fn scan_is_deterministic(words in proptest::collection::vec(any::<u32>(), 1..64)) {
        let mut words = words;
        words[0] = asm::nop();
        let img = image(&words);
        let model = CostModel::r0_like();
        let a = scan(&img, &model).unwrap();
        prop_assert_eq!(&a, &scan(&img, &model).unwrap());
        for f in &a {
            prop_assert!(f.start >= 0x4000 && f.end <= 0x4000 + 4 * words.len() as u32 && f.start < f.end);
        }
    }
}

#[test]
fn paging_footprint_threshold() {
    use std::collections::BTreeMap;
    use zkopt::elf::Segment;
    let code: Vec<u8> = asm::exit(0).iter().flat_map(|w| w.to_le_bytes()).collect();
    let build = |pages: usize| {
        let segs = vec![
            Segment { vaddr: 0x1000, file_size: code.len() as u32, data: code.clone(), writable: false, executable: true },
            Segment { vaddr: 0x10_0000, file_size: 0, data: vec![0; pages * 1024], writable: true, executable: false },
        ];
        LoadedImage::new(0x1000, segs, BTreeMap::new()).unwrap()
    };
    let m = CostModel::r0_like();
    assert!(scan(&build(16), &m).unwrap().is_empty());
    let found = scan(&build(17), &m).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].rule, RuleId::R3);
    assert_eq!(found[0].delta, 17 * 2260);
    assert_eq!((found[0].start, found[0].end), (0x10_0000, 0x10_0000 + 17 * 1024));
}
