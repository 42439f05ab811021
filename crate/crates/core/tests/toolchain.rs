use std::path::PathBuf;

use zkopt::cost::{account, CostModel};
use zkopt::elf::load_elf;
use zkopt::isa::Emulator;
use zkopt::toolchain::{OptLevel, OptProfile, SourceUnit, Toolchain, ToolchainConfig, ToolchainError};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/src").join(name)
}

fn toolchain() -> Toolchain {
    Toolchain::new(ToolchainConfig::default()).unwrap()
}

fn run_output(elf: &[u8]) -> (Option<u32>, Vec<u8>, u64) {
    let img = load_elf(elf).unwrap();
    let emu = Emulator::new(&img);
    let trace = emu.run(emu.initial_state(), 50_000_000).unwrap();
    let cycles = account(&trace, &CostModel::uniform()).total;
    (trace.exit_code(), trace.output.clone(), cycles)
}

#[test]
fn baseline_build_runs_and_is_deterministic() {
    let tc = toolchain();
    let unit = SourceUnit::new("loop-sum", corpus("loop-sum.c")).with_define("N", "100");
    let a = tc.compile(&unit, &OptProfile::baseline()).unwrap();
    let b = tc.compile(&unit, &OptProfile::baseline()).unwrap();
    assert_eq!(a.hash, b.hash);
    assert!(!a.log.contains("opt "), "{}", a.log);
    let expected: u32 = (0..100u32).map(|i| i * i + (i >> 3)).sum();
    let (exit, out, _) = run_output(&a.elf);
    assert_eq!(exit, Some(0));
    assert_eq!(String::from_utf8(out).unwrap(), format!("{expected}\n"));
}

#[test]
fn unknown_pass_is_reported() {
    let unit = SourceUnit::new("loop-sum", corpus("loop-sum.c"));
    match toolchain().compile(&unit, &OptProfile::passes(["not-a-pass"])) {
        Err(ToolchainError::UnknownPass { pass, stderr }) => {
            assert_eq!(pass, "not-a-pass");
            assert!(stderr.contains("not-a-pass"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn every_default_pass_compiles_and_preserves_output() {
    let tc = toolchain();
    let unit = SourceUnit::new("factorial", corpus("factorial.c")).with_define("ROUNDS", "5");
    let base = run_output(&tc.compile(&unit, &OptProfile::baseline()).unwrap().elf);
    let names: Vec<String> = tc.catalog().names().map(str::to_string).collect();
    for name in names {
        let art = tc.compile(&unit, &OptProfile::passes([name.as_str()])).unwrap();
        let got = run_output(&art.elf);
        assert_eq!((got.0, &got.1), (base.0, &base.1), "pass {name}");
    }
}

#[test]
fn levels_and_thresholds_build() {
    let tc = toolchain();
    let unit = SourceUnit::new("fibonacci", corpus("fibonacci.c"));
    let base = run_output(&tc.compile(&unit, &OptProfile::baseline()).unwrap().elf);
    let o3 = tc
        .compile(&unit, &OptProfile::level(OptLevel::O3).with_threshold("inline-threshold", 4328))
        .unwrap();
    let got = run_output(&o3.elf);
    assert_eq!((got.0, &got.1), (base.0, &base.1));
    assert!(got.2 < base.2);
    let lto = tc.compile(&unit, &OptProfile::passes(["inline"]).with_lto(true)).unwrap();
    assert_eq!(run_output(&lto.elf).1, base.1);
}

#[test]
fn broken_source_fails_with_log() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("bad.c");
    std::fs::write(&src, "int main(void) { return }").unwrap();
    match toolchain().compile(&SourceUnit::new("bad", &src), &OptProfile::baseline()) {
        Err(ToolchainError::CompileFailed { stage, log, .. }) => {
            assert_eq!(stage, "frontend");
            assert!(log.contains("error"));
        }
        other => panic!("unexpected {other:?}"),
    }
}
