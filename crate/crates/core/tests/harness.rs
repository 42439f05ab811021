use std::path::PathBuf;

use zkopt::cost::CostModel;
use zkopt::harness::{native_time, Bench, HarnessError, NativeConfig, Program};
use zkopt::toolchain::{OptLevel, OptProfile, SourceUnit, Toolchain, ToolchainConfig};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/src").join(name)
}

#[test]
fn loop_sum_grows_linearly() {
    let tc = Toolchain::new(ToolchainConfig::default()).unwrap();
    let bench = Bench::new(Some(&tc));
    let model = CostModel::r0_like();
    let cycles = |n: u32| {
        let program = Program::from_source("loop-sum", corpus("loop-sum.c")).with_define("N", n.to_string());
        bench.run_benchmark(&program, &OptProfile::baseline(), &model).total_cycles().unwrap()
    };
    let ratio = cycles(8000) as f64 / cycles(4000) as f64;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn repeated_rows_differ_only_in_timing() {
    let tc = Toolchain::new(ToolchainConfig::default()).unwrap();
    let bench = Bench::new(Some(&tc));
    let program = Program::from_source("fibonacci", corpus("fibonacci.c"));
    let profile = OptProfile::level(OptLevel::O2);
    let model = CostModel::uniform();
    let a = bench.run_benchmark(&program, &profile, &model);
    let b = bench.run_benchmark(&program, &profile, &model);
    assert!(a.ok());
    assert_eq!(a.without_timing(), b.without_timing());
}

#[test]
fn fission_costs_more_under_the_zk_models() {
    let tc = Toolchain::new(ToolchainConfig::default()).unwrap();
    let bench = Bench::new(Some(&tc));
    for model in [CostModel::uniform(), CostModel::r0_like()] {
        let total = |name: &str| {
            let program = Program::from_source(name, corpus(&format!("{name}.c"))).with_define("N", "16384");
            bench.run_benchmark(&program, &OptProfile::baseline(), &model).total_cycles().unwrap()
        };
        assert!(total("fission-fused") <= total("fission-split"), "{}", model.name());
    }
}

#[test]
fn native_timing() {
    let dir = tempfile::tempdir().unwrap();
    let trivial = dir.path().join("exit.c");
    std::fs::write(&trivial, "int main(void) { return 0; }\n").unwrap();
    let config = NativeConfig { repetitions: 3, ..NativeConfig::default() };
    let t = native_time(&SourceUnit::new("exit", &trivial), OptLevel::O2, &config).unwrap();
    assert_eq!(t.samples.len(), 3);
    assert!(t.median_seconds > 0.0);

    let fused = SourceUnit::new("fused", corpus("fission-fused.c")).with_define("N", "4096");
    assert!(native_time(&fused, OptLevel::O0, &config).is_ok());

    let broken = dir.path().join("broken.c");
    std::fs::write(&broken, "int main(void) { return }\n").unwrap();
    assert!(matches!(
        native_time(&SourceUnit::new("broken", &broken), OptLevel::O0, &config),
        Err(HarnessError::HostBuildFailed(_))
    ));
}
