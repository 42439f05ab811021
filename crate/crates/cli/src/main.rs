mod config;

use std::collections::BTreeMap;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use config::RunConfig;
use zkopt::analyzer::{findings_jsonl, scan_with, AnalyzerConfig};
use zkopt::cost::{account, CostModel, ProvingEstimator};
use zkopt::elf::load_elf;
use zkopt::harness::{
    compare, diff_oracle, emit_report, execute_elf, impact_csv, impact_rows, inject_output_fault, metrics_csv,
    native_time, read_rows_jsonl, write_rows_jsonl, Bench, CorpusManifest, ImpactThresholds, Metric, MetricsRow,
    NativeConfig, OracleVerdict, Program, ReportFormat, ReportOptions, RunStatus, TunerComparison,
};
use zkopt::toolchain::{
    expand_profiles, ArtifactStore, OptLevel, OptProfile, PassCatalog, ProfileKind, Toolchain, ToolchainConfig,
    TOOLCHAIN_ENV,
};
use zkopt::tuner::{mine_subsequences, tune, FitnessTarget, TuneConfig, TuneResult};

/// Exit status for configuration and tool errors.
const EXIT_CONFIG: u8 = 2;
/// Exit status when the differential oracle finds a divergence.
const EXIT_DIVERGENT: u8 = 1;

#[derive(Parser)]
#[command(name = "zkopt", version, about = "Measure and search compiler optimizations under zkVM cycle models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration file (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cost model name (`r0-like`, `uniform`) or model file. Repeatable.
    #[arg(long = "model", global = true)]
    models: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tuner budget in candidate evaluations.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Parallel builds and runs (default: available CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for result files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Toolchain config file; overrides the ZKOPT_TOOLCHAIN variable.
    #[arg(long, global = true)]
    toolchain: Option<PathBuf>,
    /// Corpus manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Pass catalog (TOML).
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ELF and print its cycle breakdown.
    Run {
        elf: PathBuf,
        #[arg(long)]
        limit: Option<u64>,
        /// Copy the guest's output to stderr.
        #[arg(long)]
        show_output: bool,
    },
    /// Run corpus programs under optimization profiles.
    Bench {
        /// Program ids from the manifest (default: all).
        #[arg(long = "program")]
        programs: Vec<String>,
        /// Profile ids such as `baseline`, `O3` or `passes:licm,gvn` (default:
        /// baseline, every catalog pass and the six levels).
        #[arg(long = "profile")]
        profiles: Vec<String>,
        /// Also time host builds of baseline and level profiles.
        #[arg(long)]
        native: bool,
    },
    /// Search pass sequences for one program.
    Tune {
        /// Manifest program id or a C source path.
        program: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
        /// Report estimated proving seconds (needs an estimator in the config).
        #[arg(long)]
        proving: bool,
        /// Skip evaluating the standard levels.
        #[arg(long)]
        no_levels: bool,
    },
    /// Count passes and pass pairs in the best and worst tuned sequences.
    Mine {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        #[arg(short, long, default_value_t = 2)]
        n: usize,
    },
    /// Static findings for an ELF or a corpus program.
    Analyze {
        /// ELF path, manifest program id or C source path.
        target: String,
        /// Profile to build a program under.
        #[arg(long, default_value = "baseline")]
        profile: String,
        #[arg(long)]
        page_threshold: Option<usize>,
        #[arg(long)]
        loop_ratio: Option<f64>,
        /// Human-readable lines instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Compare a program's behaviour under two profiles.
    Oracle {
        /// Manifest program id or a C source path.
        program: String,
        #[arg(long, default_value = "baseline")]
        a: String,
        #[arg(long, default_value = "O3")]
        b: String,
        /// Corrupt the second build's output before running it.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Render stored rows.
    Report {
        /// Rows file written by `bench` (JSON lines).
        rows: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Summary)]
        format: Format,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        moderate: Option<f64>,
        #[arg(long)]
        severe: Option<f64>,
        /// Tuning logs to compare against -O3.
        #[arg(long = "tune-log")]
        tune_logs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    MetricsCsv,
    ImpactCsv,
    Summary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

/// Settings merged from the config file and flags.
struct Ctx {
    cfg: RunConfig,
    global: Global,
}

impl Ctx {
    fn models(&self) -> Result<Vec<CostModel>> {
        let names = if !self.global.models.is_empty() {
            self.global.models.clone()
        } else if !self.cfg.models.is_empty() {
            self.cfg.models.clone()
        } else {
            vec!["r0-like".to_string()]
        };
        names
            .iter()
            .map(|n| CostModel::resolve(n).map_err(|e| anyhow!("cost model `{n}`: {e}")))
            .collect()
    }

    fn model(&self) -> Result<CostModel> {
        let mut models = self.models()?;
        if models.len() > 1 {
            warn!("several models given; using `{}`", models[0].name());
        }
        Ok(models.remove(0))
    }

    fn jobs(&self) -> Option<usize> {
        self.global.jobs.or(self.cfg.jobs)
    }

    fn output(&self) -> Option<PathBuf> {
        self.global.output.clone().or_else(|| self.cfg.output.clone())
    }

    fn estimator(&self) -> Result<Option<ProvingEstimator>> {
        self.cfg
            .estimator
            .map(|e| ProvingEstimator::new(e.intercept, e.slope).map_err(|e| anyhow!("estimator: {e}")))
            .transpose()
    }

    fn toolchain(&self) -> Result<Toolchain> {
        let config = match (&self.global.toolchain, std::env::var_os(TOOLCHAIN_ENV), &self.cfg.toolchain) {
            (Some(p), _, _) => ToolchainConfig::load(p)?,
            (None, Some(p), _) => ToolchainConfig::load(Path::new(&p))?,
            (None, None, Some(p)) => ToolchainConfig::load(p)?,
            (None, None, None) => ToolchainConfig::default(),
        };
        Ok(match self.global.catalog.as_ref().or(self.cfg.catalog.as_ref()) {
            Some(p) => Toolchain::with_catalog(config, PassCatalog::load(p)?),
            None => Toolchain::new(config)?,
        })
    }

    fn manifest(&self) -> Result<Option<CorpusManifest>> {
        match self.global.manifest.as_ref().or(self.cfg.manifest.as_ref()) {
            Some(p) => Ok(Some(CorpusManifest::load(p)?)),
            None => Ok(None),
        }
    }

    /// A manifest id, or a path to a C source or ELF.
    fn program(&self, name: &str) -> Result<(Program, u64)> {
        let manifest = self.manifest()?;
        if let Some(m) = &manifest {
            if let Some(p) = m.get(name) {
                return Ok((p.clone(), m.limit_for(p)));
            }
        }
        let path = Path::new(name);
        if !path.is_file() {
            bail!("`{name}` is neither a manifest program nor a file (set --manifest to use program ids)");
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name).to_string();
        let limit = manifest.map_or(zkopt::harness::DEFAULT_LIMIT, |m| m.defaults.limit);
        let program = match path.extension().and_then(|e| e.to_str()) {
            Some("c") => Program::from_source(id, path),
            _ => Program::from_elf(id, path),
        };
        Ok((program, limit))
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx { cfg, global: cli.global };
    match cli.command {
        Command::Run { elf, limit, show_output } => cmd_run(&ctx, &elf, limit, show_output),
        Command::Bench { programs, profiles, native } => cmd_bench(&ctx, &programs, &profiles, native),
        Command::Tune { program, depth, population, proving, no_levels } => {
            cmd_tune(&ctx, &program, depth, population, proving, no_levels)
        }
        Command::Mine { logs, k, n } => cmd_mine(&logs, k, n),
        Command::Analyze { target, profile, page_threshold, loop_ratio, text } => {
            cmd_analyze(&ctx, &target, &profile, page_threshold, loop_ratio, text)
        }
        Command::Oracle { program, a, b, inject_fault } => cmd_oracle(&ctx, &program, &a, &b, inject_fault),
        Command::Report { rows, format, metric, moderate, severe, tune_logs } => {
            cmd_report(&ctx, &rows, format, metric, moderate, severe, &tune_logs)
        }
    }
}

fn stdout_bytes(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

fn cmd_run(ctx: &Ctx, path: &Path, limit: Option<u64>, show_output: bool) -> Result<ExitCode> {
    let model = ctx.model()?;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_elf(&bytes).with_context(|| format!("loading {}", path.display()))?;
    let exec = execute_elf(&bytes, limit.unwrap_or(zkopt::harness::DEFAULT_LIMIT), &zkopt::harness::default_registry());
    let trace = exec.trace.as_ref().ok_or_else(|| anyhow!("{}", exec.status.detail().unwrap_or("run failed")))?;
    if show_output {
        std::io::stderr().write_all(&exec.output)?;
    }
    let breakdown = account(trace, &model);
    let record = serde_json::json!({
        "model": model.name(),
        "status": exec.status.label(),
        "exit_code": exec.status.exit_code(),
        "detail": exec.status.detail(),
        "retired": trace.retired,
        "compute": breakdown.compute,
        "paging": breakdown.paging,
        "total": breakdown.total,
        "page_ins": breakdown.page_ins,
        "page_outs": breakdown.page_outs,
        "per_class": breakdown.per_class,
    });
    stdout_bytes(format!("{record}\n").as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(ctx: &Ctx, ids: &[String], profile_ids: &[String], native: bool) -> Result<ExitCode> {
    let manifest = ctx.manifest()?.ok_or_else(|| anyhow!("bench needs a corpus manifest (--manifest or config)"))?;
    let programs: Vec<Program> = if ids.is_empty() {
        manifest.programs.clone()
    } else {
        ids.iter()
            .map(|id| manifest.get(id).cloned().ok_or_else(|| anyhow!("no program `{id}` in the manifest")))
            .collect::<Result<_>>()?
    };
    let tc = ctx.toolchain()?;
    if programs.iter().any(|p| p.source.is_some()) {
        tc.check().context("toolchain check (set --toolchain or ZKOPT_TOOLCHAIN)")?;
    }
    let profiles: Vec<OptProfile> = if profile_ids.is_empty() {
        expand_profiles(tc.catalog())?
    } else {
        profile_ids.iter().map(|p| OptProfile::parse(p)).collect::<Result<_, _>>()?
    };
    for p in &profiles {
        p.validate(tc.catalog(), tc.config().max_depth)?;
    }
    let models = ctx.models()?;
    let output = ctx.output();
    let store = match &output {
        Some(dir) => ArtifactStore::persistent(dir.join("artifacts"))?,
        None => ArtifactStore::in_memory(),
    };
    let mut bench = Bench::new(Some(&tc)).with_store(&store).with_default_limit(manifest.defaults.limit);
    if let Some(est) = ctx.estimator()? {
        bench = bench.with_estimator(est);
    }
    info!("{} programs x {} profiles x {} models", programs.len(), profiles.len(), models.len());
    let mut rows = bench.run_matrix(&programs, &profiles, &models, ctx.jobs());
    if native {
        attach_native(&programs, &mut rows)?;
    }

    let failed = rows.iter().filter(|r| !r.ok()).count();
    eprintln!("{} rows, {failed} failed", rows.len());
    stdout_bytes(&metrics_csv(&rows))?;
    if let Some(dir) = output {
        let options = ReportOptions {
            findings: baseline_findings(&rows, &store, &models[0], &analyzer_config(ctx, None, None)),
            ..report_options(ctx, None, None, None)?
        };
        let mut f = std::fs::File::create(dir.join("rows.jsonl"))?;
        write_rows_jsonl(&rows, &mut f)?;
        std::fs::write(dir.join("metrics.csv"), metrics_csv(&rows))?;
        let metric = options.metric.unwrap_or(Metric::TotalCycles);
        std::fs::write(dir.join("impact.csv"), impact_csv(&impact_rows(&rows, metric, &options.thresholds)))?;
        std::fs::write(dir.join("summary.md"), emit_report(&rows, ReportFormat::Summary, &options))?;
        eprintln!("wrote results to {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Host timings for baseline and standard-level rows. The baseline is timed
/// at -O0.
fn attach_native(programs: &[Program], rows: &mut [MetricsRow]) -> Result<()> {
    let cfg = NativeConfig::default();
    let mut cache: BTreeMap<(String, OptLevel), Option<f64>> = BTreeMap::new();
    for row in rows.iter_mut() {
        let level = match OptProfile::parse(&row.profile).map(|p| p.kind) {
            Ok(ProfileKind::Baseline) => OptLevel::O0,
            Ok(ProfileKind::StandardLevel { level }) => level,
            _ => continue,
        };
        let Some(unit) = programs.iter().find(|p| p.id == row.program).and_then(Program::unit) else { continue };
        let seconds = cache.entry((row.program.clone(), level)).or_insert_with(|| match native_time(&unit, level, &cfg) {
            Ok(t) => Some(t.median_seconds),
            Err(e) => {
                warn!("native timing of {} at {}: {e}", row.program, level.name());
                None
            }
        });
        row.native_seconds = *seconds;
    }
    Ok(())
}

fn baseline_findings(
    rows: &[MetricsRow],
    store: &ArtifactStore,
    model: &CostModel,
    config: &AnalyzerConfig,
) -> Vec<(String, zkopt::analyzer::Finding)> {
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for row in rows.iter().filter(|r| r.profile == "baseline" && r.model == model.name()) {
        let Some(art) = row.artifact.as_ref().and_then(|h| store.get(h)) else { continue };
        if !seen.insert(row.program.clone()) {
            continue;
        }
        match load_elf(&art.elf).map_err(|e| e.to_string()).and_then(|img| {
            scan_with(&img, model, config).map_err(|e| e.to_string())
        }) {
            Ok(report) => out.extend(report.findings.into_iter().map(|f| (row.program.clone(), f))),
            Err(e) => warn!("analyzing {}: {e}", row.program),
        }
    }
    out
}

fn cmd_tune(
    ctx: &Ctx,
    name: &str,
    depth: Option<usize>,
    population: Option<usize>,
    proving: bool,
    no_levels: bool,
) -> Result<ExitCode> {
    let (program, limit) = ctx.program(name)?;
    let tc = ctx.toolchain()?;
    tc.check().context("toolchain check (set --toolchain or ZKOPT_TOOLCHAIN)")?;
    let t = &ctx.cfg.tune;
    let defaults = TuneConfig::default();
    let wants_proving = proving || t.target.as_deref() == Some("proving");
    if let Some(other) = t.target.as_deref().filter(|s| !matches!(*s, "cycles" | "proving")) {
        bail!("tune.target must be `cycles` or `proving`, got `{other}`");
    }
    let target = if wants_proving {
        let estimator = ctx.estimator()?.ok_or_else(|| anyhow!("the proving target needs an [estimator] section"))?;
        FitnessTarget::ProvingSeconds { estimator }
    } else {
        FitnessTarget::Cycles
    };
    let config = TuneConfig {
        catalog: tc.catalog().clone(),
        max_depth: depth.or(t.max_depth).unwrap_or(defaults.max_depth),
        iterations: ctx.global.iterations.or(ctx.cfg.iterations).unwrap_or(defaults.iterations),
        population: population.or(t.population).unwrap_or(defaults.population),
        mutation_rate: t.mutation_rate.unwrap_or(defaults.mutation_rate),
        tournament: t.tournament.unwrap_or(defaults.tournament),
        elitism: t.elitism.unwrap_or(defaults.elitism),
        seed: ctx.global.seed.or(ctx.cfg.seed).unwrap_or(defaults.seed),
        limit: t.limit,
        target,
        model: ctx.model()?,
        compare_levels: !no_levels,
        jobs: ctx.jobs(),
    };
    let bench = Bench::new(Some(&tc)).with_default_limit(limit);
    let result = tune(&bench, &program, &config)?;
    let text = result.to_jsonl();
    if let Some(dir) = ctx.output() {
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!("tune-{}-{}-s{}.jsonl", result.program, result.model, result.seed));
        std::fs::write(&path, &text)?;
        eprintln!("wrote {}", path.display());
    }
    eprintln!(
        "{}: baseline {} cycles, best {} with [{}]",
        result.program,
        result.baseline,
        result.best.fitness,
        result.best.passes.join(" ")
    );
    if !result.findings.is_empty() {
        warn!("{} candidates diverged from the baseline", result.findings.len());
    }
    stdout_bytes(text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn read_tune_log(path: &Path) -> Result<TuneResult> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    TuneResult::from_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn cmd_mine(logs: &[PathBuf], k: usize, n: usize) -> Result<ExitCode> {
    let results = logs.iter().map(|p| read_tune_log(p)).collect::<Result<Vec<_>>>()?;
    let tables = mine_subsequences(&results, k, n)?;
    stdout_bytes((serde_json::to_string_pretty(&tables)? + "\n").as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn analyzer_config(ctx: &Ctx, page_threshold: Option<usize>, loop_ratio: Option<f64>) -> AnalyzerConfig {
    let d = AnalyzerConfig::default();
    AnalyzerConfig {
        page_threshold: page_threshold.or(ctx.cfg.analyzer.page_threshold).unwrap_or(d.page_threshold),
        loop_ratio: loop_ratio.or(ctx.cfg.analyzer.loop_ratio).unwrap_or(d.loop_ratio),
    }
}

fn cmd_analyze(
    ctx: &Ctx,
    target: &str,
    profile: &str,
    page_threshold: Option<usize>,
    loop_ratio: Option<f64>,
    text: bool,
) -> Result<ExitCode> {
    let model = ctx.model()?;
    let (program, _) = ctx.program(target)?;
    let elf = match &program.elf {
        Some(path) => std::fs::read(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let tc = ctx.toolchain()?;
            Bench::new(Some(&tc)).build(&program, &OptProfile::parse(profile)?).map_err(|e| anyhow!(e))?.elf.clone()
        }
    };
    let image = load_elf(&elf).context("loading the image")?;
    let report = scan_with(&image, &model, &analyzer_config(ctx, page_threshold, loop_ratio))?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let out = if text {
        report.findings.iter().map(|f| format!("{f}\n")).collect()
    } else {
        findings_jsonl(&report.findings)
    };
    stdout_bytes(out.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(ctx: &Ctx, name: &str, a: &str, b: &str, inject_fault: bool) -> Result<ExitCode> {
    let model = ctx.model()?;
    let (program, limit) = ctx.program(name)?;
    let (pa, pb) = (OptProfile::parse(a)?, OptProfile::parse(b)?);
    let tc = ctx.toolchain()?;
    let bench = Bench::new(Some(&tc)).with_default_limit(limit);
    let mut report = diff_oracle(&bench, &program, &pa, &pb, &model);
    if inject_fault {
        let art = bench.build(&program, &pb).map_err(|e| anyhow!(e))?;
        let faulty = inject_output_fault(&art.elf)?;
        let exec_a = execute_elf(&bench.build(&program, &pa).map_err(|e| anyhow!(e))?.elf, limit, &bench.registry);
        let exec_b = execute_elf(&faulty, limit, &bench.registry);
        report.verdict = compare(&exec_a, &exec_b);
        report.profiles[1] = format!("{b}+fault");
        report.rows[1] = bench.rows(&program, &pb, None, &exec_b, std::slice::from_ref(&model)).remove(0);
        report.rows[1].profile = report.profiles[1].clone();
    }
    stdout_bytes((serde_json::to_string(&report)? + "\n").as_bytes())?;
    Ok(match &report.verdict {
        OracleVerdict::Equivalent => ExitCode::SUCCESS,
        OracleVerdict::Divergent { kind, detail } => {
            eprintln!("divergent ({kind:?}): {detail}");
            ExitCode::from(EXIT_DIVERGENT)
        }
        OracleVerdict::Inconclusive { detail } => {
            let failed = report.rows.iter().filter(|r| matches!(r.status, RunStatus::BuildFailed(_) | RunStatus::LoadFailed(_)));
            for r in failed {
                eprintln!("{} under {}: {}", r.program, r.profile, r.status.detail().unwrap_or(""));
            }
            eprintln!("inconclusive: {detail}");
            ExitCode::from(EXIT_CONFIG)
        }
    })
}

fn report_options(
    ctx: &Ctx,
    metric: Option<String>,
    moderate: Option<f64>,
    severe: Option<f64>,
) -> Result<ReportOptions> {
    let i = &ctx.cfg.impact;
    let d = ImpactThresholds::default();
    let thresholds = ImpactThresholds::new(
        moderate.or(i.moderate).unwrap_or(d.moderate),
        severe.or(i.severe).unwrap_or(d.severe),
    )?;
    let metric = metric.or_else(|| i.metric.clone()).map(|m| m.parse::<Metric>()).transpose()?;
    Ok(ReportOptions { metric, thresholds, ..Default::default() })
}

fn cmd_report(
    ctx: &Ctx,
    rows_path: &Path,
    format: Format,
    metric: Option<String>,
    moderate: Option<f64>,
    severe: Option<f64>,
    tune_logs: &[PathBuf],
) -> Result<ExitCode> {
    let f = std::fs::File::open(rows_path).with_context(|| format!("opening {}", rows_path.display()))?;
    let rows = read_rows_jsonl(BufReader::new(f))?;
    let mut options = report_options(ctx, metric, moderate, severe)?;
    for path in tune_logs {
        let r = read_tune_log(path)?;
        let o3 = r.levels.get(&OptLevel::O3).and_then(|e| e.fitness.cycles());
        match (r.best.fitness.cycles(), o3) {
            (Some(tuned_cycles), Some(o3_cycles)) => options.tuner.push(TunerComparison {
                program: r.program.clone(),
                model: r.model.clone(),
                tuned_cycles,
                o3_cycles,
                best_sequence: r.best.passes.clone(),
            }),
            _ => warn!("{}: no finite tuned and -O3 results to compare", path.display()),
        }
    }
    let format = match format {
        Format::MetricsCsv => ReportFormat::MetricsCsv,
        Format::ImpactCsv => ReportFormat::ImpactCsv,
        Format::Summary => ReportFormat::Summary,
    };
    stdout_bytes(&emit_report(&rows, format, &options))?;
    Ok(ExitCode::SUCCESS)
}
