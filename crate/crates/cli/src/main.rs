//! Command-line driver: loads configurations, dispatches the Monte Carlo
//! estimators and the deterministic oracle, and writes reproducible run
//! records.
//!
//! Exit codes: 0 success, 1 validation/physics failure, 2 usage error.

mod manifest;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use nte_core::config::{build_problem, parse_document, RawOracle};
use nte_core::nbp::sample_uniform_source;
use nte_core::oracle::{assemble, tune_to_k, OracleParams, SlabConfig};
use nte_core::{
    collision_c_estimate, lambda_time_estimate, log_growth_k, power_iteration_k, superhistory_k,
    ConfigError, CycleEstimate, EigenEstimate, HistogramSpec, PhasePoint, PowerSettings, Problem,
    Vec3, DEFAULT_POPULATION_CAP,
};

use manifest::{RunManifest, RunRecord};

#[derive(Parser)]
#[command(name = "nte", version, about = "Monte Carlo neutron transport: k-effective and friends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a k/lambda/c eigenvalue estimator on a configuration.
    Keff(KeffArgs),
    /// Run the deterministic discrete-ordinates slab oracle.
    Oracle(OracleArgs),
    /// Validate a configuration and print the assumption report.
    Validate(ValidateArgs),
    /// Render the convergence trace of a previous run to an SVG image.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration document (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; every stream is derived from it.
    #[arg(long, env = "KEFF_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = rayon default). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for results, histograms and the manifest.
    #[arg(long, default_value = "runs/latest")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct KeffArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Estimator: power | superhistory | log-growth | collision | lambda.
    #[arg(long, default_value = "power")]
    method: String,
    /// Census population target per cycle.
    #[arg(long, default_value_t = 10_000)]
    population: usize,
    /// Discarded burn-in cycles.
    #[arg(long, default_value_t = 20)]
    inactive: u32,
    /// Tallied cycles.
    #[arg(long, default_value_t = 100)]
    active: u32,
    /// Generations per superhistory cycle.
    #[arg(long, default_value_t = 10)]
    l: u32,
    /// Histories for the walk-based estimators (log-growth, lambda).
    #[arg(long, default_value_t = 100_000)]
    histories: usize,
    /// Generation cap for log-growth.
    #[arg(long, default_value_t = 12)]
    nmax_generations: u32,
    /// Time horizon for the lambda estimator.
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    /// Spatial x-bins for the phi/eta histograms.
    #[arg(long, default_value_t = 32)]
    bins: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spatial cells (overrides the config's oracle section).
    #[arg(long)]
    nx: Option<usize>,
    /// Angular quadrature order (overrides the config).
    #[arg(long)]
    nmu: Option<usize>,
    /// Tune the fission yield until k reaches this target, and emit the
    /// rescaled configuration.
    #[arg(long)]
    tune: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Configuration document (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Assumptions that must hold (h1,h2,h3,h3star,h4,h5).
    #[arg(long, value_delimiter = ',')]
    require: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing a trace.tsv from a previous run.
    #[arg(long)]
    run_dir: PathBuf,
    /// Output image path (defaults to <run_dir>/report.svg).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Parse(_) => CliError::Usage(e.to_string()),
            ConfigError::Violation(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keff(args) => cmd_keff(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_config(path: &Path) -> Result<(String, nte_core::RawConfig), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let raw = parse_document(&text)?;
    Ok((text, raw))
}

fn install_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

fn slab_hist(problem: &Problem<f64>, bins: usize) -> HistogramSpec<f64> {
    let (lo, hi) = problem.domain.bounding_box();
    let vset = &problem.model.vset;
    HistogramSpec::slab(lo, hi, vset.v_min, vset.v_max, bins)
}

fn center_start(problem: &Problem<f64>) -> PhasePoint<f64> {
    let (lo, hi) = problem.domain.bounding_box();
    let speed = (problem.model.vset.v_min + problem.model.vset.v_max) * 0.5;
    PhasePoint::new((lo + hi) * 0.5, Vec3::new(speed, 0.0, 0.0))
}

fn record_from(est: &EigenEstimate<f64>, population: usize, histories: usize, seed: u64, extinct: bool) -> RunRecord {
    RunRecord {
        method: est.method.as_str().to_string(),
        value: est.value,
        std_error: est.std_error,
        n_active: est.n_active,
        n_inactive: est.n_inactive,
        population,
        histories,
        seed,
        lag1_autocorr: est.lag1_autocorr,
        extinct,
    }
}

fn write_trace(dir: &Path, trace: &[f64]) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(dir.join("trace.tsv"))?;
    writeln!(f, "# cycle\tk_cycle")?;
    for (i, k) in trace.iter().enumerate() {
        writeln!(f, "{i}\t{k}")?;
    }
    Ok(())
}

fn cmd_keff(args: KeffArgs) -> Result<u8, CliError> {
    let start_time = Instant::now();
    let (text, raw) = read_config(&args.common.config)?;
    let (problem, report) = build_problem::<f64>(&raw)?;
    eprintln!("{report}");
    let out_dir = &args.common.out_dir;
    std::fs::create_dir_all(out_dir)?;
    let seed = args.common.seed;
    let pool = install_pool(args.common.workers);
    let mut outputs: Vec<String> = Vec::new();
    let mut records: Vec<RunRecord> = Vec::new();

    let run = |records: &mut Vec<RunRecord>, outputs: &mut Vec<String>| -> Result<(), CliError> {
        match args.method.as_str() {
            "power" => {
                let source = sample_uniform_source(&problem, args.population, seed ^ 0x5eed);
                let settings = PowerSettings {
                    population_target: args.population,
                    n_inactive: args.inactive,
                    n_active: args.active,
                    population_cap: DEFAULT_POPULATION_CAP,
                    hist: slab_hist(&problem, args.bins),
                };
                let out = power_iteration_k(&problem, &source, &settings, seed)
                    .map_err(|e| CliError::Failure(e.to_string()))?;
                records.push(record_from(&out.cycle.estimate, args.population, 0, seed, out.cycle.extinct));
                write_trace(out_dir, &out.cycle.cycle_trace)?;
                outputs.push("trace.tsv".into());
                let mut f = std::fs::File::create(out_dir.join("phi.tsv"))?;
                out.phi.write_delimited(&mut f)?;
                outputs.push("phi.tsv".into());
                let mut f = std::fs::File::create(out_dir.join("eta.tsv"))?;
                out.eta.write_delimited(&mut f)?;
                outputs.push("eta.tsv".into());
                let mut f = std::fs::File::create(out_dir.join("census.tsv"))?;
                out.final_census.write_delimited(&mut f)?;
                outputs.push("census.tsv".into());
            }
            "superhistory" => {
                let source = sample_uniform_source(&problem, args.population, seed ^ 0x5eed);
                let settings = PowerSettings {
                    population_target: args.population,
                    n_inactive: args.inactive,
                    n_active: args.active,
                    population_cap: DEFAULT_POPULATION_CAP,
                    hist: slab_hist(&problem, args.bins),
                };
                let out: CycleEstimate<f64> =
                    superhistory_k(&problem, &source, args.l, &settings, seed)
                        .map_err(|e| CliError::Failure(e.to_string()))?;
                records.push(record_from(&out.estimate, args.population, 0, seed, out.extinct));
                write_trace(out_dir, &out.cycle_trace)?;
                outputs.push("trace.tsv".into());
            }
            "collision" => {
                let source = sample_uniform_source(&problem, args.population, seed ^ 0x5eed);
                let settings = PowerSettings {
                    population_target: args.population,
                    n_inactive: args.inactive,
                    n_active: args.active,
                    population_cap: DEFAULT_POPULATION_CAP,
                    hist: slab_hist(&problem, args.bins),
                };
                let out = collision_c_estimate(&problem, &source, &settings, seed)
                    .map_err(|e| CliError::Failure(e.to_string()))?;
                records.push(record_from(&out.estimate, args.population, 0, seed, out.extinct));
                write_trace(out_dir, &out.cycle_trace)?;
                outputs.push("trace.tsv".into());
            }
            "log-growth" => {
                let est = log_growth_k(
                    &problem,
                    &center_start(&problem),
                    args.nmax_generations,
                    args.histories,
                    seed,
                )
                .map_err(|e| CliError::Failure(e.to_string()))?;
                records.push(record_from(&est, 0, args.histories, seed, false));
            }
            "lambda" => {
                let est = lambda_time_estimate(
                    &problem,
                    &center_start(&problem),
                    args.t_max,
                    args.histories,
                    seed,
                )
                .map_err(|e| CliError::Failure(e.to_string()))?;
                records.push(record_from(&est, 0, args.histories, seed, false));
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown method `{other}` (power|superhistory|log-growth|collision|lambda)"
                )))
            }
        }
        Ok(())
    };
    pool.install(|| run(&mut records, &mut outputs))?;

    manifest::write_results(&out_dir.join("results.jsonl"), &records)?;
    outputs.push("results.jsonl".into());
    let manifest = RunManifest::new(
        &args.common.config,
        &text,
        seed,
        args.common.workers,
        records.clone(),
        outputs,
        start_time.elapsed().as_secs_f64(),
    );
    manifest.write(&out_dir.join("manifest.json"))?;
    for r in &records {
        println!(
            "{}: {} +- {} (active {}, inactive {}{})",
            r.method,
            r.value,
            r.std_error,
            r.n_active,
            r.n_inactive,
            if r.extinct { ", extinct" } else { "" }
        );
    }
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> Result<u8, CliError> {
    let start_time = Instant::now();
    let (text, raw) = read_config(&args.common.config)?;
    let (problem, _report) = build_problem::<f64>(&raw)?;
    let raw_oracle = raw.oracle.clone().unwrap_or_else(RawOracle::default);
    let mut params = OracleParams::from_raw(&raw_oracle);
    if let Some(nx) = args.nx {
        params.n_x = nx;
    }
    if let Some(nmu) = args.nmu {
        params.n_mu = nmu;
    }
    let slab = SlabConfig::from_problem(&problem).map_err(|e| CliError::Failure(e.to_string()))?;
    let out_dir = &args.common.out_dir;
    std::fs::create_dir_all(out_dir)?;
    let mut outputs: Vec<String> = Vec::new();

    let (slab, scale) = if let Some(target) = args.tune {
        let (tuned_slab, scale) = tune_to_k(&slab, &params, target, raw_oracle.tol)
            .map_err(|e| CliError::Failure(e.to_string()))?;
        let tuned_raw = raw
            .scale_yield(scale)
            .map_err(|e| CliError::Failure(e.to_string()))?;
        let path = out_dir.join("tuned.toml");
        std::fs::write(&path, tuned_raw.to_toml_string())?;
        outputs.push("tuned.toml".into());
        eprintln!("tuned yield scale: {scale}");
        (tuned_slab, scale)
    } else {
        (slab, 1.0)
    };

    let op = assemble(&slab, &params).map_err(|e| CliError::Failure(e.to_string()))?;
    let eig = op
        .power_iterate(params.power_tol, params.max_power_iter)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    {
        use std::io::Write;
        let mut f = std::fs::File::create(out_dir.join("phi.tsv"))?;
        writeln!(f, "# x\tphi\tphi_tilde")?;
        for i in 0..op.n {
            writeln!(f, "{}\t{}\t{}", op.x_centers[i], eig.phi[i], eig.phi_tilde[i])?;
        }
        outputs.push("phi.tsv".into());
        let mut f = std::fs::File::create(out_dir.join("oracle.json"))?;
        writeln!(
            f,
            "{}",
            serde_json::json!({
                "k": eig.k,
                "iterations": eig.iterations,
                "n_x": op.n,
                "n_mu": params.n_mu,
                "yield_scale": scale,
            })
        )?;
        outputs.push("oracle.json".into());
    }
    let manifest = RunManifest::new(
        &args.common.config,
        &text,
        args.common.seed,
        args.common.workers,
        vec![],
        outputs,
        start_time.elapsed().as_secs_f64(),
    );
    manifest.write(&out_dir.join("manifest.json"))?;
    println!("k = {} ({} power iterations)", eig.k, eig.iterations);
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let raw = parse_document(&text)?;
    let (_problem, report) = build_problem::<f64>(&raw)?;
    println!("{report}");
    for name in &args.require {
        match report.holds(name) {
            Some(true) => {}
            Some(false) => {
                eprintln!("required assumption {name} does not hold");
                return Ok(1);
            }
            None => {
                return Err(CliError::Usage(format!(
                    "unknown assumption `{name}` (h1,h2,h3,h3star,h4,h5)"
                )))
            }
        }
    }
    Ok(0)
}

fn cmd_report(args: ReportArgs) -> Result<u8, CliError> {
    let trace_path = args.run_dir.join("trace.tsv");
    let text = std::fs::read_to_string(&trace_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", trace_path.display())))?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let _cycle = it.next();
        if let Some(v) = it.next() {
            values.push(v.parse::<f64>().map_err(|e| CliError::Failure(e.to_string()))?);
        }
    }
    if values.is_empty() {
        return Err(CliError::Failure("trace.tsv contains no cycles".into()));
    }
    let out = args
        .out
        .unwrap_or_else(|| args.run_dir.join("report.svg"));
    let svg = plot::trace_svg(&values, "cycle", "k per cycle");
    std::fs::write(&out, svg)?;
    println!("wrote {}", out.display());
    Ok(0)
}
