//! Command-line front end: solve single instances, generate benchmark
//! instances, run experiment grids, and query the exact oracle.
//!
//! Exit codes: 0 success, 1 internal or usage error, 2 infeasible instance,
//! 3 oracle budget refusal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cutstock::bench::{self, ExperimentSpec, Family, StrategySpec};
use cutstock::engine;
use cutstock::integer;
use cutstock::model::{CgConfig, Instance};
use cutstock::CspError;

#[derive(Parser)]
#[command(name = "cutstock", version, about = "Cutting-stock solver based on ensemble column generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write a JSON report.
    Solve(SolveArgs),
    /// Generate benchmark instances as JSON files.
    Gen(GenArgs),
    /// Run an experiment grid from a config file.
    Bench(BenchArgs),
    /// Exact solve of a tiny instance by full pattern enumeration.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyName {
    Baseline,
    Mc,
    Mp,
    Mcmp,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Optional config JSON file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Strategy preset; defaults to the configured ensemble dimensions.
    #[arg(long, value_enum)]
    strategy: Option<StrategyName>,
    #[arg(long)]
    num_column: Option<usize>,
    #[arg(long)]
    num_path: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    selection_times: Option<usize>,
    #[arg(long)]
    dual_objective_threshold: Option<f64>,
    #[arg(long)]
    dual_throttles: Option<usize>,
    /// Per-pricing-call time limit in seconds.
    #[arg(long)]
    sub_time_limit: Option<f64>,
    #[arg(long)]
    sub_throttles: Option<usize>,
    /// Integer-stage time limit in seconds.
    #[arg(long)]
    csp_time_limit: Option<f64>,
    /// Allow early stopping instead of strict convergence.
    #[arg(long)]
    no_convergence: bool,
    #[arg(long)]
    sample_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Linear,
    Chance,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Number of item kinds per instance.
    #[arg(long)]
    k: usize,
    /// How many instances to generate.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for case_<i>.json files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchFormat {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.csv and summary.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// What to print to stdout.
    #[arg(long, value_enum, default_value_t = BenchFormat::Table)]
    format: BenchFormat,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Time limit for the exact integer solve, in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<CspError>()
                .map_or(1u8, |e| match e {
                    CspError::InfeasibleInstance { .. } => 2,
                    CspError::BudgetExceeded { .. } => 3,
                    _ => 1,
                });
            ExitCode::from(code)
        }
    }
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(Instance::from_json_str(&text)?)
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let instance = load_instance(&args.instance)?;
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<CgConfig>(&text)?
        }
        None => CgConfig::default_for(instance.kind()),
    };
    // strategy preset first, explicit flags win
    if let Some(strategy) = args.strategy {
        let name = match strategy {
            StrategyName::Baseline => "baseline",
            StrategyName::Mc => "mc",
            StrategyName::Mp => "mp",
            StrategyName::Mcmp => "mcmp",
        };
        cfg = StrategySpec::parse(name).expect("preset names parse").apply(&cfg);
    }
    if let Some(n) = args.num_column {
        cfg.num_column = n;
    }
    if let Some(e) = args.num_path {
        cfg.num_path = e;
    }
    if let Some(d) = args.depth {
        cfg.depth = Some(d);
    }
    if let Some(s) = args.selection_times {
        cfg.selection_times = s;
    }
    if let Some(eps) = args.dual_objective_threshold {
        cfg.dual_objective_threshold = eps;
    }
    if let Some(t) = args.dual_throttles {
        cfg.dual_throttles = t;
    }
    if let Some(secs) = args.sub_time_limit {
        cfg.sub_time_limit = Duration::from_secs_f64(secs);
    }
    if let Some(n) = args.sub_throttles {
        cfg.sub_throttles = n;
    }
    if let Some(secs) = args.csp_time_limit {
        cfg.csp_time_limit = Duration::from_secs_f64(secs);
    }
    if args.no_convergence {
        cfg.convergence = false;
    }
    if let Some(f) = args.sample_fraction {
        cfg.sample_fraction = f;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let outcome = engine::solve_pipeline(&instance, &cfg)?;
    let json = serde_json::to_string_pretty(&outcome.report)?;
    match args.output {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<ExitCode> {
    let family = match args.family {
        FamilyArg::Linear => Family::Linear,
        FamilyArg::Chance => Family::Chance,
    };
    std::fs::create_dir_all(&args.out)?;
    for i in 0..args.count {
        let seed = bench::case_seed(args.seed, args.k, i);
        let instance = bench::generate_instance(family, args.k, seed)?;
        let path = args.out.join(format!("case_{i}.json"));
        std::fs::write(&path, instance.to_json_string()?)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)?;
    let spec: ExperimentSpec = serde_json::from_str(&text)?;
    let output = bench::run_experiment(&spec)?;
    bench::write_outputs(&output, &args.out)?;
    match args.format {
        BenchFormat::Table => print!("{}", bench::render_summary_table(&output.summary)),
        BenchFormat::Json => println!("{}", serde_json::to_string_pretty(&output.summary)?),
        BenchFormat::Csv => print!("{}", bench::rows_to_csv(&output.rows)),
    }
    eprintln!(
        "wrote {} and {}",
        args.out.join("report.csv").display(),
        args.out.join("summary.json").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: OracleArgs) -> anyhow::Result<ExitCode> {
    let instance = load_instance(&args.instance)?;
    let pool = integer::oracle_enumerate_patterns(&instance)?;
    let demands = instance.demands();
    let z_mp = integer::oracle_lp_optimum(&pool, &demands)?;
    let ip = integer::solve_irmp(&pool, &demands, Duration::from_secs_f64(args.time_limit))?;
    println!("patterns: {}", pool.len());
    println!("z_mp (full-enumeration LP): {z_mp:.9}");
    println!(
        "z_ip (exact integer optimum): {}{}",
        ip.objective,
        if ip.proven { "" } else { " (time limit hit, incumbent only)" }
    );
    Ok(ExitCode::SUCCESS)
}
