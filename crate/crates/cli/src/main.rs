use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use solpath::harness::{
    modal_selected_index, run_experiment, summarize_records, write_outputs, ExperimentConfig,
    HarnessError, SummaryTable,
};
use solpath::instances::{
    draw_samples, generate_canonical_instance, read_samples, write_instance, write_samples,
};
use solpath::mathkit::RngStream;
use solpath::reformulations::{read_path_csv, Method};
use solpath::validators::{
    evaluate_h_matrix, select_candidate, MarginRule, RuleKind, DEFAULT_MC_BUDGET,
};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "solpath",
    version,
    about = "Solution-path validation experiments for chance-constrained programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications and write summary.json and records.csv.
    Run(RunArgs),
    /// Draw samples from a canonical instance.
    GenData(GenDataArgs),
    /// Validate a stored solution path on held-out samples.
    Validate(ValidateArgs),
    /// Recompute the summary table from a records CSV.
    Table(TableArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    /// Comma-separated rules, e.g. `univariate,plain`.
    #[arg(long, value_delimiter = ',')]
    validators: Option<Vec<RuleKind>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mc_budget: Option<usize>,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Samples CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the instance as TOML.
    #[arg(long)]
    instance_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Candidate path CSV (s,status,objective,x_1,...).
    #[arg(long)]
    path: PathBuf,
    /// Held-out samples CSV.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value = "univariate")]
    rule: RuleKind,
    /// Right-hand side of the constraint.
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, default_value_t = DEFAULT_MC_BUDGET)]
    mc_budget: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    records: PathBuf,
}

/// Error tagged with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn tag(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

fn harness_failure(e: HarnessError) -> Failure {
    Failure {
        code: e.exit_code() as u8,
        error: e.into(),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::GenData(args) => gen_data(args).map_err(tag(EXIT_IO)),
        Command::Validate(args) => validate(args),
        Command::Table(args) => table(&args.records),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_file(p).map_err(harness_failure)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = args.method {
        config.method = m;
    }
    if let Some(v) = args.validators {
        config.validators = v;
    }
    if let Some(r) = args.reps {
        config.replications = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.threads {
        config.threads = Some(t);
    }
    if let Some(o) = args.out {
        config.out_dir = Some(o);
    }
    if let Some(b) = args.mc_budget {
        config.mc_budget = b;
    }
    let out_dir = config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let output = run_experiment(&config).map_err(harness_failure)?;
    let (summary, records) = write_outputs(&out_dir, &output).map_err(harness_failure)?;
    print!("{}", render_table(&output.summary.table));
    println!("benchmark: {}", output.summary.benchmark);
    println!("config hash: {}", output.summary.config_hash);
    if config.method == Method::Dro {
        for &rule in &config.validators {
            match modal_selected_index(&output.records, rule) {
                Some(i) => eprintln!("modal selected grid index for {rule}: {i}"),
                None => eprintln!("modal selected grid index for {rule}: none selected"),
            }
        }
    }
    eprintln!("wrote {} and {}", summary.display(), records.display());
    let failures = output.records.iter().filter(|r| r.has_failure()).count();
    if failures > 0 {
        eprintln!("{failures} replication(s) recorded a numerical failure");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}

fn gen_data(args: GenDataArgs) -> Result<u8> {
    let inst = generate_canonical_instance(args.d, args.seed).context("generating instance")?;
    // same stream as replication 0 of a run with master seed = instance seed
    let mut rng = RngStream::new(args.seed, 0);
    let samples = draw_samples(&inst, args.n, &mut rng).context("drawing samples")?;
    write_samples(&args.out, &samples)?;
    if let Some(p) = &args.instance_out {
        write_instance(p, &inst)?;
    }
    Ok(0)
}

fn validate(args: ValidateArgs) -> Result<u8, Failure> {
    if !(args.gamma > 0.0 && args.gamma < 1.0) {
        return Err(tag(EXIT_CONFIG)(anyhow::anyhow!(
            "gamma must lie in (0, 1), got {}",
            args.gamma
        )));
    }
    let path = read_path_csv(&args.path)
        .with_context(|| format!("reading {}", args.path.display()))
        .map_err(tag(EXIT_CONFIG))?;
    let samples = read_samples(&args.samples)
        .with_context(|| format!("reading {}", args.samples.display()))
        .map_err(tag(EXIT_CONFIG))?;
    if path.dim() != samples.dim() {
        return Err(tag(EXIT_CONFIG)(anyhow::anyhow!(
            "path has dimension {} but samples have {}",
            path.dim(),
            samples.dim()
        )));
    }
    let rng = RngStream::new(args.seed, 0).derive(args.rule.stream_id());
    let rule = MarginRule::new(args.rule, args.beta, args.mc_budget, rng)
        .map_err(anyhow::Error::from)
        .map_err(tag(EXIT_CONFIG))?;
    let report = evaluate_h_matrix(&path, &samples, args.b)
        .and_then(|h| select_candidate(&path, &h, args.gamma, &rule))
        .map_err(anyhow::Error::from)
        .map_err(tag(EXIT_NUMERICAL))?;
    println!("{}", report.to_json());
    Ok(0)
}

fn table(records: &Path) -> Result<u8, Failure> {
    if !records.exists() {
        return Err(tag(EXIT_IO)(anyhow::anyhow!(
            "{} does not exist",
            records.display()
        )));
    }
    let t = summarize_records(records).map_err(harness_failure)?;
    print!("{}", render_table(&t));
    Ok(0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn render_table(t: &SummaryTable) -> String {
    let mut out = format!(
        "{:<16} {:>10} {:>10} {:>9} {:>8} {:>7}\n",
        "rule", "objective", "feasible", "selected", "none", "failed"
    );
    for r in &t.rules {
        out += &format!(
            "{:<16} {:>10} {:>10.4} {:>9} {:>8} {:>7}\n",
            r.rule.as_str(),
            fmt_opt(r.mean_objective),
            r.feasibility_level,
            r.selected,
            r.none_feasible,
            r.failed
        );
    }
    out += &format!(
        "{:<16} {:>10} {:>10.4} {:>9} {:>8} {:>7}\n",
        "benchmark",
        fmt_opt(t.benchmark.mean_objective),
        t.benchmark.feasibility_level,
        t.replications - t.benchmark.failed,
        "-",
        t.benchmark.failed
    );
    out += &format!("replications: {}\n", t.replications);
    out
}
