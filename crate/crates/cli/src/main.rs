//! Command-line front end: single trials with graph export, full sweeps,
//! and plot-data emission.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags or
//! parameters), 2 on runtime and I/O failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use sinkward::experiment::{
    self, default_sweep_spec, emit_csv, parse_csv, run_sweep_full, SweepError, SweepSpec,
};
use sinkward::metrics::compute_report;
use sinkward::world::{sample_deployment, sources_from_ratio, WorldConfig};
use sinkward::{export_dot, run_trial_with, trace, SimOptions};

#[derive(Parser)]
#[command(
    name = "sinkward",
    version,
    about = "Simulate power-gradient routing in anonymous sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its indicators as JSON
    Run(RunArgs),
    /// Run a parameter sweep and write aggregated results as CSV
    Sweep(SweepArgs),
    /// Regroup a results CSV into per-(indicator, n_r) plot data files
    Render(RenderArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("sources").required(true).args(["ratio", "n_star"])))]
struct RunArgs {
    /// Number of sensors
    #[arg(long)]
    n: usize,
    /// Source ratio n*/n in (0, 1]
    #[arg(long)]
    ratio: Option<f64>,
    /// Number of sources (alternative to --ratio)
    #[arg(long = "n-star")]
    n_star: Option<usize>,
    /// Gap factor in [0, 1]
    #[arg(long)]
    f: f64,
    /// Expected neighbors within one broadcast radius
    #[arg(long)]
    nr: f64,
    /// Deployment seed
    #[arg(long)]
    seed: u64,
    /// Disc radius
    #[arg(long = "R", default_value_t = 1.0)]
    disc_radius: f64,
    /// Sink broadcast power
    #[arg(long = "b0", default_value_t = 1.0)]
    sink_power: f64,
    /// Wave propagation speed
    #[arg(long = "v", default_value_t = 1.0)]
    wave_speed: f64,
    /// Write the trace digraph in DOT format
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write a JSON-lines trace of every transmission
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Deliver answers at wave speed instead of instantly
    #[arg(long = "finite-speed")]
    finite_speed: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source_spec").required(true).args(["paper_defaults", "spec"])))]
struct SweepArgs {
    /// Use the built-in default grid (n=2000, 108 cells, 200 trials)
    #[arg(long = "paper-defaults")]
    paper_defaults: bool,
    /// JSON sweep specification file
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the trials per cell
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = one per core); never changes output bytes
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV path
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Keep only matching cells, e.g. "f=0.1,nr=13" (keys: f, nr, ratio)
    #[arg(long)]
    only: Option<String>,
    /// Also write one JSON line of indicators per trial
    #[arg(long = "dump-trials")]
    dump_trials: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Results CSV produced by `sweep`
    #[arg(long)]
    results: PathBuf,
    /// Directory for the plot data files
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        let (msg, code) = match self {
            CliError::Validation(msg) => (msg, 1),
            CliError::Runtime(msg) => (msg, 2),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

impl From<SweepError> for CliError {
    fn from(err: SweepError) -> Self {
        match err {
            SweepError::Invalid(_) | SweepError::World(_) => CliError::Validation(err.to_string()),
            SweepError::Io { .. } | SweepError::Csv(_) => CliError::Runtime(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => err.report(),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("failed to write {}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let n_sources = match (args.ratio, args.n_star) {
        (Some(ratio), None) => {
            sources_from_ratio(ratio, args.n).map_err(|e| CliError::Validation(e.to_string()))?
        }
        (None, Some(n_star)) => n_star,
        _ => unreachable!("clap enforces exactly one of --ratio/--n-star"),
    };
    let config = WorldConfig {
        disc_radius: args.disc_radius,
        sink_power: args.sink_power,
        wave_speed: args.wave_speed,
        n_sensors: args.n,
        n_sources,
        gap_factor: args.f,
        expected_neighbors: args.nr,
        seed: args.seed,
    };
    let deployment =
        sample_deployment(&config).map_err(|e| CliError::Validation(e.to_string()))?;
    let options = SimOptions {
        finite_answer_speed: args.finite_speed,
        record_trace: args.trace.is_some(),
    };
    let outcome = run_trial_with(&deployment, options);

    if let Some(path) = &args.dot {
        write_file(path, export_dot(&outcome, &deployment).as_bytes())?;
    }
    if let Some(path) = &args.trace {
        let records = outcome.trace.as_ref().expect("trace recording was enabled");
        let mut buf = Vec::new();
        trace::write_jsonl(records, &mut buf)
            .map_err(|e| CliError::Runtime(format!("failed to encode trace: {e}")))?;
        write_file(path, &buf)?;
    }

    let report = compute_report(&outcome, config.n_sources);
    println!("{}", serde_json::to_string(&report).expect("report serialization cannot fail"));
    Ok(())
}

/// Cell filter parsed from `--only`: exact matches against grid values.
#[derive(Default)]
struct CellFilter {
    f: Option<f64>,
    nr: Option<f64>,
    ratio: Option<f64>,
}

fn parse_filter(text: &str) -> Result<CellFilter, CliError> {
    let mut filter = CellFilter::default();
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("filter term {part:?} is not key=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("filter value {value:?} is not a number")))?;
        match key.trim() {
            "f" => filter.f = Some(value),
            "nr" | "n_r" => filter.nr = Some(value),
            "ratio" => filter.ratio = Some(value),
            other => {
                return Err(CliError::Validation(format!(
                    "unknown filter key {other:?} (expected f, nr, or ratio)"
                )))
            }
        }
    }
    Ok(filter)
}

fn apply_filter(spec: &mut SweepSpec, filter: &CellFilter) -> Result<(), CliError> {
    let keep = |values: &mut Vec<f64>, want: Option<f64>, name: &str| {
        if let Some(want) = want {
            values.retain(|&v| v == want);
            if values.is_empty() {
                return Err(CliError::Validation(format!(
                    "filter {name}={want} matches no grid value"
                )));
            }
        }
        Ok(())
    };
    keep(&mut spec.f_values, filter.f, "f")?;
    keep(&mut spec.n_r_values, filter.nr, "nr")?;
    keep(&mut spec.ratios, filter.ratio, "ratio")?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut spec = if args.paper_defaults {
        default_sweep_spec()
    } else {
        let path = args.spec.as_ref().expect("clap enforces --spec without --paper-defaults");
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("failed to read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("malformed sweep spec {}: {e}", path.display()))
        })?
    };
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(jobs) = args.jobs {
        spec.jobs = jobs;
    }
    if let Some(only) = &args.only {
        apply_filter(&mut spec, &parse_filter(only)?)?;
    }

    let (rows, records) = run_sweep_full(&spec)?;
    write_file(&args.out, emit_csv(&rows).as_bytes())?;
    if let Some(path) = &args.dump_trials {
        let mut buf = Vec::new();
        for record in &records {
            serde_json::to_writer(&mut buf, record)
                .map_err(|e| CliError::Runtime(format!("failed to encode trial dump: {e}")))?;
            buf.push(b'\n');
        }
        write_file(path, &buf)?;
    }

    println!(
        "{}",
        serde_json::json!({
            "rows": rows.len(),
            "trials": rows.len() * spec.trials,
            "out": args.out,
        })
    );
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.results).map_err(|e| {
        CliError::Runtime(format!("failed to read {}: {e}", args.results.display()))
    })?;
    let rows = parse_csv(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.results.display())))?;
    if rows.is_empty() {
        return Err(CliError::Runtime(format!(
            "{} holds no data rows",
            args.results.display()
        )));
    }
    let files = experiment::write_plot_files(&rows, &args.out)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "{}",
        serde_json::json!({
            "files": files.len(),
            "out": args.out,
        })
    );
    Ok(())
}
