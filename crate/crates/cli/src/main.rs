use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sheetlab::config::{parse_config, ExperimentKind};
use sheetlab::run::{run, RunError, TOOL, VERSION};

/// Monte Carlo laboratory for two-parameter SDEs driven by a Brownian sheet.
#[derive(Parser)]
#[command(name = "sheetlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the worker count (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one lattice realization and dump it as CSV.
    Simulate(CommonArgs),
    /// Bracket hierarchy ranks and spanning-constant estimates.
    Hormander(CommonArgs),
    /// Covariance matrices and inverse-determinant moments across trials.
    Malliavin(CommonArgs),
    /// Small-ball probability probe of the covariance quadratic form.
    Probe(CommonArgs),
    /// Joint small-ball event estimation for diagonal semimartingales.
    Norris(CommonArgs),
    /// Endpoint sampling and kernel density estimation.
    Density(CommonArgs),
    /// Grid-refinement convergence table on a shared realization.
    Converge(CommonArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Simulate(_) => ExperimentKind::Simulate,
            Command::Hormander(_) => ExperimentKind::Hormander,
            Command::Malliavin(_) => ExperimentKind::Malliavin,
            Command::Probe(_) => ExperimentKind::Probe,
            Command::Norris(_) => ExperimentKind::Norris,
            Command::Density(_) => ExperimentKind::Density,
            Command::Converge(_) => ExperimentKind::Converge,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a)
            | Command::Hormander(a)
            | Command::Malliavin(a)
            | Command::Probe(a)
            | Command::Norris(a)
            | Command::Density(a)
            | Command::Converge(a) => a,
        }
    }
}

fn write_error_record(dir: &std::path::Path, message: &str) {
    let record = serde_json::json!({
        "tool": TOOL,
        "version": VERSION,
        "error": message,
    });
    if fs::create_dir_all(dir).is_ok() {
        let _ = fs::write(
            dir.join("error.json"),
            serde_json::to_string_pretty(&record).unwrap_or_default(),
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let args = cli.command.args();

    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("sheetlab: cannot read {}: {e}", args.config.display());
            return ExitCode::FAILURE;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("sheetlab: invalid configuration:");
            for e in errors {
                eprintln!("  {e}");
            }
            return ExitCode::FAILURE;
        }
    };
    if cfg.kind != kind {
        eprintln!(
            "sheetlab: config declares kind '{}' but the '{}' subcommand was invoked",
            cfg.kind.as_str(),
            kind.as_str()
        );
        return ExitCode::FAILURE;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }

    match run(&cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(RunError::Core(e)) => {
            eprintln!("sheetlab: {e}");
            write_error_record(std::path::Path::new(&cfg.out_dir), &e.to_string());
            ExitCode::FAILURE
        }
        Err(RunError::Io(e)) => {
            eprintln!("sheetlab: io error: {e}");
            ExitCode::FAILURE
        }
    }
}
