//! Command-line front end: builds or loads instances, runs computations and
//! check suites, and writes a JSON (or CSV) report.

mod commands;
mod config;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use veronese_core::Error;

use commands::{CliError, Outcome, Status};
use config::{ExperimentConfig, Suite};
use io::InputError;
use report::{Report, Table, Timing, ARTIFACT};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PIETSCH_BUDGET: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "veronese",
    version,
    about = "Tensor cross-norms, Veronese cone metrics and Lipschitz summing constants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Ratio evaluations for summing-constant searches.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Acceptance tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Injective, projective and symmetric projective norms of a tensor.
    Norm {
        #[arg(long)]
        tensor: Option<PathBuf>,
    },
    /// Cone distances of two points, or a sampled bi-Lipschitz sweep.
    Distance,
    /// Polynomial norm, cone Lipschitz constants and the tensor factorization.
    Poly {
        #[arg(long)]
        poly: Option<PathBuf>,
    },
    /// Summing ratios and constant estimates in both modes.
    Summing {
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long)]
        family: Option<PathBuf>,
    },
    /// Discrete Pietsch certificate and factorization.
    Pietsch {
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Runs a check suite.
    Check {
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Norm { .. } => "norm",
            Command::Distance => "distance",
            Command::Poly { .. } => "poly",
            Command::Summing { .. } => "summing",
            Command::Pietsch { .. } => "pietsch",
            Command::Check { .. } => "check",
        }
    }
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, InputError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.budget {
        cfg.budget = b;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    match &cli.command {
        Command::Norm { tensor } => cfg.tensor = tensor.clone().or(cfg.tensor),
        Command::Poly { poly } => cfg.poly = poly.clone().or(cfg.poly),
        Command::Summing { poly, family } => {
            cfg.poly = poly.clone().or(cfg.poly);
            cfg.family = family.clone().or(cfg.family);
        }
        Command::Pietsch {
            poly,
            family,
            certificate,
        } => {
            cfg.poly = poly.clone().or(cfg.poly);
            cfg.family = family.clone().or(cfg.family);
            cfg.certificate = certificate.clone().or(cfg.certificate);
        }
        Command::Check { suite } => cfg.suite = suite.unwrap_or(cfg.suite),
        Command::Distance => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<(), InputError> {
    let Ok(value) = std::env::var("VERONESE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| InputError::config(format!("VERONESE_THREADS={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| InputError::config(format!("thread pool: {e}")))
}

fn core_exit(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_)
        | Error::ShapeMismatch(_)
        | Error::UnsupportedNorm { .. }
        | Error::DimensionTooLarge { .. }
        | Error::FamilyTooLarge { .. }
        | Error::NonCoordinateSubspace { .. } => EXIT_INPUT,
        Error::Infeasible { .. } => EXIT_PIETSCH_BUDGET,
        _ => EXIT_NUMERICAL,
    }
}

fn emit(cli: &Cli, report: &Report, table: Option<&Table>) -> Result<(), String> {
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        Format::Csv => match table {
            Some(t) => t.to_csv(),
            None => Table::flatten(&report.results).to_csv(),
        }
        .map_err(|e| e.to_string())?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(Outcome, ExperimentConfig, u128), CliError> {
    init_threads()?;
    let cfg = configure(cli)?;
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Norm { .. } => commands::norm(&cfg),
        Command::Distance => commands::distance(&cfg),
        Command::Poly { .. } => commands::poly(&cfg),
        Command::Summing { .. } => commands::summing(&cfg),
        Command::Pietsch { .. } => commands::pietsch(&cfg, cli.out.as_deref()),
        Command::Check { .. } => commands::check(&cfg),
    }?;
    Ok((outcome, cfg, start.elapsed().as_millis()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, cfg, wall_ms) = match run(&cli) {
        Ok(r) => r,
        Err(CliError::Input(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(core_exit(&e));
        }
        Err(CliError::Output(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    let report = Report {
        artifact: ARTIFACT,
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().into(),
        config: cfg,
        results: outcome.results,
        timing: Timing {
            wall_ms,
            threads: rayon::current_num_threads(),
        },
    };
    if let Err(e) = emit(&cli, &report, outcome.table.as_ref()) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    match outcome.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::CheckFailed => {
            eprintln!("check failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Status::PietschBudget => {
            eprintln!("Pietsch certificate above tolerance after the refinement budget");
            ExitCode::from(EXIT_PIETSCH_BUDGET)
        }
    }
}
