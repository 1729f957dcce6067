use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crnbp::scenarios::{self, Report, ScenarioConfig};
use crnbp::Error;

/// Circular restricted n-body problem toolkit.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sets both integrator tolerances.
    #[arg(long, global = true)]
    tolerance_override: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// FLI grid over (a, e) with Tisserand curves.
    FliMap,
    /// Periodic-orbit family about a Lagrange point.
    Family,
    /// ε-homotopy of a CR3BP periodic orbit into the CRNBP.
    EpsilonContinue,
    /// Backward landing trajectories around M2.
    LandingSweep,
    /// Ephemeris phases and frame round trips.
    EphemCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::FliMap => "fli-map",
            Command::Family => "family",
            Command::EpsilonContinue => "epsilon-continue",
            Command::LandingSweep => "landing-sweep",
            Command::EphemCheck => "ephem-check",
        }
    }
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_numerical() => EXIT_NUMERICAL,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: &Cli) -> Result<Report, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(tol) = cli.tolerance_override {
        cfg.override_tolerance(tol)?;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cli.command.name()));
    match cli.command {
        Command::FliMap => scenarios::run_fli_map(&cfg, &out),
        Command::Family => scenarios::run_family(&cfg, &out),
        Command::EpsilonContinue => scenarios::run_epsilon(&cfg, &out),
        Command::LandingSweep => scenarios::run_landing(&cfg, &out),
        Command::EphemCheck => scenarios::run_ephem_check(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("{} files written", report.files.len());
            if report.partial {
                eprintln!("{}: finished with partial results", cli.command.name());
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
