//! `frontctl <task> --scenario <path> [--out <dir>] [--parallel N]`
//!
//! Exit codes: 0 ok, 1 solver or I/O error, 2 configuration error,
//! 3 invariant violated by the results.

mod scenario;
mod svg;
mod sweep;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Check,
    Shoot,
    FindSpeed,
    Phase,
    Variational,
    Simulate,
    Sweep,
    Regularity,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Check => "check",
            Task::Shoot => "shoot",
            Task::FindSpeed => "find-speed",
            Task::Phase => "phase",
            Task::Variational => "variational",
            Task::Simulate => "simulate",
            Task::Sweep => "sweep",
            Task::Regularity => "regularity",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Solver(anyhow::Error),
    Io(anyhow::Error),
    Config(anyhow::Error),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Solver(_) | Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Solver(e) => write!(f, "solver error: {e:#}"),
            Failure::Io(e) => write!(f, "i/o error: {e:#}"),
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Invariant(s) => write!(f, "invariant violated: {s}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "frontctl", version, about = "Critical speeds and profiles of sharp traveling fronts")]
struct Cli {
    task: Task,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "frontctl-out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long)]
    parallel: Option<usize>,
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let loaded = scenario::load(&cli.scenario, cli.task)?;
    if cli.parallel == Some(0) {
        return Err(Failure::Config(anyhow::anyhow!("--parallel must be at least 1")));
    }
    let out = tasks::Out::new(&cli.out, cli.task)?;
    match cli.task {
        Task::Check => tasks::check(&loaded, &out),
        Task::Shoot => tasks::shoot_task(&loaded, &out),
        Task::FindSpeed => tasks::find_speed(&loaded, &out),
        Task::Phase => tasks::phase(&loaded, &out),
        Task::Variational => tasks::variational(&loaded, &out),
        Task::Simulate => tasks::simulate_task(&loaded, &out),
        Task::Sweep => sweep::run(&loaded, &out, cli.parallel),
        Task::Regularity => tasks::regularity(&loaded, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(msg) => {
            println!("{}: {msg}", cli.task.name());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("frontctl {}: {e}", cli.task.name());
            ExitCode::from(e.code())
        }
    }
}
