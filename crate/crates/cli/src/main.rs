//! `resonance`: runs the resonance pipeline from a configuration file.
//!
//! Exit codes: 0 all contracts pass, 2 contract violation, 3 configuration
//! error, 4 numerical non-convergence.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

#[derive(Debug, Parser)]
#[command(name = "resonance", version, about = "Resonances of embedded eigenvalues")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML or JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Largest coupling of the κ ladder.
    #[arg(long, global = true)]
    kappa_max: Option<f64>,

    /// Taylor order n.
    #[arg(long, global = true)]
    n: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Golden Rule width and the κ = 0 boundary trace.
    Fgr,
    /// Resonance positions and amplitudes on the κ ladder.
    Resonance,
    /// Survival amplitude, remainder and decay fit at the largest κ.
    Decay,
    /// Scaling exponents over the κ ladder.
    Sweep,
    /// Commutator identities, virial theorem and Mourre certificates.
    MourreCheck,
    /// Feshbach identity on sampled (z, κ).
    FeshbachCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fgr => "fgr",
            Command::Resonance => "resonance",
            Command::Decay => "decay",
            Command::Sweep => "sweep",
            Command::MourreCheck => "mourre-check",
            Command::FeshbachCheck => "feshbach-check",
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = config::load(path)?;
    if let Some(k) = cli.kappa_max {
        cfg.kappa.max = k;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set --jobs: {e}")))?;
    }
    let cfg = load_config(cli)?;
    let dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()));
    let mut run = Run::new(&dir, cli.command.name(), &cfg)?;
    let result = match cli.command {
        Command::Fgr => commands::run_fgr(&cfg, &mut run),
        Command::Resonance => commands::run_resonance(&cfg, &mut run),
        Command::Decay => commands::run_decay(&cfg, &mut run),
        Command::Sweep => commands::run_sweep(&cfg, &mut run),
        Command::MourreCheck => commands::run_mourre_check(&cfg, &mut run),
        Command::FeshbachCheck => commands::run_feshbach_check(&cfg, &mut run),
    };
    run.close(result.as_ref().err())?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
