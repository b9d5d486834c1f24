use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use winkler_contact::dd_solver::Outcome;
use winkler_contact_cli::commands::{cmd_mesh_info, cmd_run, cmd_sweep_gamma, cmd_sweep_layer, CommandError};
use winkler_contact_cli::scenario::{ConfigError, ScenarioConfig};
use winkler_contact_cli::verify::cmd_verify;

const EXIT_CONFIG: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Two-body contact through nonlinear Winkler layers, solved by Robin–Robin domain decomposition.
#[derive(Parser, Debug)]
#[command(name = "winkler-contact", version)]
struct Cli {
    /// Config file with `key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set layer.a=0.3`. May repeat.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the configured scenario and write convergence and pressure CSVs.
    Run {
        /// Exit with status 3 unless the run converges.
        #[arg(long)]
        strict: bool,
    },
    /// One run per relaxation parameter.
    SweepGamma {
        /// Comma-separated list replacing `sweep.gammas`.
        #[arg(long)]
        gammas: Option<String>,
    },
    /// Pressure profiles for several layer laws.
    SweepLayer {
        /// `B:a` pairs replacing `sweep.layers`.
        #[arg(long)]
        layers: Option<String>,
    },
    /// Run the property suite.
    Verify,
    /// Print mesh and dof counts.
    MeshInfo,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_text(&text)?
        }
        None => ScenarioConfig::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: item.clone() })?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if let Command::SweepGamma { gammas: Some(list) } = &cli.command {
        cfg.set("sweep.gammas", list)?;
    }
    if let Command::SweepLayer { layers: Some(list) } = &cli.command {
        cfg.set("sweep.layers", list)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &ScenarioConfig) -> Result<u8, CommandError> {
    match &cli.command {
        Command::Run { strict } => {
            let a = cmd_run(cfg)?;
            println!("outcome={} iterations={} seconds={:.3}", a.outcome, a.iterations, a.seconds);
            if let Some(f) = &a.failure {
                eprintln!("{f}");
            }
            println!("wrote {}, {}, {}", a.convergence.display(), a.pressure.display(), a.summary.display());
            Ok(if *strict && a.outcome != Outcome::Converged { EXIT_DIVERGED } else { 0 })
        }
        Command::SweepGamma { .. } => {
            for row in cmd_sweep_gamma(cfg, &cfg.sweep_gammas)? {
                println!("gamma={} outcome={} iterations={}", row.gamma, row.outcome, row.iterations);
            }
            Ok(0)
        }
        Command::SweepLayer { .. } => {
            for row in cmd_sweep_layer(cfg, &cfg.sweep_layers)? {
                println!("B={:e} a={} outcome={} max|sigma_n|={:.6e} MPa", row.compliance, row.exponent, row.outcome, row.max_abs_pressure);
            }
            Ok(0)
        }
        Command::Verify => {
            let report = cmd_verify(cfg)?;
            for check in &report.checks {
                println!("{check}");
            }
            Ok(if report.passed() { 0 } else { EXIT_VERIFY })
        }
        Command::MeshInfo => {
            print!("{}", cmd_mesh_info(cfg)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match execute(&cli, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
