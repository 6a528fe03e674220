use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypo_core::harness::{
    cmd_defaults, cmd_inspect, cmd_solve, cmd_sweep, cmd_verify, error_exit_code, error_json, manifest_exit_code,
    ExperimentConfig, RunManifest, EXIT_CONFIG, EXIT_PASS,
};
use hypo_core::Error;

/// Numerical experiments on kinetic hypoellipticity and velocity averaging.
#[derive(Debug, Parser)]
#[command(name = "hypo", version)]
struct Cli {
    /// TOML file of config keys; see `hypo defaults`.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `N` for every axis or `NTxNXxNV`.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Output root, overriding the config and the environment.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the stepper and the oracle and persist both trajectories.
    Solve,
    /// Run one check of the catalogue.
    Verify { check: String },
    /// Repeat a check across values of one parameter.
    Sweep {
        check: String,
        /// One of beta, N, q, corpus-size.
        #[arg(long, short)]
        parameter: String,
        #[arg(long, short, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
    },
    /// Print every config key with its default value.
    Defaults,
    /// Summarize a snapshot file.
    Inspect { snapshot: PathBuf },
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(g) = &cli.grid {
        cfg.set_grid(g)?;
    }
    if let Some(b) = cli.beta {
        cfg.beta = b;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_manifest(m: &RunManifest) -> i32 {
    println!("{}", serde_json::to_string_pretty(m).expect("the manifest serializes"));
    manifest_exit_code(m)
}

fn run(cli: Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Defaults => {
            print!("{}", cmd_defaults());
            Ok(EXIT_PASS)
        }
        Command::Inspect { snapshot } => {
            println!("{}", serde_json::to_string_pretty(&cmd_inspect(snapshot)?)?);
            Ok(EXIT_PASS)
        }
        Command::Solve => Ok(print_manifest(&cmd_solve(&load(&cli)?)?)),
        Command::Verify { check } => Ok(print_manifest(&cmd_verify(&load(&cli)?, check)?)),
        Command::Sweep {
            check,
            parameter,
            values,
        } => Ok(print_manifest(&cmd_sweep(&load(&cli)?, check, parameter, values)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let obj = serde_json::json!({ "error": "usage", "message": e.to_string(), "exit_code": EXIT_CONFIG });
            eprintln!("{obj}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
