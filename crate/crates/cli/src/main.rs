//! `beable`: run jump-process experiments from a config file.
//!
//! Exit status: 0 success, 2 configuration or usage error (nothing is
//! written), 3 output error, 4 engine or ensemble failure, 5 `--check`
//! tolerance violated.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, Kind, Layers};
use error::CliError;
use output::{sha256_hex, Artifacts};

#[derive(Parser)]
#[command(name = "beable", version, about = "Non-Markovian jump-process experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts and manifest.
    Run {
        #[command(flatten)]
        common: Common,
        /// Exit with status 5 when an acceptance tolerance is violated.
        #[arg(long)]
        check: bool,
    },
    /// Print the plan and estimated event counts without running anything.
    Describe {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment kind; overrides `kind` in the config file.
    #[arg(value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` with dotted keys, e.g. `engine.hbar2=1e-4`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Model topology with default parameters, e.g. `two_level`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    hbar2: Option<f64>,
    #[arg(long)]
    trajectories: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let layers = Layers {
            kind: self.kind,
            model: self.model.clone(),
            hbar2: self.hbar2,
            trajectories: self.trajectories,
            seed: self.seed,
            workers: self.workers,
            out_dir: self.out_dir.clone(),
            overrides: self.overrides.clone(),
        };
        config::load(self.config.as_deref(), &layers)
    }
}

fn run(cfg: &ExperimentConfig, check: bool) -> Result<String, CliError> {
    let kind = cfg.kind()?;
    let canonical = serde_json::to_string(cfg).expect("serializable config");
    let dir = cfg.out_dir.clone();
    let mut out = Artifacts::create(&dir)?;
    let start = Instant::now();
    let pool = match cfg.workers {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("worker pool: {e}")))?,
        ),
        None => None,
    };
    let summary = match &pool {
        Some(p) => p.install(|| experiments::run(cfg, &mut out)),
        None => experiments::run(cfg, &mut out),
    }?;
    let wall = start.elapsed().as_secs_f64();
    let (passed, message) = summary.check.clone().unwrap_or((true, String::new()));
    let manifest = json!({
        "kind": kind.name(),
        "config": cfg,
        "config_sha256": sha256_hex(canonical.as_bytes()),
        "seed": cfg.seed,
        "versions": {
            "beable-cli": env!("CARGO_PKG_VERSION"),
            "beable-core": beable_core::VERSION,
            "config_schema": config::CONFIG_SCHEMA_VERSION,
            "csv_schema": output::CSV_SCHEMA_VERSION,
        },
        "wall_time_s": wall,
        "outputs": out.written,
        "check": { "requested": check, "passed": passed, "message": message },
        "details": summary.details,
    });
    out.json("manifest.json", &manifest)?;
    if check && !passed {
        return Err(CliError::Check(message));
    }
    Ok(format!(
        "{} finished in {wall:.2}s; artifacts in {}{}",
        kind.name(),
        dir.display(),
        if message.is_empty() { String::new() } else { format!("; {message}") }
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, check } => common.load().and_then(|cfg| run(&cfg, check)),
        Command::Describe { common } => common
            .load()
            .and_then(|cfg| experiments::describe(&cfg))
            .map(|lines| lines.join("\n")),
    };
    match result {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("beable: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
