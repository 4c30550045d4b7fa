mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "hopf-frh", version, about = "Fractional Routh-Hurwitz Hopf bifurcation criterion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the criterion at one parameter point.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mu: Option<Vec<f64>>,
    },
    /// Map the bifurcation surface over a two-parameter window.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        axes: Option<Vec<String>>,
        /// x0,x1,y0,y1
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        #[arg(long = "res", value_delimiter = ',')]
        resolution: Option<Vec<usize>>,
    },
    /// Locate a stationary point of the last minor on the surface.
    Degenerate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        guess: Option<Vec<f64>>,
    },
    /// Integrate the builtin network in time.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mu: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        v0: Option<Vec<f64>>,
        #[arg(long = "horizon", visible_alias = "T")]
        horizon: Option<f64>,
        #[arg(long = "step", visible_alias = "h")]
        step: Option<f64>,
    },
    /// Run the built-in property checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config, or a JSON sidecar from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; a `.sidecar.json` is written next to it.
    #[arg(long)]
    output: Option<String>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

impl Common {
    fn load(&self, name: &str) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::builtin_default(),
        };
        cfg.command.name = Some(name.into());
        if let Some(path) = &self.output {
            cfg.output.path = Some(path.clone());
        }
        if let Some(f) = &self.format {
            cfg.output.format = serde_json::from_value(serde_json::Value::String(f.clone()))?;
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("HOPF_FRH_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .with_context(|| format!("HOPF_FRH_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("configuring the worker pool")
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Classify { common, mu } => {
            let mut cfg = common.load("classify")?;
            set(&mut cfg.command.mu, mu);
            commands::classify(&cfg.resolve()?)
        }
        Command::Scan { common, axes, window, resolution } => {
            let mut cfg = common.load("scan")?;
            set(&mut cfg.command.axes, axes);
            set(&mut cfg.command.window, window);
            set(&mut cfg.command.resolution, resolution);
            commands::scan(&cfg.resolve()?)
        }
        Command::Degenerate { common, guess } => {
            let mut cfg = common.load("degenerate")?;
            set(&mut cfg.command.guess, guess);
            commands::degenerate(&cfg.resolve()?)
        }
        Command::Simulate { common, mu, x0, v0, horizon, step } => {
            let mut cfg = common.load("simulate")?;
            set(&mut cfg.command.mu, mu);
            set(&mut cfg.command.x0, x0);
            set(&mut cfg.command.v0, v0);
            set(&mut cfg.command.horizon, horizon);
            set(&mut cfg.command.step, step);
            commands::simulate(&cfg.resolve()?)
        }
        Command::Selftest { seed } => selftest::run(seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
