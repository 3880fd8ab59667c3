//! Config-driven front end for the `mzweak` pipeline: analytic weak-value
//! tables, scan simulation, analysis of scan files, heralded g2 and
//! parameter sweeps.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

use commands::{sweep::SweepParam, Context};
use config::REFERENCE_THETAS;

#[derive(Debug, Parser)]
#[command(
    name = "mzweak",
    version,
    about = "Joint weak measurement simulator for a two-arm interferometer"
)]
pub struct Cli {
    /// JSON config; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Overrides the config output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Post-selection angle in degrees; replaces the angle list, or the
    /// target angle for simulate and analyze.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,

    /// Suppress terminal output.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic weak values and ABL conditionals per angle.
    Weakvalue,
    /// Simulate fibre scans and drift runs, writing CSV files.
    Simulate,
    /// Bootstrap scan files into weak values with error bars.
    Analyze {
        /// Directory holding the scan CSVs; defaults to the output directory.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Simulate heralded counting and report g2.
    G2,
    /// Sweep theta, g or sigma and tabulate centroids against first order.
    Sweep {
        #[arg(long, value_parser = ["theta", "g", "sigma"])]
        param: String,
        /// start:stop:step, inclusive.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
}

/// Applies flag overrides and runs the chosen command.
pub fn run(cli: Cli) -> CliResult<()> {
    let mut config = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(t) = cli.theta {
        if !t.is_finite() {
            return Err(CliError::Config(format!("--theta must be finite, got {t}")));
        }
    }
    let mut ctx = Context::new(config);
    if let Some(out) = cli.out {
        ctx.out_dir = out;
    }
    ctx.quiet = cli.quiet;

    match cli.command {
        Command::Weakvalue => {
            if let Some(t) = cli.theta {
                ctx.config.theta_list = vec![t];
            }
            commands::weakvalue::run(&ctx).map(drop)
        }
        Command::Simulate => {
            if let Some(t) = cli.theta {
                let mut list = vec![t];
                list.extend(REFERENCE_THETAS.iter().filter(|&&r| r != t));
                ctx.config.theta_list = list;
            }
            commands::simulate::run(&ctx).map(drop)
        }
        Command::Analyze { input } => {
            let input = input.unwrap_or_else(|| ctx.out_dir.clone());
            commands::analyze::run(&ctx, &input, cli.theta.unwrap_or(0.0)).map(drop)
        }
        Command::G2 => commands::g2::run(&ctx).map(drop),
        Command::Sweep { param, range } => {
            if let Some(t) = cli.theta {
                ctx.config.theta_list = vec![t];
            }
            let param: SweepParam = param.parse()?;
            commands::sweep::run(&ctx, param, &range).map(drop)
        }
    }
}
