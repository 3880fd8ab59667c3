//! One module per subcommand. Every command writes into the output
//! directory and prints a human summary unless `quiet` is set.

use std::path::{Path, PathBuf};

use mzweak::rng::{derive_seed, domain};
use mzweak::Axis;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub mod analyze;
pub mod g2;
pub mod simulate;
pub mod sweep;
pub mod weakvalue;

/// Resolved command-line context.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Self {
        let out_dir = config.output_dir.clone();
        Context {
            config,
            out_dir,
            quiet: false,
        }
    }

    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    pub fn ensure_out_dir(&self) -> CliResult<&Path> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| {
            CliError::Io(mzweak::Error::Io {
                path: self.out_dir.clone(),
                source: e,
            })
        })?;
        Ok(&self.out_dir)
    }
}

pub const AXES: [Axis; 2] = [Axis::X, Axis::Y];

fn axis_index(axis: Axis) -> u64 {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
    }
}

/// Seed of the scan counts at `(theta, axis)`. Keyed on the angle value so
/// adding angles to the list leaves other scans unchanged.
pub fn scan_seed(seed: u64, theta: f64, axis: Axis) -> u64 {
    derive_seed(
        seed,
        &[domain::SCAN_COUNTS, theta.to_bits(), axis_index(axis)],
    )
}

pub fn bootstrap_seed(seed: u64, theta: f64, axis: Axis) -> u64 {
    derive_seed(
        seed,
        &[domain::BOOTSTRAP, theta.to_bits(), axis_index(axis)],
    )
}

pub fn drift_seed(seed: u64, axis: Axis) -> u64 {
    derive_seed(seed, &[domain::DRIFT, axis_index(axis)])
}

pub fn g2_seed(seed: u64) -> u64 {
    derive_seed(seed, &[domain::HERALD])
}

pub fn scan_file_name(theta: f64, axis: Axis) -> String {
    format!("scan_theta{theta}_{axis}.csv")
}

pub fn drift_file_name(axis: Axis) -> String {
    format!("drift_{axis}.csv")
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes pretty JSON with a trailing newline.
pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| {
        CliError::Io(mzweak::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Fixed-width number for tables; `-` for missing values.
pub(crate) fn cell(v: Option<f64>) -> String {
    match v {
        // Keeps tiny negatives from printing as "-0.0000".
        Some(x) if x.abs() < 5e-5 => format!("{:>9.4}", 0.0),
        Some(x) => format!("{x:>9.4}"),
        None => format!("{:>9}", "-"),
    }
}
