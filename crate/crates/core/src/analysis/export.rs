use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bootstrap::CenterDistribution;
use super::estimate::WeakValueEstimate;
use crate::error::{Error, Result};
use crate::pointer::Axis;

pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_BINS: usize = 50;

/// One analysed axis ready for export.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisResult {
    pub estimate: WeakValueEstimate,
    pub centers: CenterDistribution,
    pub weak_values: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryEntry {
    pub theta_deg: f64,
    pub axis: Axis,
    pub weak_value_mean: f64,
    pub stat_sigma: f64,
    pub sys_band: f64,
    pub n_bootstrap: usize,
    pub seed: u64,
    pub scale_um: f64,
    pub center_mean_um: f64,
    pub center_sigma_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub version: u32,
    pub entries: Vec<SummaryEntry>,
}

impl Summary {
    pub fn from_results(results: &[AxisResult]) -> Self {
        Summary {
            version: crate::SCHEMA_VERSION,
            entries: results
                .iter()
                .map(|r| SummaryEntry {
                    theta_deg: r.centers.theta,
                    axis: r.centers.axis,
                    weak_value_mean: r.estimate.mean,
                    stat_sigma: r.estimate.stat_sigma,
                    sys_band: r.estimate.sys_band,
                    n_bootstrap: r.estimate.n_samples,
                    seed: r.seed,
                    scale_um: r.estimate.scale,
                    center_mean_um: r.centers.mean(),
                    center_sigma_um: r.centers.std_dev(),
                })
                .collect(),
        }
    }

    pub fn entry(&self, axis: Axis) -> Option<&SummaryEntry> {
        self.entries.iter().find(|e| e.axis == axis)
    }
}

/// Equal-width histogram over the sample range as `(lo, hi, count)` rows.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, n)| (lo + width * k as f64, lo + width * (k + 1) as f64, n))
        .collect()
}

fn write_histogram(path: &Path, header: &str, rows: &[(f64, f64, usize)]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{header}").expect("write to Vec");
    for (lo, hi, n) in rows {
        writeln!(out, "{lo},{hi},{n}").expect("write to Vec");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `summary.json` plus, per axis, `centers_<axis>.csv` and
/// `weak_values_<axis>.csv` histograms into `dir`. Returns written paths.
pub fn export_results(results: &[AxisResult], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for r in results {
        let axis = r.centers.axis;
        let p = dir.join(format!("centers_{axis}.csv"));
        write_histogram(
            &p,
            "bin_lo_um,bin_hi_um,count",
            &histogram(&r.centers.centers, HISTOGRAM_BINS),
        )?;
        written.push(p);
        let p = dir.join(format!("weak_values_{axis}.csv"));
        write_histogram(
            &p,
            "bin_lo,bin_hi,count",
            &histogram(&r.weak_values, HISTOGRAM_BINS),
        )?;
        written.push(p);
    }
    let p = dir.join(SUMMARY_FILE);
    write_summary(&p, &Summary::from_results(results))?;
    written.push(p);
    Ok(written)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let s: Summary = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
    if s.version != crate::SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: s.version,
            expected: crate::SCHEMA_VERSION,
        });
    }
    Ok(s)
}
