use std::path::Path;

use mzweak::analysis::{
    bootstrap_centers, export_results, systematic_band, weak_value_estimate, weak_value_samples,
    AxisResult, CenterDistribution, Summary,
};
use mzweak::detection::{read_scan_csv, ScanRecord};
use mzweak::Axis;

use super::simulate::Manifest;
use super::{bootstrap_seed, drift_file_name, scan_file_name, Context, AXES, MANIFEST_FILE};
use crate::config::{UNIT_REFERENCE, ZERO_REFERENCE};
use crate::error::{CliError, CliResult};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(mzweak::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_single(path: &Path) -> CliResult<ScanRecord> {
    let mut records = read_scan_csv(path)?;
    if records.len() != 1 {
        return Err(CliError::MissingInput(format!(
            "{}: expected one (theta, axis) block, found {}",
            path.display(),
            records.len()
        )));
    }
    Ok(records.remove(0))
}

fn check_manifest(input: &Path) -> CliResult<()> {
    let path = input.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
    let found = value.get("version").and_then(|v| v.as_u64());
    if found != Some(u64::from(mzweak::SCHEMA_VERSION)) {
        return Err(mzweak::Error::SchemaVersion {
            found: found.unwrap_or(0) as u32,
            expected: mzweak::SCHEMA_VERSION,
        }
        .into());
    }
    serde_json::from_value::<Manifest>(value)
        .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn bootstrap(ctx: &Context, record: &ScanRecord) -> CliResult<CenterDistribution> {
    Ok(bootstrap_centers(
        record,
        ctx.config.n_bootstrap,
        bootstrap_seed(ctx.config.seed, record.theta, record.axis),
    )?)
}

fn analyze_axis(
    ctx: &Context,
    input: &Path,
    target_theta: f64,
    axis: Axis,
) -> CliResult<AxisResult> {
    let target_path = input.join(scan_file_name(target_theta, axis));
    if !target_path.exists() {
        return Err(CliError::MissingInput(format!(
            "target scan {}",
            target_path.display()
        )));
    }
    for theta in [ZERO_REFERENCE, UNIT_REFERENCE] {
        let path = input.join(scan_file_name(theta, axis));
        if !path.exists() {
            return Err(CliError::MissingReference {
                theta,
                axis: axis.to_string(),
                path,
            });
        }
    }
    let target = bootstrap(ctx, &read_single(&target_path)?)?;
    let ref0 = bootstrap(
        ctx,
        &read_single(&input.join(scan_file_name(ZERO_REFERENCE, axis)))?,
    )?;
    let ref1 = bootstrap(
        ctx,
        &read_single(&input.join(scan_file_name(UNIT_REFERENCE, axis)))?,
    )?;
    let mut estimate = weak_value_estimate(&target, &ref0, &ref1)?;

    let drift_path = input.join(drift_file_name(axis));
    if drift_path.exists() {
        estimate = estimate.with_sys_band(systematic_band(
            &read_scan_csv(&drift_path)?,
            estimate.scale,
        )?);
    } else {
        ctx.say(format!(
            "note: {} not found, systematic band set to 0",
            drift_path.display()
        ));
    }
    Ok(AxisResult {
        weak_values: weak_value_samples(&target, &ref0, estimate.scale),
        estimate,
        centers: target,
        seed: ctx.config.seed,
    })
}

/// Bootstraps the target and both reference scans on each axis and writes
/// the summary and histograms.
pub fn run(ctx: &Context, input: &Path, target_theta: f64) -> CliResult<Summary> {
    if !input.is_dir() {
        return Err(CliError::MissingInput(format!(
            "input directory {}",
            input.display()
        )));
    }
    check_manifest(input)?;
    let results = AXES
        .iter()
        .map(|&axis| analyze_axis(ctx, input, target_theta, axis))
        .collect::<CliResult<Vec<_>>>()?;
    let dir = ctx.ensure_out_dir()?;
    export_results(&results, dir)?;
    ctx.say(format!(
        "{:>5} {:>10} {:>10} {:>10} {:>10}",
        "axis", "weak value", "stat", "sys", "scale um"
    ));
    for r in &results {
        let e = &r.estimate;
        ctx.say(format!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.3}",
            r.centers.axis.to_string(),
            e.mean,
            e.stat_sigma,
            e.sys_band,
            e.scale
        ));
    }
    Ok(Summary::from_results(&results))
}
