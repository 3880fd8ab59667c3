use mzweak::analysis::MIN_DRIFT_PROFILES;
use mzweak::detection::{
    concat_repeats, simulate_drift_run, simulate_scan, write_scan_csv, DriftModel, ScanConfig,
};
use mzweak::pointer::{evolve_and_postselect, BranchState};
use mzweak::quantum::{post_state, pre_state, Arm};
use mzweak::Axis;
use serde::{Deserialize, Serialize};

use super::{
    drift_file_name, drift_seed, scan_file_name, scan_seed, write_json, Context, AXES,
    MANIFEST_FILE,
};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Scan,
    Drift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub kind: FileKind,
    pub theta_deg: f64,
    pub axis: Axis,
    pub seed: u64,
    pub repeats: usize,
}

/// Sidecar describing every CSV written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
    pub config: ExperimentConfig,
}

/// Post-selected pointer state at `theta` under the configured couplers.
pub fn scan_beam(cfg: &ExperimentConfig, theta: f64) -> CliResult<BranchState> {
    Ok(evolve_and_postselect(
        &pre_state(),
        &cfg.couplers(),
        &post_state(theta)?,
        cfg.blocked_arm.arm(),
        cfg.pointer_setup(),
    )?)
}

/// Single-arm beam for the drift run: arm B blocked, post-selected at 0°.
pub fn drift_run_beam(cfg: &ExperimentConfig) -> CliResult<BranchState> {
    Ok(evolve_and_postselect(
        &pre_state(),
        &cfg.couplers(),
        &post_state(0.0)?,
        Some(Arm::B),
        cfg.pointer_setup(),
    )?)
}

pub fn run(ctx: &Context) -> CliResult<Manifest> {
    let cfg = &ctx.config;
    let dir = ctx.ensure_out_dir()?.to_path_buf();
    let mut files = Vec::new();
    for &theta in &cfg.theta_list {
        let beam = scan_beam(cfg, theta)?;
        let scan = ScanConfig {
            theta,
            repeats: cfg.repeats_for(theta),
            ..cfg.scan.clone()
        };
        for axis in AXES {
            let seed = scan_seed(cfg.seed, theta, axis);
            let record = simulate_scan(&beam, axis, &scan, &cfg.drift, seed)?;
            let name = scan_file_name(theta, axis);
            write_scan_csv(&dir.join(&name), std::slice::from_ref(&record))?;
            ctx.say(format!(
                "wrote {name} ({} positions x {} repeats)",
                record.n_points(),
                record.repeats()
            ));
            files.push(ManifestEntry {
                file: name,
                kind: FileKind::Scan,
                theta_deg: theta,
                axis,
                seed,
                repeats: scan.repeats,
            });
        }
    }

    let run = &cfg.drift_run;
    debug_assert!(run.n_profiles >= MIN_DRIFT_PROFILES);
    let beam = drift_run_beam(cfg)?;
    let scan = ScanConfig {
        theta: 0.0,
        repeats: 1,
        mean_rate: run.mean_rate,
        ..cfg.scan.clone()
    };
    for axis in AXES {
        let step = match axis {
            Axis::X => run.step_sigma_x,
            Axis::Y => run.step_sigma_y,
        };
        let seed = drift_seed(cfg.seed, axis);
        let profiles = simulate_drift_run(
            &beam,
            axis,
            &scan,
            &DriftModel::random_walk(step),
            run.n_profiles,
            seed,
        )?;
        let name = drift_file_name(axis);
        write_scan_csv(&dir.join(&name), &[concat_repeats(&profiles)?])?;
        ctx.say(format!("wrote {name} ({} drift profiles)", profiles.len()));
        files.push(ManifestEntry {
            file: name,
            kind: FileKind::Drift,
            theta_deg: 0.0,
            axis,
            seed,
            repeats: run.n_profiles,
        });
    }

    let manifest = Manifest {
        version: mzweak::SCHEMA_VERSION,
        seed: cfg.seed,
        files,
        config: cfg.clone(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
