use super::estimate::systematic_band;
use crate::detection::{simulate_drift_run, DriftModel, ScanConfig};
use crate::error::{Error, Result};
use crate::pointer::{evolve_and_postselect, joint_couplers, Axis, BranchState, PointerSetup};
use crate::quantum::{post_state, pre_state, Arm};

/// Beam used for drift runs: arm B blocked, post-selected at 0°, so a
/// single spot remains.
pub fn drift_beam(g: f64, setup: PointerSetup) -> Result<BranchState> {
    evolve_and_postselect(
        &pre_state(),
        &joint_couplers(g),
        &post_state(0.0)?,
        Some(Arm::B),
        setup,
    )
}

/// Drift run settings that reproduce a target band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftPreset {
    pub axis: Axis,
    pub target_band: f64,
    /// Reference separation the band is expressed against, µm.
    pub scale: f64,
    /// Random-walk step per profile, µm.
    pub step_sigma: f64,
    pub n_profiles: usize,
    /// Peak counts per drift profile.
    pub mean_rate: f64,
    /// First seed of the ensemble; the band is averaged over
    /// `n_seeds` consecutive seeds because a single walk is very noisy.
    pub seed: u64,
    pub n_seeds: u64,
}

impl DriftPreset {
    pub fn drift(&self) -> DriftModel {
        DriftModel::random_walk(self.step_sigma)
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            repeats: 1,
            mean_rate: self.mean_rate,
            ..ScanConfig::default()
        }
    }

    /// Band of one drift run on `beam`.
    pub fn band_for_seed(&self, beam: &BranchState, seed: u64) -> Result<f64> {
        let run = simulate_drift_run(
            beam,
            self.axis,
            &self.scan_config(),
            &self.drift(),
            self.n_profiles,
            seed,
        )?;
        systematic_band(&run, self.scale)
    }

    /// Ensemble-mean band over the preset's seeds.
    pub fn band(&self, beam: &BranchState) -> Result<f64> {
        let mut sum = 0.0;
        for k in 0..self.n_seeds {
            sum += self.band_for_seed(beam, self.seed.wrapping_add(k))?;
        }
        Ok(sum / self.n_seeds as f64)
    }
}

/// Steps found by [`calibrate_step_sigma`] on [`drift_beam`] with
/// `g = 50 µm` and the default pointer width.
pub const DRIFT_PRESET_X: DriftPreset = DriftPreset {
    axis: Axis::X,
    target_band: 0.070,
    scale: 60.08,
    step_sigma: 0.838,
    n_profiles: 100,
    mean_rate: 4000.0,
    seed: 0x5eed_0001,
    n_seeds: 16,
};

pub const DRIFT_PRESET_Y: DriftPreset = DriftPreset {
    axis: Axis::Y,
    target_band: 0.095,
    scale: 52.60,
    step_sigma: 1.065,
    n_profiles: 100,
    mean_rate: 4000.0,
    seed: 0x5eed_0002,
    n_seeds: 16,
};

pub fn drift_preset(axis: Axis) -> DriftPreset {
    match axis {
        Axis::X => DRIFT_PRESET_X,
        Axis::Y => DRIFT_PRESET_Y,
    }
}

/// Bisects the random-walk step so the drift run of `preset` (its own
/// `step_sigma` ignored) lands on `preset.target_band`. For a fixed seed the
/// walk scales linearly with the step, so the ensemble band is monotone in
/// it.
pub fn calibrate_step_sigma(beam: &BranchState, preset: &DriftPreset) -> Result<f64> {
    let band = |s: f64| {
        DriftPreset {
            step_sigma: s,
            ..*preset
        }
        .band(beam)
    };
    let target = preset.target_band;
    if band(0.0)? >= target {
        return Err(Error::InvalidInput(format!(
            "statistical floor already exceeds target band {target}"
        )));
    }
    let mut hi = 1.0;
    while band(hi)? < target {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NonConvergence { iterations: 0 });
        }
    }
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if band(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
