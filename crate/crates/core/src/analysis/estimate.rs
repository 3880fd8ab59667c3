use serde::{Deserialize, Serialize};

use super::bootstrap::{mean, std_dev, CenterDistribution};
use super::fit::fit_gaussian;
use crate::detection::ScanRecord;
use crate::error::{Error, Result};

/// Smallest usable reference separation, µm.
pub const MIN_SCALE_UM: f64 = 1.0;

/// Fewest drift profiles accepted by [`systematic_band`].
pub const MIN_DRIFT_PROFILES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueEstimate {
    pub mean: f64,
    pub stat_sigma: f64,
    /// Half-width of the drift band, same units as `mean`.
    pub sys_band: f64,
    pub n_samples: usize,
    /// Reference separation `⟨X₁ − X₀⟩` in µm.
    pub scale: f64,
}

impl WeakValueEstimate {
    pub fn with_sys_band(self, sys_band: f64) -> Self {
        WeakValueEstimate { sys_band, ..self }
    }
}

/// `(X − X₀)/⟨X₁ − X₀⟩` over paired draws: the i-th target centre is paired
/// with the i-th centre of the zero reference, and the denominator is the
/// difference of the reference means.
pub fn weak_value_estimate(
    target: &CenterDistribution,
    ref0: &CenterDistribution,
    ref1: &CenterDistribution,
) -> Result<WeakValueEstimate> {
    if target.is_empty() || ref0.is_empty() || ref1.is_empty() {
        return Err(Error::InvalidInput("empty centre distribution".into()));
    }
    let scale = ref1.mean() - ref0.mean();
    if !(scale.abs() >= MIN_SCALE_UM) {
        return Err(Error::ZeroScale { scale });
    }
    let n = target.len().min(ref0.len());
    let values: Vec<f64> = target.centers[..n]
        .iter()
        .zip(&ref0.centers[..n])
        .map(|(x, x0)| (x - x0) / scale)
        .collect();
    Ok(WeakValueEstimate {
        mean: mean(&values),
        stat_sigma: std_dev(&values),
        sys_band: 0.0,
        n_samples: n,
        scale,
    })
}

/// Per-draw weak values behind [`weak_value_estimate`], for histograms.
pub fn weak_value_samples(
    target: &CenterDistribution,
    ref0: &CenterDistribution,
    scale: f64,
) -> Vec<f64> {
    target
        .centers
        .iter()
        .zip(&ref0.centers)
        .map(|(x, x0)| (x - x0) / scale)
        .collect()
}

/// Fitted centre of every profile (every repeat column of every record),
/// in time order.
pub fn drift_centers(records: &[ScanRecord]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for r in records {
        for k in 0..r.repeats() {
            out.push(fit_gaussian(&r.positions, &r.profile(k))?.center);
        }
    }
    Ok(out)
}

/// Spread of drift-run centres in weak-value units.
pub fn systematic_band(records: &[ScanRecord], scale: f64) -> Result<f64> {
    if !(scale.abs() > 0.0) || !scale.is_finite() {
        return Err(Error::ZeroScale { scale });
    }
    let centers = drift_centers(records)?;
    if centers.len() < MIN_DRIFT_PROFILES {
        return Err(Error::InvalidInput(format!(
            "systematic band needs at least {MIN_DRIFT_PROFILES} profiles, got {}",
            centers.len()
        )));
    }
    Ok(std_dev(&centers) / scale.abs())
}
