use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::fit_gaussian;
use crate::detection::ScanRecord;
use crate::error::{Error, Result};
use crate::pointer::Axis;
use crate::rng::{self, domain};

pub const DEFAULT_BOOTSTRAP: usize = 10_000;

/// Largest tolerated fraction of failed bootstrap fits.
pub const MAX_DROPPED_FRACTION: f64 = 0.01;

/// Fitted centres of resampled profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterDistribution {
    pub centers: Vec<f64>,
    pub theta: f64,
    pub axis: Axis,
    /// Draws whose fit failed and were left out.
    pub dropped: usize,
}

impl CenterDistribution {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.centers)
    }

    pub fn std_dev(&self) -> f64 {
        std_dev(&self.centers)
    }

    /// Same distribution translated by `by` µm.
    pub fn shifted(&self, by: f64) -> Self {
        CenterDistribution {
            centers: self.centers.iter().map(|c| c + by).collect(),
            ..self.clone()
        }
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub(crate) fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    // Deviations from the first sample keep constant data at exactly zero.
    let n = v.len() as f64;
    let (s1, s2) = v.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - v[0];
        (a + d, b + d * d)
    });
    ((s2 - s1 * s1 / n).max(0.0) / (n - 1.0)).sqrt()
}

/// Builds `n_bootstrap` profiles by picking, independently for every
/// position, one of the recorded repeats, and fits each. Draw `i` uses its
/// own stream, so the output is independent of scheduling.
pub fn bootstrap_centers(
    record: &ScanRecord,
    n_bootstrap: usize,
    seed: u64,
) -> Result<CenterDistribution> {
    let repeats = record.repeats();
    if repeats == 0 || record.counts.iter().any(|row| row.len() != repeats) {
        return Err(Error::InvalidInput("scan record has no repeats".into()));
    }
    if n_bootstrap == 0 {
        return Err(Error::InvalidInput("n_bootstrap must be >= 1".into()));
    }
    let fits: Vec<Option<f64>> = (0..n_bootstrap as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, &[domain::BOOTSTRAP, i]);
            let profile: Vec<f64> = record
                .counts
                .iter()
                .map(|row| row[r.random_range(0..repeats)] as f64)
                .collect();
            fit_gaussian(&record.positions, &profile)
                .ok()
                .map(|f| f.center)
        })
        .collect();
    let centers: Vec<f64> = fits.iter().flatten().copied().collect();
    let dropped = n_bootstrap - centers.len();
    if dropped as f64 > MAX_DROPPED_FRACTION * n_bootstrap as f64 || centers.is_empty() {
        return Err(Error::TooManyDroppedFits {
            dropped,
            total: n_bootstrap,
        });
    }
    Ok(CenterDistribution {
        centers,
        theta: record.theta,
        axis: record.axis,
        dropped,
    })
}
