use std::f64::consts::PI;

/// Real Gaussian pointer amplitude `ξ_a(u) = (2πσ²)^(-1/4) exp(-(u-a)²/(4σ²))`.
///
/// `sigma` is the rms width of the intensity `|ξ|²`, not of the amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMode {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianMode {
    pub fn new(center: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0, "pointer width must be positive, got {sigma}");
        GaussianMode { center, sigma }
    }

    pub fn amplitude(&self, u: f64) -> f64 {
        gaussian_amplitude(u - self.center, self.sigma)
    }

    /// `<ξ_a|ξ_b>`.
    pub fn overlap(&self, other: &GaussianMode) -> f64 {
        debug_assert_eq!(self.sigma, other.sigma);
        mode_overlap(self.center - other.center, self.sigma)
    }
}

pub(crate) fn gaussian_amplitude(offset: f64, sigma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-offset * offset / (4.0 * sigma * sigma)).exp()
}

/// `exp(-(a-b)²/(8σ²))` for separation `a - b`.
pub(crate) fn mode_overlap(separation: f64, sigma: f64) -> f64 {
    (-separation * separation / (8.0 * sigma * sigma)).exp()
}

/// Width derived from the glass-plate description (1.9 mm taken as a 4σ
/// full width).
pub const BEAM_SIGMA_UM: f64 = 475.0;

/// Width derived from the collimator description (1.5 mm as 4σ).
pub const COLLIMATED_SIGMA_UM: f64 = 375.0;
