use std::io::Write;
use std::path::Path;

use super::branch::{Axis, Branch, BranchState};
use super::mode::{gaussian_amplitude, mode_overlap};
use crate::error::{Error, Result};

/// Post-selection probabilities below this leave the centroid undefined.
pub const MIN_POSTSELECTION: f64 = 1e-12;

/// Pairwise weight `c_k c̄_l <sys_l|sys_k> O_perp(k,l)` for the marginal
/// along `axis`.
fn pair_weight(k: &Branch, l: &Branch, axis: Axis, sigma: f64) -> f64 {
    let sys = l.system.inner(k.system);
    if sys == 0.0 {
        return 0.0;
    }
    let perp = match axis {
        Axis::X => mode_overlap(k.dy - l.dy, sigma),
        Axis::Y => mode_overlap(k.dx - l.dx, sigma),
    };
    (k.coeff * l.coeff.conj()).re * sys * perp
}

fn pairs<'a>(state: &'a BranchState) -> impl Iterator<Item = (&'a Branch, &'a Branch)> + 'a {
    state
        .branches
        .iter()
        .flat_map(move |k| state.branches.iter().map(move |l| (k, l)))
}

/// Marginal intensity along `axis` at each grid position.
pub fn marginal_intensity(
    state: &BranchState,
    axis: Axis,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if state.is_empty() {
        return Err(Error::EmptyState);
    }
    let s = state.mode_sigma;
    let terms: Vec<(f64, f64, f64)> = pairs(state)
        .map(|(k, l)| (pair_weight(k, l, axis, s), k.shift(axis), l.shift(axis)))
        .filter(|t| t.0 != 0.0)
        .collect();
    Ok(grid
        .iter()
        .map(|&u| {
            let i: f64 = terms
                .iter()
                .map(|&(w, dk, dl)| {
                    w * gaussian_amplitude(u - dk, s) * gaussian_amplitude(u - dl, s)
                })
                .sum();
            (u, i.max(0.0))
        })
        .collect())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `∫_lo^hi I(u) du` of the marginal along `axis`, in closed form.
///
/// Each pair product `ξ(u-d_k) ξ(u-d_l)` is `O(k,l)` times a normal density
/// of width σ centred at `(d_k+d_l)/2`.
pub fn window_integral(state: &BranchState, axis: Axis, lo: f64, hi: f64) -> Result<f64> {
    if state.is_empty() {
        return Err(Error::EmptyState);
    }
    let s = state.mode_sigma;
    let total: f64 = pairs(state)
        .map(|(k, l)| {
            let w = pair_weight(k, l, axis, s);
            if w == 0.0 {
                return 0.0;
            }
            let (dk, dl) = (k.shift(axis), l.shift(axis));
            let m = 0.5 * (dk + dl);
            w * mode_overlap(dk - dl, s) * (normal_cdf((hi - m) / s) - normal_cdf((lo - m) / s))
        })
        .sum();
    Ok(total.max(0.0))
}

/// Total post-selected probability (integral of either marginal).
pub fn total_probability(state: &BranchState) -> f64 {
    state.norm_sqr()
}

/// Mean of the normalized marginal along `axis`, from closed-form Gaussian
/// moments `M(k,l) = ((d_k+d_l)/2) exp(-(d_k-d_l)²/(8σ²))`.
pub fn centroid_exact(state: &BranchState, axis: Axis) -> Result<f64> {
    let s = state.mode_sigma;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, l) in pairs(state) {
        let w = pair_weight(k, l, axis, s);
        if w == 0.0 {
            continue;
        }
        let (dk, dl) = (k.shift(axis), l.shift(axis));
        let o = mode_overlap(dk - dl, s);
        num += w * 0.5 * (dk + dl) * o;
        den += w * o;
    }
    if !(den > MIN_POSTSELECTION) {
        return Err(Error::VanishingPostSelection { probability: den });
    }
    Ok(num / den)
}

/// Writes `(position_um, intensity)` rows with a header.
pub fn write_profile_csv(path: &Path, profile: &[(f64, f64)]) -> Result<()> {
    let mut out = Vec::with_capacity(profile.len() * 24 + 24);
    writeln!(out, "position_um,intensity").expect("write to Vec");
    for (u, i) in profile {
        writeln!(out, "{u},{i}").expect("write to Vec");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
