use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Windows handled by one random stream.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    /// Pair source: the reference detector fires on every emission and
    /// the signal photons are its partners.
    Heralded,
    /// Coherent-light stand-in: reference and signal are independent.
    Poissonian,
}

/// Photon source feeding a reference detector and a 50:50 split between
/// two signal detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceModel {
    pub kind: SourceKind,
    /// Emission probability per coincidence window.
    pub pair_rate: f64,
    /// Probability that an emission carries two pairs.
    pub multi_pair_prob: f64,
    /// Detection efficiency of each signal photon.
    pub heralding_efficiency: f64,
    /// Fraction routed to the first signal detector.
    pub split_ratio: f64,
    pub n_windows: u64,
    /// Window length, seconds.
    pub window: f64,
}

impl Default for SourceModel {
    fn default() -> Self {
        SourceModel {
            kind: SourceKind::Heralded,
            pair_rate: 0.01,
            multi_pair_prob: 0.02,
            heralding_efficiency: 0.5,
            split_ratio: 0.5,
            n_windows: 10_000_000,
            window: 312.5e-12,
        }
    }
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "source: {name} must lie in [0, 1], got {v}"
                )))
            }
        };
        unit("pair_rate", self.pair_rate)?;
        unit("multi_pair_prob", self.multi_pair_prob)?;
        unit("heralding_efficiency", self.heralding_efficiency)?;
        unit("split_ratio", self.split_ratio)?;
        if !(self.window > 0.0) {
            return Err(Error::InvalidInput("source: window must be > 0".into()));
        }
        Ok(())
    }
}

/// Tallies restricted to windows in which the reference fired.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct G2Counts {
    pub n_reference: u64,
    pub c1: u64,
    pub c2: u64,
    pub triple: u64,
}

impl std::ops::Add for G2Counts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        G2Counts {
            n_reference: self.n_reference + o.n_reference,
            c1: self.c1 + o.c1,
            c2: self.c2 + o.c2,
            triple: self.triple + o.triple,
        }
    }
}

/// Machine-readable summary of a g² run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Report {
    pub version: u32,
    pub seed: u64,
    pub source: SourceModel,
    pub counts: G2Counts,
    pub g2: Option<f64>,
    pub g2_sigma: Option<f64>,
}

impl G2Report {
    pub fn new(source: &SourceModel, counts: G2Counts, seed: u64) -> Self {
        G2Report {
            version: crate::SCHEMA_VERSION,
            seed,
            source: source.clone(),
            counts,
            g2: g2_statistic(&counts).ok(),
            g2_sigma: g2_sigma(&counts).ok(),
        }
    }
}

fn window<R: Rng>(model: &SourceModel, r: &mut R) -> (bool, bool, bool) {
    let eta = model.heralding_efficiency;
    let t = model.split_ratio;
    match model.kind {
        SourceKind::Heralded => {
            if r.random::<f64>() >= model.pair_rate {
                return (false, false, false);
            }
            let photons = if r.random::<f64>() < model.multi_pair_prob {
                2
            } else {
                1
            };
            let (mut s1, mut s2) = (false, false);
            for _ in 0..photons {
                if r.random::<f64>() < eta {
                    if r.random::<f64>() < t {
                        s1 = true;
                    } else {
                        s2 = true;
                    }
                }
            }
            (true, s1, s2)
        }
        SourceKind::Poissonian => {
            if r.random::<f64>() >= model.pair_rate {
                return (false, false, false);
            }
            // Independent coherent signal of mean `pair_rate` photons.
            let mu = model.pair_rate * eta;
            let p1 = -(-mu * t).exp_m1();
            let p2 = -(-mu * (1.0 - t)).exp_m1();
            (true, r.random::<f64>() < p1, r.random::<f64>() < p2)
        }
    }
}

/// Monte Carlo over `n_windows` windows; each chunk of windows draws from
/// its own stream so the result does not depend on thread count.
pub fn simulate_heralded_counts(model: &SourceModel, seed: u64) -> Result<G2Counts> {
    model.validate()?;
    let n_chunks = model.n_windows.div_ceil(CHUNK);
    Ok((0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, &[domain::HERALD, c]);
            let len = CHUNK.min(model.n_windows - c * CHUNK);
            let mut out = G2Counts::default();
            for _ in 0..len {
                let (fired, s1, s2) = window(model, &mut r);
                if fired {
                    out.n_reference += 1;
                    out.c1 += s1 as u64;
                    out.c2 += s2 as u64;
                    out.triple += (s1 && s2) as u64;
                }
            }
            out
        })
        .reduce(G2Counts::default, |a, b| a + b))
}

/// `N·C₁₂ / (C₁·C₂)`.
pub fn g2_statistic(c: &G2Counts) -> Result<f64> {
    if c.n_reference == 0 || c.c1 == 0 || c.c2 == 0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(c.n_reference as f64 * c.triple as f64 / (c.c1 as f64 * c.c2 as f64))
}

/// Counting uncertainty of [`g2_statistic`] by propagating independent
/// Poisson errors on the four exclusive cells (both, only 1, only 2,
/// neither). With no triples the one-count level `N/(C₁·C₂)` is reported.
pub fn g2_sigma(c: &G2Counts) -> Result<f64> {
    let g = g2_statistic(c)?;
    let (n, c1, c2) = (c.n_reference as f64, c.c1 as f64, c.c2 as f64);
    if c.triple == 0 {
        return Ok(n / (c1 * c2));
    }
    let n11 = c.triple as f64;
    let n10 = c1 - n11;
    let n01 = c2 - n11;
    let n00 = n - c1 - c2 + n11;
    // d ln g / d cell for g = (n11+n10+n01+n00)·n11 / ((n11+n10)(n11+n01)).
    let d11 = 1.0 / n + 1.0 / n11 - 1.0 / c1 - 1.0 / c2;
    let d10 = 1.0 / n - 1.0 / c1;
    let d01 = 1.0 / n - 1.0 / c2;
    let d00 = 1.0 / n;
    let var = d11 * d11 * n11 + d10 * d10 * n10 + d01 * d01 * n01 + d00 * d00 * n00;
    Ok(g * var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn statistic_on_hand_counts() {
        let c = G2Counts {
            n_reference: 1000,
            c1: 100,
            c2: 50,
            triple: 1,
        };
        assert_relative_eq!(g2_statistic(&c).unwrap(), 0.2);
        assert!(matches!(
            g2_statistic(&G2Counts { c2: 0, ..c }),
            Err(Error::ZeroDenominator)
        ));
        assert_relative_eq!(g2_sigma(&G2Counts { triple: 0, ..c }).unwrap(), 0.2);
    }

    #[test]
    fn sigma_matches_resampled_spread() {
        // Oracle: redraw the four cells from Poisson and take the spread.
        use rand_distr::{Distribution, Poisson};
        let c = G2Counts {
            n_reference: 100_000,
            c1: 20_000,
            c2: 18_000,
            triple: 400,
        };
        let cells = [400.0, 19_600.0, 17_600.0, 62_400.0];
        let mut r = rng::stream(3, &[1]);
        let draws: Vec<f64> = (0..4000)
            .map(|_| {
                let v: Vec<f64> = cells
                    .iter()
                    .map(|&m| Poisson::new(m).unwrap().sample(&mut r))
                    .collect();
                let k = G2Counts {
                    n_reference: v.iter().sum::<f64>() as u64,
                    c1: (v[0] + v[1]) as u64,
                    c2: (v[0] + v[2]) as u64,
                    triple: v[0] as u64,
                };
                g2_statistic(&k).unwrap()
            })
            .collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd =
            (draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
        let est = g2_sigma(&c).unwrap();
        assert!((est / sd - 1.0).abs() < 0.06, "{est} vs {sd}");
    }

    #[test]
    fn single_photons_never_trigger_both() {
        let m = SourceModel {
            multi_pair_prob: 0.0,
            n_windows: 200_000,
            pair_rate: 0.2,
            ..Default::default()
        };
        let c = simulate_heralded_counts(&m, 1).unwrap();
        assert_eq!(c.triple, 0);
        assert_eq!(g2_statistic(&c).unwrap(), 0.0);
    }

    #[test]
    fn heralded_low_g2() {
        // Oracle: per herald, P(1) = η/2·(1 + f(1 − η/2)) and
        // P(12) = f·η²/2, giving g² = 2f / (1 + f(1 − η/2))².
        let m = SourceModel {
            pair_rate: 0.2,
            n_windows: 4_000_000,
            ..Default::default()
        };
        let c = simulate_heralded_counts(&m, 11).unwrap();
        let (f, eta) = (m.multi_pair_prob, m.heralding_efficiency);
        let want = 2.0 * f / (1.0 + f * (1.0 - eta / 2.0)).powi(2);
        let g = g2_statistic(&c).unwrap();
        let s = g2_sigma(&c).unwrap();
        assert!((g - want).abs() < 4.0 * s, "{g} ± {s} vs {want}");
        assert!(g < 0.1);
    }

    #[test]
    fn poissonian_g2_near_one() {
        let m = SourceModel {
            kind: SourceKind::Poissonian,
            pair_rate: 0.5,
            heralding_efficiency: 1.0,
            n_windows: 2_000_000,
            ..Default::default()
        };
        let c = simulate_heralded_counts(&m, 4).unwrap();
        let g = g2_statistic(&c).unwrap();
        assert!((g - 1.0).abs() < 4.0 * g2_sigma(&c).unwrap(), "{g}");
    }

    #[test]
    fn counts_are_seed_deterministic_and_chunk_exact() {
        let m = SourceModel {
            n_windows: 3 * CHUNK + 17,
            pair_rate: 0.3,
            ..Default::default()
        };
        let a = simulate_heralded_counts(&m, 5).unwrap();
        assert_eq!(a, simulate_heralded_counts(&m, 5).unwrap());
        assert_ne!(a, simulate_heralded_counts(&m, 6).unwrap());
        assert!(a.n_reference <= m.n_windows && a.triple <= a.c1.min(a.c2));
    }

    #[test]
    fn report_serializes_source() {
        let m = SourceModel::default();
        let r = G2Report::new(
            &m,
            G2Counts {
                n_reference: 10,
                c1: 2,
                c2: 2,
                triple: 0,
            },
            9,
        );
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["seed"], 9);
        assert_eq!(v["source"]["kind"], "heralded");
        assert_eq!(v["g2"], 0.0);
        assert!(SourceModel {
            split_ratio: 1.5,
            ..m
        }
        .validate()
        .is_err());
    }
}
