use std::path::{Path, PathBuf};

use mzweak::analysis::{DRIFT_PRESET_X, DRIFT_PRESET_Y};
use mzweak::detection::{DriftModel, ScanConfig, SourceModel};
use mzweak::pointer::{joint_couplers, CouplerSpec, PointerSetup, BEAM_SIGMA_UM};
use mzweak::quantum::Arm;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Angles recorded with `reference_repeats` readings per position.
pub const REFERENCE_THETAS: [f64; 2] = [45.0, 90.0];
pub const ZERO_REFERENCE: f64 = 45.0;
pub const UNIT_REFERENCE: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockedArm {
    #[serde(rename = "none")]
    None,
    A,
    B,
}

impl BlockedArm {
    pub fn arm(self) -> Option<Arm> {
        match self {
            BlockedArm::None => None,
            BlockedArm::A => Some(Arm::A),
            BlockedArm::B => Some(Arm::B),
        }
    }
}

/// Settings of the separate drift run used for the systematic band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftRunConfig {
    pub n_profiles: usize,
    pub mean_rate: f64,
    pub step_sigma_x: f64,
    pub step_sigma_y: f64,
}

impl Default for DriftRunConfig {
    fn default() -> Self {
        DriftRunConfig {
            n_profiles: DRIFT_PRESET_X.n_profiles,
            mean_rate: DRIFT_PRESET_X.mean_rate,
            step_sigma_x: DRIFT_PRESET_X.step_sigma,
            step_sigma_y: DRIFT_PRESET_Y.step_sigma,
        }
    }
}

/// Whole-run configuration. An empty JSON object gives the default
/// three-angle scan with 16/3/3 repeats and 10⁴ bootstrap profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta_list: Vec<f64>,
    /// Diagonal-polarization coupler strength on arm B (x pointer), µm.
    pub g_x: f64,
    /// Spatial coupler strength on arm A (y pointer), µm.
    pub g_y: f64,
    pub sigma: f64,
    pub arm_phase: f64,
    pub blocked_arm: BlockedArm,
    pub scan: ScanConfig,
    pub reference_repeats: usize,
    pub drift: DriftModel,
    pub drift_run: DriftRunConfig,
    pub source: SourceModel,
    pub n_bootstrap: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            theta_list: vec![0.0, 45.0, 90.0],
            g_x: 50.0,
            g_y: 50.0,
            sigma: BEAM_SIGMA_UM,
            arm_phase: 0.0,
            blocked_arm: BlockedArm::None,
            scan: ScanConfig::default(),
            reference_repeats: 3,
            drift: DriftModel::none(),
            drift_run: DriftRunConfig::default(),
            source: SourceModel::default(),
            n_bootstrap: 10_000,
            seed: 20_160_101,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parses strictly; errors name the offending key path.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!("key `{path}`: {inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::MissingInput(format!("config {}: {e}", p.display())))?;
                Self::from_json(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |key: &str, msg: String| Err(CliError::Config(format!("key `{key}`: {msg}")));
        if self.theta_list.is_empty() {
            return bad("theta_list", "must not be empty".into());
        }
        if let Some(t) = self.theta_list.iter().find(|t| !t.is_finite()) {
            return bad("theta_list", format!("non-finite angle {t}"));
        }
        for (key, g) in [("g_x", self.g_x), ("g_y", self.g_y)] {
            if !g.is_finite() {
                return bad(key, format!("must be finite, got {g}"));
            }
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad("sigma", format!("must be > 0, got {}", self.sigma));
        }
        if !self.arm_phase.is_finite() {
            return bad("arm_phase", "must be finite".into());
        }
        self.scan
            .validate()
            .map_err(|e| CliError::Config(format!("key `scan`: {e}")))?;
        if self.reference_repeats < 1 {
            return bad("reference_repeats", "must be >= 1".into());
        }
        self.drift
            .validate()
            .map_err(|e| CliError::Config(format!("key `drift`: {e}")))?;
        let dr = &self.drift_run;
        if dr.n_profiles < mzweak::analysis::MIN_DRIFT_PROFILES {
            return bad(
                "drift_run.n_profiles",
                format!("must be >= {}", mzweak::analysis::MIN_DRIFT_PROFILES),
            );
        }
        if !(dr.mean_rate > 0.0) || !dr.mean_rate.is_finite() {
            return bad("drift_run.mean_rate", "must be > 0".into());
        }
        for (key, s) in [
            ("drift_run.step_sigma_x", dr.step_sigma_x),
            ("drift_run.step_sigma_y", dr.step_sigma_y),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return bad(key, format!("must be >= 0, got {s}"));
            }
        }
        self.source
            .validate()
            .map_err(|e| CliError::Config(format!("key `source`: {e}")))?;
        if self.n_bootstrap < 1 {
            return bad("n_bootstrap", "must be >= 1".into());
        }
        Ok(())
    }

    pub fn couplers(&self) -> [CouplerSpec; 2] {
        let [mut spatial, mut diagonal] = joint_couplers(0.0);
        spatial.g = self.g_y;
        diagonal.g = self.g_x;
        [spatial, diagonal]
    }

    pub fn pointer_setup(&self) -> PointerSetup {
        PointerSetup {
            sigma: self.sigma,
            arm_phase: self.arm_phase,
        }
    }

    /// Readings per position at `theta`.
    pub fn repeats_for(&self, theta: f64) -> usize {
        if REFERENCE_THETAS.contains(&theta) {
            self.reference_repeats
        } else {
            self.scan.repeats
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(
            ExperimentConfig::from_json("{}").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn nested_overrides_keep_other_defaults() {
        let c = ExperimentConfig::from_json(r#"{"scan": {"mean_rate": 0}, "seed": 7}"#).unwrap();
        assert_eq!(c.scan.mean_rate, 0.0);
        assert_eq!(c.scan.n_points, 61);
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = ExperimentConfig::from_json(r#"{"scan": {"stepp": 3}}"#).unwrap_err();
        assert!(e.to_string().contains("scan"), "{e}");
        assert!(e.to_string().contains("stepp"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn wrong_types_and_ranges_are_named() {
        let e = ExperimentConfig::from_json(r#"{"sigma": "wide"}"#).unwrap_err();
        assert!(e.to_string().contains("sigma"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"scan": {"step": -1}}"#).unwrap_err();
        assert!(e.to_string().contains("step"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"source": {"split_ratio": 2}}"#).unwrap_err();
        assert!(e.to_string().contains("split_ratio"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"blocked_arm": "C"}"#).unwrap_err();
        assert!(e.to_string().contains("blocked_arm"), "{e}");
    }

    #[test]
    fn couplers_follow_axes() {
        let c = ExperimentConfig {
            g_x: 10.0,
            g_y: 20.0,
            ..Default::default()
        };
        let [s, d] = c.couplers();
        assert_eq!((s.axis(), s.g), (mzweak::Axis::Y, 20.0));
        assert_eq!((d.axis(), d.g), (mzweak::Axis::X, 10.0));
        assert_eq!(c.repeats_for(0.0), 16);
        assert_eq!(c.repeats_for(45.0), 3);
    }
}
