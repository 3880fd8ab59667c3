//! Simulation and analysis of a joint weak measurement of the spatial and
//! diagonal-polarization degrees of freedom of a photon in a two-arm
//! interferometer.
//!
//! Layers, bottom up:
//!
//! * [`quantum`]: exact pre/post-selection calculus on path ⊗ polarization.
//! * [`pointer`]: Gaussian pointer dynamics, branch superpositions,
//!   intensity profiles and centroids.
//! * [`detection`]: Monte Carlo fibre scans, beam drift and heralded `g2`.
//! * [`analysis`]: profile fits, bootstrap centres, weak-value estimates and
//!   exports.

pub mod analysis;
pub mod detection;
pub mod error;
pub mod pointer;
pub mod quantum;
pub mod rng;

/// Version stamped into every JSON and manifest file this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

pub use analysis::{CenterDistribution, FitResult, WeakValueEstimate};
pub use detection::{DriftModel, G2Counts, ScanConfig, ScanRecord, SourceModel};
pub use error::{Error, Result};
pub use pointer::{Axis, BranchState, CouplerSpec, PointerSetup};
pub use quantum::{
    observable, post_state, pre_state, weak_value, Arm, ObservableKind, OutcomeDistribution,
    PrePostPair, SystemOperator, SystemState, C64,
};
