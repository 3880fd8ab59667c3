//! Shared inputs for the benchmarks.

use mzweak::detection::{simulate_scan, DriftModel, ScanConfig, ScanRecord};
use mzweak::pointer::{evolve_and_postselect, joint_couplers, PointerSetup};
use mzweak::quantum::{post_state, pre_state};
use mzweak::{Axis, BranchState};

/// Post-selected pointer state at `theta` with 50 µm couplers.
pub fn beam(theta: f64) -> BranchState {
    evolve_and_postselect(
        &pre_state(),
        &joint_couplers(50.0),
        &post_state(theta).unwrap(),
        None,
        PointerSetup::default(),
    )
    .unwrap()
}

/// Default 61-point, 16-repeat scan of the aligned beam.
pub fn target_record() -> ScanRecord {
    simulate_scan(
        &beam(0.0),
        Axis::X,
        &ScanConfig::default(),
        &DriftModel::none(),
        1,
    )
    .unwrap()
}
