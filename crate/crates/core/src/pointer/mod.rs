//! Gaussian pointer dynamics.
//!
//! The x and y beam coordinates act as pointers. A spatial coupler on an
//! arm translates that arm's branches along y; a diagonal coupler splits
//! them into `|↗>` (+g) and `|↘>` (-g) components along x. States are kept
//! as finite branch superpositions, so intensities and centroids are exact
//! sums of Gaussian overlap integrals.

mod branch;
mod mode;
mod profile;

pub use branch::*;
pub use mode::*;
pub use profile::*;
