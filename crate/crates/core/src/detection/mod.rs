//! Fibre-scan count simulation under beam drift, plus the heralded photon
//! source behind the g2 statistic.

mod scan;
mod source;

pub use scan::*;
pub use source::*;
