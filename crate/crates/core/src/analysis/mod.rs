//! From scan counts to weak values: profile fits, bootstrap centre
//! distributions, reference scaling, drift bands and result export.

mod bootstrap;
mod calibration;
mod estimate;
mod export;
mod fit;

pub use bootstrap::*;
pub use calibration::*;
pub use estimate::*;
pub use export::*;
pub use fit::*;
