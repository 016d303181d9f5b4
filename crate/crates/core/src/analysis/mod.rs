//! Fringe fitting, pattern correlation and the two-port difference.

mod correlation;
mod differential;
mod fit;
mod scan;

pub use correlation::*;
pub use differential::*;
pub use fit::{
    fit_visibility, visibility_from_extrema, PhaseAxis, PhaseScan, ScanSample, VisibilityFit,
    MIN_SCAN_SAMPLES,
};
pub use scan::*;
