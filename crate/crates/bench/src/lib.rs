//! Shared inputs for the criterion benchmarks in `benches/kernels.rs`.

use absorption_core::parabolic::{InitialData, RadialGrid};
use absorption_core::NonlinearitySpec;

pub fn log_power(alpha: f64) -> NonlinearitySpec {
    NonlinearitySpec::log_power(alpha).expect("positive exponent")
}

/// Radial grid on `[0, r_out]` with `intervals` equal cells.
pub fn grid(r_out: f64, intervals: usize, dimension: usize) -> RadialGrid {
    RadialGrid::uniform(r_out, intervals, dimension).expect("valid grid")
}

/// A Gaussian bump in `ln(1 + u)` with the given peak.
pub fn bump(grid: &RadialGrid, peak: f64) -> InitialData {
    InitialData::LogValues(grid.radii().iter().map(|r| peak * (-r * r).exp()).collect())
}
