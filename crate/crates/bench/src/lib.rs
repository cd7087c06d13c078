//! Fixtures shared by the criterion benches in `benches/`.

use tfloc_core::basis::ProbeFamily;
use tfloc_core::localization::{LocalizationSetup, MeasurableSet};
use tfloc_core::{Complex64, Domain, GridSpec, SampledFunction};

/// A modulated Gaussian, unit norm on `grid`.
pub fn wave_packet(grid: &GridSpec) -> SampledFunction {
    let pi = std::f64::consts::PI;
    SampledFunction::from_fn(grid, Domain::Time, &|x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::from_polar((-pi * r2).exp(), 2.0 * pi * x[0])
    })
    .normalized()
    .expect("nonzero on the grid")
}

/// T = [−1, 1], W = [−2, 2] on a 1024-point line of spacing 1/64.
pub fn interval_setup() -> LocalizationSetup {
    let grid = GridSpec::line(1024, 1.0 / 64.0, -8.0).expect("valid grid");
    LocalizationSetup::new(grid, MeasurableSet::interval(-1.0, 1.0), MeasurableSet::interval(-2.0, 2.0))
        .expect("sets fit the grid")
}

/// The single default probe on the Case II line grid.
pub fn line_probe() -> (GridSpec, SampledFunction) {
    let grid = GridSpec::line(2048, 1.0 / 16.0, -16.0).expect("valid grid");
    let probe = ProbeFamily { count: 1, ..Default::default() }.sample(&grid).expect("probe fits").remove(0);
    (grid, probe)
}
