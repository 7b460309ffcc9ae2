//! Shared scenario builders for the kernel benchmarks.

use bohmwork_core::analytic::{eigen_wavefunction, OscillatorParams};
use bohmwork_core::grid::Grid1D;
use bohmwork_core::WaveFunction;

pub const TAU: f64 = std::f64::consts::PI;

pub fn params() -> OscillatorParams {
    OscillatorParams::new(1.0, 1.0, 1.0, 1.0, TAU).unwrap()
}

pub fn grid() -> Grid1D {
    Grid1D::new(-12.0, 12.0, 2048).unwrap()
}

pub fn initial_state(n: usize) -> WaveFunction {
    eigen_wavefunction(&params(), n, 0.0, grid()).unwrap()
}
