//! Complex wave function sampled on a [`Grid1D`].

use num_complex::Complex64;

use crate::error::{BohmError, Result};
use crate::grid::Grid1D;

/// Tolerance on |psi|^2 integration for the normalization precondition checks.
pub const NORM_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WaveFunction {
    /// Build from raw samples and normalize; errors on an all-zero input.
    pub fn new(grid: Grid1D, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(BohmError::InvalidGrid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n_points
            )));
        }
        let mut psi = WaveFunction { grid, values, time };
        psi.normalize()?;
        Ok(psi)
    }

    /// Sample a closed form on the grid and normalize.
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid1D, time: f64, f: F) -> Result<Self> {
        let values = (0..grid.n_points).map(|i| f(grid.x(i))).collect();
        WaveFunction::new(grid, values, time)
    }

    /// Discrete L2 norm squared, sum |psi_i|^2 dx.
    pub fn norm_sq(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
    }

    /// Rescale to unit norm; errors if the state is numerically zero.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sq();
        if n2 <= 0.0 || !n2.is_finite() {
            return Err(BohmError::DegenerateState);
        }
        let s = 1.0 / n2.sqrt();
        for v in &mut self.values {
            *v *= s;
        }
        Ok(())
    }

    /// Error unless the norm is within `NORM_CHECK_TOL` of one.
    pub fn check_normalized(&self) -> Result<()> {
        let n2 = self.norm_sq();
        if n2 == 0.0 {
            return Err(BohmError::DegenerateState);
        }
        if (n2 - 1.0).abs() > NORM_CHECK_TOL {
            return Err(BohmError::NotNormalized { norm_sq: n2 });
        }
        Ok(())
    }

    /// Inner product <self|other> with the dx measure.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * dx
    }

    /// |<self|other>|, insensitive to global phase.
    pub fn fidelity(&self, other: &WaveFunction) -> f64 {
        self.inner(other).norm()
    }
}
