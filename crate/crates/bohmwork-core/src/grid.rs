//! Uniform 1D spatial grid used by all spectral and trajectory code.

use serde::{Deserialize, Serialize};

use crate::error::{BohmError, Result};

/// Uniform grid on `[x_min, x_max)` with a power-of-two number of nodes.
///
/// Node `i` sits at `x_min + i * dx`; the right endpoint is excluded so the
/// grid is compatible with periodic spectral transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(BohmError::InvalidGrid(format!(
                "need finite x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(BohmError::InvalidGrid(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        Ok(Grid1D { x_min, x_max, n_points })
    }

    /// Node spacing.
    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    /// Spectral spacing 2*pi / (n_points * dx).
    #[inline]
    pub fn dk(&self) -> f64 {
        std::f64::consts::TAU / (self.n_points as f64 * self.dx())
    }

    /// Position of node `i`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// All node positions.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumber of spectral bin `i` in FFT ordering (positive
    /// frequencies first, then negative).
    #[inline]
    pub fn k(&self, i: usize) -> f64 {
        let n = self.n_points;
        let dk = self.dk();
        if i < n / 2 {
            i as f64 * dk
        } else {
            (i as f64 - n as f64) * dk
        }
    }
}
