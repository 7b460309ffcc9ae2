//! Hamiltonian description: static potential plus the two driving terms
//! `-x f1(t)` (force) and `-p f2(t)` (velocity).

use serde::{Deserialize, Serialize};

use crate::error::{BohmError, Result};
use crate::grid::Grid1D;

/// Static potential V(x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    Harmonic { omega: f64 },
    /// Hard-wall box on [0, width]; V = 0 inside. Only meaningful with
    /// finite-difference derivatives and analytic flow sources.
    InfiniteWell { width: f64 },
    /// Values sampled on the grid the Hamiltonian is used with.
    Sampled { values: Vec<f64> },
}

/// Time-dependent drives. `Sinusoidal` is the resonant pair
/// f1(t) = -A sin(wt), f2(t) = -(A / m w) cos(wt).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drive {
    None,
    Sinusoidal { amplitude: f64, omega: f64 },
}

/// Mass, hbar, static potential and drives; everything `step` and the field
/// extractors need to apply H to a wave function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub mass: f64,
    pub hbar: f64,
    pub potential: Potential,
    pub drive: Drive,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, hbar: f64, potential: Potential, drive: Drive) -> Result<Self> {
        if !(mass > 0.0) || !(hbar > 0.0) {
            return Err(BohmError::InvalidParameter(format!(
                "mass and hbar must be positive, got m = {mass}, hbar = {hbar}"
            )));
        }
        if let Drive::Sinusoidal { omega, .. } = drive {
            if !(omega > 0.0) {
                return Err(BohmError::InvalidParameter(format!(
                    "drive omega must be positive, got {omega}"
                )));
            }
        }
        Ok(HamiltonianSpec { mass, hbar, potential, drive })
    }

    /// Linear force drive f1(t).
    #[inline]
    pub fn f1(&self, t: f64) -> f64 {
        match self.drive {
            Drive::None => 0.0,
            Drive::Sinusoidal { amplitude, omega } => -amplitude * (omega * t).sin(),
        }
    }

    /// Momentum drive f2(t).
    #[inline]
    pub fn f2(&self, t: f64) -> f64 {
        match self.drive {
            Drive::None => 0.0,
            Drive::Sinusoidal { amplitude, omega } => {
                -amplitude / (self.mass * omega) * (omega * t).cos()
            }
        }
    }

    /// d f1 / dt.
    #[inline]
    pub fn df1(&self, t: f64) -> f64 {
        match self.drive {
            Drive::None => 0.0,
            Drive::Sinusoidal { amplitude, omega } => -amplitude * omega * (omega * t).cos(),
        }
    }

    /// d f2 / dt.
    #[inline]
    pub fn df2(&self, t: f64) -> f64 {
        match self.drive {
            Drive::None => 0.0,
            Drive::Sinusoidal { amplitude, omega } => {
                amplitude / self.mass * (omega * t).sin()
            }
        }
    }

    /// Characteristic dynamical angular frequency: the oscillator frequency
    /// plus the drive scale over a ground-state length, or the highest kept
    /// box level. `None` when the Hamiltonian has no intrinsic scale (free,
    /// undriven). The spectral grid cutoff deliberately does not enter: the
    /// split-step factors are exact unitaries at any wavenumber.
    pub fn characteristic_frequency(&self) -> Option<f64> {
        match (&self.potential, &self.drive) {
            (Potential::Harmonic { omega }, Drive::Sinusoidal { amplitude, .. }) => {
                let l = (self.hbar / (self.mass * omega)).sqrt();
                Some(omega + amplitude * l / self.hbar)
            }
            (Potential::Harmonic { omega }, Drive::None) => Some(*omega),
            (Potential::InfiniteWell { width }, _) => Some(
                (self.hbar * std::f64::consts::PI * 2.0 / width).powi(2)
                    / (2.0 * self.mass)
                    / self.hbar,
            ),
            (_, Drive::Sinusoidal { omega, .. }) => Some(*omega),
            _ => None,
        }
    }

    /// Largest admissible split step, 0.05 / characteristic frequency.
    pub fn max_step(&self) -> Option<f64> {
        self.characteristic_frequency().map(|w| 0.05 / w)
    }

    /// Static potential at node `i` of `grid`.
    pub fn potential_at(&self, grid: &Grid1D, i: usize) -> f64 {
        let x = grid.x(i);
        match &self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => 0.5 * self.mass * omega * omega * x * x,
            Potential::InfiniteWell { width } => {
                if x >= 0.0 && x <= *width {
                    0.0
                } else {
                    // outside the walls the state must vanish; fields there are
                    // masked by the density floor
                    0.0
                }
            }
            Potential::Sampled { values } => values[i],
        }
    }

    /// Full position-diagonal potential V(x) - x f1(t) at node `i`.
    #[inline]
    pub fn potential_with_drive(&self, grid: &Grid1D, i: usize, t: f64) -> f64 {
        self.potential_at(grid, i) - grid.x(i) * self.f1(t)
    }
}
