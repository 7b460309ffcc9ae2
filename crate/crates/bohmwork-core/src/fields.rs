//! Bohmian fields extracted from a wave function: probability density,
//! velocity, quantum potential and local energy.
//!
//! All fields are computed from psi directly (Im(psi* d psi)/|psi|^2,
//! Re[(H psi)/psi]), never from an unwrapped phase: displaced excited states
//! carry density nodes where the phase jumps, and these ratios stay exact on
//! both sides of a node. Nodes themselves are masked with a NaN sentinel
//! wherever the density falls below `NODE_FLOOR_REL` times its maximum.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::Grid1D;
use crate::hamiltonian::HamiltonianSpec;
use crate::spectral::{derivative_fd4, second_derivative_fd4, SpectralOps};
use crate::wavefunction::WaveFunction;

/// Relative density floor below which point fields are flagged invalid.
pub const NODE_FLOOR_REL: f64 = 1e-12;

/// Spatial derivative scheme. Spectral is the default; the finite-difference
/// fallback exists for states that are not periodic-smooth on the grid
/// (hard-wall boxes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeScheme {
    #[default]
    Spectral,
    FiniteDiff4,
}

/// Per-node Bohmian fields at a fixed time.
#[derive(Debug, Clone)]
pub struct BohmFields {
    pub grid: Grid1D,
    pub density: Vec<f64>,
    pub velocity: Vec<f64>,
    pub quantum_potential: Vec<f64>,
    pub local_energy: Vec<f64>,
    pub time: f64,
}

/// Pointwise |psi|^2.
pub fn born_density(psi: &WaveFunction) -> Result<Vec<f64>> {
    psi.check_normalized()?;
    Ok(psi.values.iter().map(|v| v.norm_sqr()).collect())
}

fn node_floor(density: &[f64]) -> f64 {
    let max = density.iter().cloned().fold(0.0, f64::max);
    NODE_FLOOR_REL * max
}

fn first_derivative(
    values: &[Complex64],
    grid: &Grid1D,
    scheme: DerivativeScheme,
    ops: &SpectralOps,
) -> Vec<Complex64> {
    match scheme {
        DerivativeScheme::Spectral => ops.derivative(values),
        DerivativeScheme::FiniteDiff4 => derivative_fd4(values, grid.dx()),
    }
}

/// V_Q = -hbar^2 (d^2 R / dx^2) / (2 m R) with R = |psi|, evaluated through
/// psi itself: R''/R = Re[psi''/psi] + (dS/dx)^2 / hbar^2. Differentiating
/// |psi| directly would put a kink at every density node and spray spectral
/// ringing over the whole grid; psi is smooth there.
pub fn quantum_potential(
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    scheme: DerivativeScheme,
) -> Result<Vec<f64>> {
    psi.check_normalized()?;
    let ops = SpectralOps::new(psi.grid);
    let dx = psi.grid.dx();
    let (dpsi, d2psi) = match scheme {
        DerivativeScheme::Spectral => {
            (ops.derivative(&psi.values), ops.second_derivative(&psi.values))
        }
        DerivativeScheme::FiniteDiff4 => (
            derivative_fd4(&psi.values, dx),
            second_derivative_fd4(&psi.values, dx),
        ),
    };
    let density: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    let floor = node_floor(&density);
    let c = -h.hbar * h.hbar / (2.0 * h.mass);
    Ok((0..density.len())
        .map(|i| {
            if density[i] < floor {
                f64::NAN
            } else {
                let ratio = (psi.values[i].conj() * d2psi[i]).re / density[i];
                let grad_s = h.hbar * (psi.values[i].conj() * dpsi[i]).im / density[i];
                c * (ratio + grad_s * grad_s / (h.hbar * h.hbar))
            }
        })
        .collect())
}

/// v(x) = hbar Im(psi* d psi/dx) / (m |psi|^2) - f2(t).
pub fn velocity_field(
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    scheme: DerivativeScheme,
) -> Result<Vec<f64>> {
    psi.check_normalized()?;
    let ops = SpectralOps::new(psi.grid);
    let dpsi = first_derivative(&psi.values, &psi.grid, scheme, &ops);
    let density: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    let floor = node_floor(&density);
    let f2 = h.f2(t);
    Ok((0..psi.values.len())
        .map(|i| {
            if density[i] < floor {
                f64::NAN
            } else {
                h.hbar * (psi.values[i].conj() * dpsi[i]).im / (h.mass * density[i]) - f2
            }
        })
        .collect())
}

/// E(x) = Re[(H psi)(x) / psi(x)].
pub fn local_energy(
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    scheme: DerivativeScheme,
) -> Result<Vec<f64>> {
    psi.check_normalized()?;
    let hpsi = apply_hamiltonian(psi, h, t, scheme);
    let density: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    let floor = node_floor(&density);
    Ok((0..psi.values.len())
        .map(|i| {
            if density[i] < floor {
                f64::NAN
            } else {
                (hpsi[i] / psi.values[i]).re
            }
        })
        .collect())
}

fn apply_hamiltonian(
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    scheme: DerivativeScheme,
) -> Vec<Complex64> {
    match scheme {
        DerivativeScheme::Spectral => {
            let ops = SpectralOps::new(psi.grid);
            ops.apply_hamiltonian(psi, h, t)
        }
        DerivativeScheme::FiniteDiff4 => {
            let dx = psi.grid.dx();
            let d1 = derivative_fd4(&psi.values, dx);
            let d2 = second_derivative_fd4(&psi.values, dx);
            let kin = -h.hbar * h.hbar / (2.0 * h.mass);
            let f2 = h.f2(t);
            (0..psi.values.len())
                .map(|i| {
                    kin * d2[i]
                        + Complex64::new(0.0, h.hbar * f2) * d1[i]
                        + psi.values[i] * h.potential_with_drive(&psi.grid, i, t)
                })
                .collect()
        }
    }
}

/// All four fields in one pass (density, velocity, quantum potential,
/// local energy) sharing the node mask.
pub fn compute_fields(
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    scheme: DerivativeScheme,
) -> Result<BohmFields> {
    let density = born_density(psi)?;
    let velocity = velocity_field(psi, h, t, scheme)?;
    let quantum_potential = quantum_potential(psi, h, scheme)?;
    let local_energy = local_energy(psi, h, t, scheme)?;
    Ok(BohmFields {
        grid: psi.grid,
        density,
        velocity,
        quantum_potential,
        local_energy,
        time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Drive, Potential};
    use approx::assert_relative_eq;

    fn oscillator() -> HamiltonianSpec {
        HamiltonianSpec::new(1.0, 1.0, Potential::Harmonic { omega: 1.0 }, Drive::None).unwrap()
    }

    fn ground_state(grid: Grid1D) -> WaveFunction {
        WaveFunction::from_fn(grid, 0.0, |x| {
            Complex64::new((-0.5 * x * x).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn quantum_potential_of_ground_state() {
        // R ~ exp(-x^2/2) gives V_Q = 1/2 - x^2/2 in oscillator units
        let g = Grid1D::new(-16.0, 16.0, 1024).unwrap();
        let psi = ground_state(g);
        let h = oscillator();
        let vq = quantum_potential(&psi, &h, DerivativeScheme::Spectral).unwrap();
        let i0 = 512; // x = 0
        assert_relative_eq!(vq[i0], 0.5, epsilon = 1e-8);
        let i1 = 544; // x = 1 with dx = 1/32
        assert_relative_eq!(g.x(i1), 1.0);
        assert!(vq[i1].abs() < 1e-8);
    }

    #[test]
    fn quantum_potential_vanishes_for_flat_amplitude() {
        let g = Grid1D::new(0.0, 1.0, 64).unwrap();
        let psi = WaveFunction::from_fn(g, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let h = HamiltonianSpec::new(1.0, 1.0, Potential::Free, Drive::None).unwrap();
        let vq = quantum_potential(&psi, &h, DerivativeScheme::Spectral).unwrap();
        for v in vq {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn velocity_zero_for_real_state() {
        let g = Grid1D::new(-12.0, 12.0, 512).unwrap();
        let psi = ground_state(g);
        let h = oscillator();
        let v = velocity_field(&psi, &h, 0.0, DerivativeScheme::Spectral).unwrap();
        for (i, &vi) in v.iter().enumerate() {
            if vi.is_finite() {
                assert!(vi.abs() < 1e-8, "node {i}: {vi}");
            }
        }
    }

    #[test]
    fn local_energy_of_eigenstate_is_flat() {
        let g = Grid1D::new(-12.0, 12.0, 1024).unwrap();
        let psi = ground_state(g);
        let h = oscillator();
        let e = local_energy(&psi, &h, 0.0, DerivativeScheme::Spectral).unwrap();
        let dens = born_density(&psi).unwrap();
        for i in 0..g.n_points {
            if dens[i] > 1e-6 {
                assert_relative_eq!(e[i], 0.5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn constant_potential_shift_moves_local_energy() {
        let g = Grid1D::new(-12.0, 12.0, 1024).unwrap();
        let psi = ground_state(g);
        let h = oscillator();
        let shift = 2.75;
        let shifted: Vec<f64> = (0..g.n_points)
            .map(|i| h.potential_at(&g, i) + shift)
            .collect();
        let h_shift = HamiltonianSpec::new(
            1.0,
            1.0,
            Potential::Sampled { values: shifted },
            Drive::None,
        )
        .unwrap();
        let e0 = local_energy(&psi, &h, 0.0, DerivativeScheme::Spectral).unwrap();
        let e1 = local_energy(&psi, &h_shift, 0.0, DerivativeScheme::Spectral).unwrap();
        for i in 0..g.n_points {
            if e0[i].is_finite() && e1[i].is_finite() {
                assert_relative_eq!(e1[i] - e0[i], shift, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let g = Grid1D::new(-12.0, 12.0, 512).unwrap();
        let psi = ground_state(g);
        let rho = born_density(&psi).unwrap();
        let total: f64 = rho.iter().sum::<f64>() * g.dx();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn weighted_local_energy_matches_expectation() {
        let g = Grid1D::new(-12.0, 12.0, 1024).unwrap();
        // non-eigenstate: shifted Gaussian with a phase ramp
        let psi = WaveFunction::from_fn(g, 0.0, |x| {
            Complex64::from_polar((-0.5 * (x - 0.7) * (x - 0.7)).exp(), 0.9 * x)
        })
        .unwrap();
        let h = oscillator();
        let e = local_energy(&psi, &h, 0.0, DerivativeScheme::Spectral).unwrap();
        let rho = born_density(&psi).unwrap();
        let dx = g.dx();
        let avg: f64 = e
            .iter()
            .zip(&rho)
            .filter(|(ei, _)| ei.is_finite())
            .map(|(ei, ri)| ei * ri)
            .sum::<f64>()
            * dx;
        let ops = SpectralOps::new(g);
        let expect = ops.energy_expectation(&psi, &h, 0.0);
        assert_relative_eq!(avg, expect, epsilon = 1e-6);
    }

    #[test]
    fn rejects_unnormalized_input() {
        let g = Grid1D::new(-12.0, 12.0, 64).unwrap();
        let mut psi = ground_state(g);
        for v in &mut psi.values {
            *v *= 2.0;
        }
        assert!(matches!(
            born_density(&psi),
            Err(crate::error::BohmError::NotNormalized { .. })
        ));
    }
}
