//! FFT-based derivatives and Hamiltonian application on a periodic grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid1D;
use crate::hamiltonian::HamiltonianSpec;
use crate::wavefunction::WaveFunction;

/// Cached FFT plans and wavenumbers for one grid size.
pub struct SpectralOps {
    pub grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_points);
        let inverse = planner.plan_fft_inverse(grid.n_points);
        let k = (0..grid.n_points).map(|i| grid.k(i)).collect();
        SpectralOps { grid, forward, inverse, k }
    }

    #[inline]
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the 1/n normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// d/dx of complex samples.
    pub fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (v, &k) in buf.iter_mut().zip(&self.k) {
            *v *= Complex64::new(0.0, k);
        }
        self.inverse(&mut buf);
        buf
    }

    /// d^2/dx^2 of real samples, returned as real.
    pub fn second_derivative_real(&self, values: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        for (v, &k) in buf.iter_mut().zip(&self.k) {
            *v *= -k * k;
        }
        self.inverse(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }

    /// d^2/dx^2 of complex samples.
    pub fn second_derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (v, &k) in buf.iter_mut().zip(&self.k) {
            *v *= -k * k;
        }
        self.inverse(&mut buf);
        buf
    }

    /// (H psi)(x) with the kinetic and momentum-drive parts applied in k-space
    /// and the position-diagonal parts applied pointwise.
    pub fn apply_hamiltonian(
        &self,
        psi: &WaveFunction,
        h: &HamiltonianSpec,
        t: f64,
    ) -> Vec<Complex64> {
        let mut buf = psi.values.clone();
        self.forward(&mut buf);
        let f2 = h.f2(t);
        let kin = h.hbar * h.hbar / (2.0 * h.mass);
        for (v, &k) in buf.iter_mut().zip(&self.k) {
            // hbar^2 k^2 / 2m  -  hbar k f2
            *v *= kin * k * k - h.hbar * k * f2;
        }
        self.inverse(&mut buf);
        for (i, v) in buf.iter_mut().enumerate() {
            *v += psi.values[i] * h.potential_with_drive(&psi.grid, i, t);
        }
        buf
    }

    /// <psi|H(t)|psi>.
    pub fn energy_expectation(&self, psi: &WaveFunction, h: &HamiltonianSpec, t: f64) -> f64 {
        let hpsi = self.apply_hamiltonian(psi, h, t);
        let dx = psi.grid.dx();
        psi.values
            .iter()
            .zip(&hpsi)
            .map(|(p, hp)| (p.conj() * hp).re)
            .sum::<f64>()
            * dx
    }
}

/// 4th-order centered first derivative with periodic wraparound.
pub fn derivative_fd4(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let c = 1.0 / (12.0 * dx);
    (0..n)
        .map(|i| {
            let m2 = values[(i + n - 2) % n];
            let m1 = values[(i + n - 1) % n];
            let p1 = values[(i + 1) % n];
            let p2 = values[(i + 2) % n];
            (m2 - m1 * 8.0 + p1 * 8.0 - p2) * c
        })
        .collect()
}

/// 4th-order centered second derivative with periodic wraparound (real input).
pub fn second_derivative_fd4_real(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let c = 1.0 / (12.0 * dx * dx);
    (0..n)
        .map(|i| {
            let m2 = values[(i + n - 2) % n];
            let m1 = values[(i + n - 1) % n];
            let v0 = values[i];
            let p1 = values[(i + 1) % n];
            let p2 = values[(i + 2) % n];
            (-m2 + 16.0 * m1 - 30.0 * v0 + 16.0 * p1 - p2) * c
        })
        .collect()
}

/// 4th-order centered second derivative with periodic wraparound.
pub fn second_derivative_fd4(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let c = 1.0 / (12.0 * dx * dx);
    (0..n)
        .map(|i| {
            let m2 = values[(i + n - 2) % n];
            let m1 = values[(i + n - 1) % n];
            let v0 = values[i];
            let p1 = values[(i + 1) % n];
            let p2 = values[(i + 2) % n];
            (-m2 + m1 * 16.0 - v0 * 30.0 + p1 * 16.0 - p2) * c
        })
        .collect()
}
