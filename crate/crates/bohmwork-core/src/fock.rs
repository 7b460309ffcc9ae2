//! Truncated Fock-space linear algebra: displacement operators by matrix
//! exponential, thermal density operators and energy-expectation traces.
//! Serves as the side oracle for the trajectory pipeline and as the engine
//! of the two-point-measurement distribution.

use num_complex::Complex64;

use crate::analytic::OscillatorParams;
use crate::error::{BohmError, Result};

/// Minimal dense complex matrix (row-major).
#[derive(Debug, Clone)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    /// Tr(self * other).
    pub fn trace_product(&self, other: &CMat) -> Complex64 {
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    fn one_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor kernel; the
    /// generators used here are skew-Hermitian, so the result is unitary and
    /// the squaring phase is well conditioned.
    pub fn expm(&self) -> CMat {
        let norm = self.one_norm();
        let squarings = if norm <= 0.5 {
            0
        } else {
            (norm / 0.5).log2().ceil() as u32
        };
        let mut scaled = self.clone();
        scaled.scale(0.5f64.powi(squarings as i32));

        // Taylor to degree 18 at norm <= 0.5: remainder below 1e-19
        let mut result = CMat::identity(self.n);
        let mut term = CMat::identity(self.n);
        for k in 1..=18 {
            term = term.matmul(&scaled);
            term.scale(1.0 / k as f64);
            for (r, t) in result.data.iter_mut().zip(&term.data) {
                *r += t;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Annihilation operator on the truncated number basis.
pub fn annihilation(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Displacement operator exp(delta a^dag - delta* a) on the truncated basis.
pub fn displacement(delta: Complex64, dim: usize) -> CMat {
    let mut gen = CMat::zeros(dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = delta * s; // a^dag part
        gen[(n - 1, n)] = -delta.conj() * s; // -a part
    }
    gen.expm()
}

/// Fraction of a state vector's population sitting in the top tenth of the
/// truncated basis. The truncated displacement is exactly unitary (its
/// generator stays skew-Hermitian), so column norms are always one; leakage
/// against the truncation boundary is what actually signals error.
pub fn boundary_mass(coeffs: &[Complex64]) -> f64 {
    let dim = coeffs.len();
    let pad = (dim / 10).max(2);
    coeffs[dim - pad..].iter().map(|c| c.norm_sqr()).sum()
}

/// Coefficients of the displaced number state D(delta)|n> in the number
/// basis. Errors when population presses against the truncation boundary.
pub fn displaced_number_state(
    delta: Complex64,
    n: usize,
    dim: usize,
    tail_tol: f64,
) -> Result<Vec<Complex64>> {
    if n >= dim {
        return Err(BohmError::TruncationInsufficient(format!(
            "level {n} outside truncated dimension {dim}"
        )));
    }
    let d = displacement(delta, dim);
    let col = d.column(n);
    let tail = boundary_mass(&col);
    if tail > tail_tol {
        return Err(BohmError::TruncationInsufficient(format!(
            "boundary population {tail:.3e} exceeds {tail_tol:.3e} (dim = {dim})"
        )));
    }
    Ok(col)
}

/// Oscillator Hamiltonian matrix at time t in the undriven number basis:
/// hbar w (a^dag a + 1/2) - x f1(t) - p f2(t).
pub fn hamiltonian_matrix(p: &OscillatorParams, t: f64, dim: usize) -> CMat {
    let h_spec = p.hamiltonian();
    let f1 = h_spec.f1(t);
    let f2 = h_spec.f2(t);
    let x_scale = (p.hbar / (2.0 * p.mass * p.omega)).sqrt();
    let p_scale = (p.hbar * p.mass * p.omega / 2.0).sqrt();
    let mut h = CMat::zeros(dim);
    for n in 0..dim {
        h[(n, n)] = Complex64::new(p.hbar * p.omega * (n as f64 + 0.5), 0.0);
    }
    for n in 1..dim {
        let s = (n as f64).sqrt();
        // x = x_scale (a + a^dag), p = i p_scale (a^dag - a)
        h[(n - 1, n)] += Complex64::new(-f1 * x_scale * s, 0.0);
        h[(n, n - 1)] += Complex64::new(-f1 * x_scale * s, 0.0);
        h[(n, n - 1)] += Complex64::new(0.0, -f2 * p_scale * s);
        h[(n - 1, n)] += Complex64::new(0.0, f2 * p_scale * s);
    }
    h
}

/// Evolution operator over [0, t]: D(delta(t)) followed by the free-phase
/// diagonal, with delta(t) = A t e^{-i w t} / sqrt(2 hbar m w).
pub fn evolution_matrix(p: &OscillatorParams, t: f64, dim: usize) -> CMat {
    let delta = Complex64::from_polar(
        p.amplitude * t / (2.0 * p.hbar * p.mass * p.omega).sqrt(),
        -p.omega * t,
    );
    let d = displacement(delta, dim);
    let mut u = CMat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let phase = Complex64::from_polar(1.0, -p.omega * t * (j as f64 + 0.5));
            u[(i, j)] = d[(i, j)] * phase;
        }
    }
    u
}

/// Thermal density operator of the displaced-eigenstate mixture:
/// D(alpha) diag(p_n) D(alpha)^dag with truncated, renormalized weights.
pub fn thermal_density(p: &OscillatorParams, beta: f64, dim: usize) -> CMat {
    let u = (-beta * p.hbar * p.omega).exp();
    let mut weights: Vec<f64> = (0..dim).map(|n| u.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let d = displacement(p.alpha(), dim);
    let mut diag = CMat::zeros(dim);
    for n in 0..dim {
        diag[(n, n)] = Complex64::new(weights[n], 0.0);
    }
    d.matmul(&diag).matmul(&d.adjoint())
}

/// Independent energy-change oracle: Tr[H(t_end) rho(t_end)] - Tr[H(0) rho(0)]
/// with rho evolved by the closed-form unitary, all in the truncated basis.
pub fn trace_energy_change(p: &OscillatorParams, beta: f64, dim: usize) -> f64 {
    let rho0 = thermal_density(p, beta, dim);
    let u = evolution_matrix(p, p.tau, dim);
    let rho1 = u.matmul(&rho0).matmul(&u.adjoint());
    let h0 = hamiltonian_matrix(p, 0.0, dim);
    let h1 = hamiltonian_matrix(p, p.tau, dim);
    (h1.trace_product(&rho1) - h0.trace_product(&rho0)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn displacement_is_unitary_and_identity_at_zero() {
        let d0 = displacement(Complex64::new(0.0, 0.0), 24);
        for i in 0..24 {
            for j in 0..24 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d0[(i, j)] - expect).norm() < 1e-14);
            }
        }
        let d = displacement(Complex64::new(0.8, -1.1), 96);
        let should_be_id = d.adjoint().matmul(&d);
        for i in 0..60 {
            for j in 0..60 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (should_be_id[(i, j)] - expect).norm() < 1e-9,
                    "({i},{j}): {:?}",
                    should_be_id[(i, j)]
                );
            }
        }
    }

    #[test]
    fn vacuum_displacement_gives_poisson_weights() {
        let delta = Complex64::new(0.9, 0.4);
        let dim = 64;
        let col = displaced_number_state(delta, 0, dim, 1e-8).unwrap();
        let lam = delta.norm_sqr();
        let mut factorial = 1.0;
        for (m, c) in col.iter().enumerate().take(20) {
            if m > 0 {
                factorial *= m as f64;
            }
            let poisson = (-lam).exp() * lam.powi(m as i32) / factorial;
            assert_relative_eq!(c.norm_sqr(), poisson, epsilon = 1e-8);
        }
    }

    #[test]
    fn displaced_column_norm_flags_small_truncation() {
        let delta = Complex64::new(3.0, 0.0);
        assert!(displaced_number_state(delta, 0, 12, 1e-8).is_err());
        assert!(displaced_number_state(delta, 0, 96, 1e-8).is_ok());
    }

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation(5);
        assert_relative_eq!(a[(0, 1)].re, 1.0);
        assert_relative_eq!(a[(3, 4)].re, 2.0);
        assert_relative_eq!(a[(1, 0)].norm(), 0.0);
    }

    #[test]
    fn hamiltonian_matrix_is_hermitian() {
        let p = OscillatorParams::new(1.3, 0.7, 0.9, 1.0, 2.0).unwrap();
        let h = hamiltonian_matrix(&p, 0.77, 32);
        for i in 0..32 {
            for j in 0..32 {
                assert!((h[(i, j)] - h[(j, i)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstate_energy_from_matrices() {
        // <n_alpha| H(0) |n_alpha> = hbar w (n + 1/2 - |alpha|^2)
        let p = OscillatorParams::new(1.0, 1.0, 1.0, 1.0, PI).unwrap();
        let dim = 96;
        let h0 = hamiltonian_matrix(&p, 0.0, dim);
        for n in [0usize, 3] {
            let col = displaced_number_state(p.alpha(), n, dim, 1e-8).unwrap();
            let mut e = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    e += col[i].conj() * h0[(i, j)] * col[j];
                }
            }
            assert_relative_eq!(e.re, p.eigenvalue(n), epsilon = 1e-8);
            assert!(e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn trace_oracle_matches_closed_form_energy_gain() {
        let p = OscillatorParams::new(1.0, 1.0, 1.0, 1.0, PI).unwrap();
        let gain = trace_energy_change(&p, 1.0, 128);
        assert_relative_eq!(gain, PI * PI / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn trace_oracle_with_other_parameters() {
        let p = OscillatorParams::new(1.4, 0.8, 0.6, 1.0, 1.9).unwrap();
        let gain = trace_energy_change(&p, 0.7, 128);
        let expected = (p.amplitude * p.tau).powi(2) / (2.0 * p.mass);
        assert_relative_eq!(gain, expected, epsilon = 1e-6);
    }
}
