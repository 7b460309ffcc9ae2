//! Two-point-measurement energy-change distribution for the driven
//! oscillator, computed from projective overlaps in truncated Fock space.
//!
//! The first measurement projects the thermal state onto an instantaneous
//! eigenstate of H(0) (a displaced number state) with thermal probability
//! q_n; the evolved state is another displaced number state, and the second
//! measurement projects onto the eigenbasis of H(tau). Both displacement
//! frames share the e^{-i w tau} rotation, so the conditional probabilities
//! reduce to overlaps of number states displaced by
//! delta_eff = i w tau alpha e^{-i w tau}, and the outcome gaps are exact
//! multiples of hbar w (the -|alpha|^2 offsets cancel).

use num_complex::Complex64;

use crate::analytic::OscillatorParams;
use crate::error::{BohmError, Result};
use crate::mixture::{auto_n_max, thermal_weights};

/// Discrete energy-change distribution with its ingredients.
#[derive(Debug, Clone)]
pub struct TmpDistribution {
    /// (delta E, probability), sorted by delta E, zero-probability rows
    /// dropped.
    pub outcomes: Vec<(f64, f64)>,
    /// First-measurement probabilities over retained levels.
    pub q_n: Vec<f64>,
    /// Conditional probabilities; `p_m_given_n[n][m]`.
    pub p_m_given_n: Vec<Vec<f64>>,
    pub mean: f64,
    pub variance: f64,
    pub n_trunc: usize,
}

/// Default truncated dimension: enough room for the thermal levels plus the
/// displacement spread.
pub fn default_n_trunc(params: &OscillatorParams, beta: f64) -> usize {
    let n_max = auto_n_max(params, beta);
    let spread = params.evolved_displacement(params.tau).norm_sqr().ceil() as usize;
    4 * n_max + 4 * spread + 20
}

/// Fock coefficients of the evolved initial eigenstate (global phase
/// dropped): the time-evolved displaced number state with amplitude
/// e^{-i w t} alpha (1 + i w t).
pub fn evolved_state_fock(
    params: &OscillatorParams,
    n: usize,
    n_trunc: usize,
) -> Result<Vec<Complex64>> {
    crate::fock::displaced_number_state(
        params.evolved_displacement(params.tau),
        n,
        n_trunc,
        1e-8,
    )
}

/// Transition probabilities |<m|D(delta)|n>|^2 for every column n <= n_max,
/// with rows up to `m_rows`. Trailing entries below the stored length are
/// zero to machine precision.
///
/// Each column obeys the three-term recurrence
///
///   delta* sqrt(m+1) D_{m+1} = (m - n + |delta|^2) D_m - delta sqrt(m) D_{m-1},
///
/// which follows from D a^dag a = (a^dag - delta*)(a - delta) D. The column
/// is built upward from below the band and downward from above it (the two
/// numerically stable directions), the branches are matched at the band
/// peak, and unitarity fixes the overall scale. This stays O(band) per
/// column, so thermal sweeps retaining thousands of levels remain cheap;
/// the dense matrix exponential in [`crate::fock`] cross-checks it at
/// moderate dimensions.
fn displacement_columns(delta: Complex64, n_max: usize, m_rows: usize) -> Vec<Vec<f64>> {
    if delta.norm_sqr() == 0.0 {
        return (0..=n_max)
            .map(|n| {
                let mut col = vec![0.0; (n + 1).min(m_rows)];
                if n < m_rows {
                    col[n] = 1.0;
                }
                col
            })
            .collect();
    }
    let d2 = delta.norm_sqr();
    let dmag = d2.sqrt();
    let coef_up = |m: usize, n: usize| -> (Complex64, Complex64) {
        // D_{m+1} = a * D_m + b * D_{m-1}
        let inv = 1.0 / (delta.conj() * ((m + 1) as f64).sqrt());
        (
            inv * (m as f64 - n as f64 + d2),
            -inv * delta * (m as f64).sqrt(),
        )
    };

    (0..=n_max)
        .map(|n| {
            let band = (d2 + 6.0 * dmag * ((n + 1) as f64).sqrt() + 30.0).ceil() as usize;
            let m_lo = n.saturating_sub(band + 40);
            let m_hi = (n + band + 40).min(m_rows - 1);
            let peak = (n + d2.floor() as usize).clamp(m_lo + 1, m_hi.max(m_lo + 2) - 1);

            // upward branch from (0, tiny) seeds below the band
            let mut up: Vec<Complex64> = Vec::with_capacity(peak - m_lo + 1);
            let mut prev = Complex64::new(0.0, 0.0);
            let mut cur = Complex64::new(1e-280, 0.0);
            up.push(cur);
            for m in m_lo..peak {
                let (a, b) = coef_up(m, n);
                let next = a * cur + b * prev;
                prev = cur;
                cur = next;
                up.push(cur);
                if cur.norm() > 1e200 {
                    let s = 1e-200;
                    for v in &mut up {
                        *v *= s;
                    }
                    prev *= s;
                    cur *= s;
                }
            }
            // bring the junction value to unit magnitude so branch matching
            // cannot underflow
            let up_mag = up.last().unwrap().norm();
            if up_mag > 0.0 {
                let s = 1.0 / up_mag;
                for v in &mut up {
                    *v *= s;
                }
            }

            // downward branch from (0, tiny) seeds above the band; the
            // recurrence solved for D_{m-1}
            let mut down: Vec<Complex64> = Vec::with_capacity(m_hi - peak + 1);
            let mut above = Complex64::new(0.0, 0.0);
            let mut here = Complex64::new(1e-280, 0.0);
            down.push(here);
            for m in (peak + 1..=m_hi).rev() {
                // delta sqrt(m) D_{m-1} = (m - n + |d|^2) D_m - delta* sqrt(m+1) D_{m+1}
                let lower = ((m as f64 - n as f64 + d2) * here
                    - delta.conj() * ((m + 1) as f64).sqrt() * above)
                    / (delta * (m as f64).sqrt());
                above = here;
                here = lower;
                down.push(here);
                if here.norm() > 1e200 {
                    let s = 1e-200;
                    for v in &mut down {
                        *v *= s;
                    }
                    above *= s;
                    here *= s;
                }
            }
            down.reverse(); // now spans m = peak .. m_hi
            let down_mag = down[0].norm();
            if down_mag > 0.0 {
                let s = 1.0 / down_mag;
                for v in &mut down {
                    *v *= s;
                }
            }

            // match branches at the peak and normalize by unitarity
            let scale = if down[0].norm() > 0.0 {
                up[peak - m_lo] / down[0]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mut col = vec![0.0; m_hi + 1];
            for (i, v) in up.iter().enumerate() {
                col[m_lo + i] = v.norm_sqr();
            }
            for (i, v) in down.iter().enumerate().skip(1) {
                col[peak + i] = (v * scale).norm_sqr();
            }
            let total: f64 = col.iter().sum();
            if total > 0.0 {
                for v in &mut col {
                    *v /= total;
                }
            }
            col
        })
        .collect()
}

/// Two-point-measurement distribution of the thermal state at inverse
/// temperature beta.
pub fn tmp_distribution(
    params: &OscillatorParams,
    beta: f64,
    n_trunc: Option<usize>,
) -> Result<TmpDistribution> {
    if !(beta > 0.0) {
        return Err(BohmError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let n_max = auto_n_max(params, beta);
    let q_n = thermal_weights(params, beta, n_max)?;
    let dim = n_trunc.unwrap_or_else(|| default_n_trunc(params, beta));
    if dim <= n_max {
        return Err(BohmError::TruncationInsufficient(format!(
            "dimension {dim} does not cover the {} retained thermal levels",
            n_max + 1
        )));
    }

    // relative displacement between the evolved state and the measurement
    // basis of H(tau)
    let wt = params.omega * params.tau;
    let delta_eff = Complex64::new(0.0, wt) * params.alpha() * Complex64::from_polar(1.0, -wt);
    let p_m_given_n = displacement_columns(delta_eff, n_max, dim);

    let pad = (dim / 10).max(2);
    for (n, col) in p_m_given_n.iter().enumerate() {
        // columns whose band was clipped by the truncation carry visible
        // population near the top of the stored range
        if col.len() == dim {
            let leak: f64 = col[dim - pad..].iter().sum();
            if leak > 1e-8 {
                return Err(BohmError::TruncationInsufficient(format!(
                    "conditional column n = {n} presses against the truncation \
                     boundary (population {leak:.3e}); increase n_trunc beyond {dim}"
                )));
            }
        }
    }

    // aggregate over the level gap d = m - n
    let quantum = params.hbar * params.omega;
    let max_gap = dim as isize - 1;
    let mut masses = vec![0.0; (2 * max_gap + 1) as usize];
    for (n, col) in p_m_given_n.iter().enumerate() {
        for (m, &p) in col.iter().enumerate() {
            let gap = m as isize - n as isize + max_gap;
            masses[gap as usize] += q_n[n] * p;
        }
    }
    let outcomes: Vec<(f64, f64)> = masses
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| ((i as isize - max_gap) as f64 * quantum, p))
        .collect();

    let mean: f64 = outcomes.iter().map(|(de, p)| de * p).sum();
    let second: f64 = outcomes.iter().map(|(de, p)| de * de * p).sum();
    Ok(TmpDistribution {
        outcomes,
        q_n,
        p_m_given_n,
        mean,
        variance: second - mean * mean,
        n_trunc: dim,
    })
}

/// <e^{-beta dE}> of the measured distribution.
pub fn tmp_exp_energy_change(d: &TmpDistribution, beta: f64) -> f64 {
    d.outcomes.iter().map(|(de, p)| p * (-beta * de).exp()).sum()
}
