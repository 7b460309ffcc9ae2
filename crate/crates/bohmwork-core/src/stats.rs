//! Estimator and test-statistic helpers: weighted means, chi-square
//! goodness of fit, Kolmogorov-Smirnov distance, Gauss-Hermite quadrature
//! and Freedman-Diaconis binning.

use crate::error::{BohmError, Result};

/// Weighted mean and its standard error for independent samples with fixed
/// normalized weights: se^2 = sum w_i^2 (x_i - mean)^2.
pub fn weighted_mean_stderr(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    let w_total: f64 = samples.iter().map(|(_, w)| w).sum();
    if w_total <= 0.0 {
        return Err(BohmError::DegenerateWeights { n_effective: 0.0 });
    }
    let w2: f64 = samples.iter().map(|(_, w)| w * w).sum();
    let n_eff = w_total * w_total / w2;
    if n_eff < 2.0 {
        return Err(BohmError::DegenerateWeights { n_effective: n_eff });
    }
    let mean: f64 = samples.iter().map(|(x, w)| x * w).sum::<f64>() / w_total;
    let var: f64 = samples
        .iter()
        .map(|(x, w)| (w / w_total).powi(2) * (x - mean) * (x - mean))
        .sum();
    Ok((mean, var.sqrt()))
}

/// Effective sample size (sum w)^2 / sum w^2.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

// ---------------------------------------------------------------------------
// regularized incomplete gamma and the chi-square tail
// ---------------------------------------------------------------------------

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (std::f64::consts::TAU).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Lower regularized incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Upper regularized incomplete gamma Q(a, x) by Lentz continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Survival probability of a chi-square variate with `dof` degrees of
/// freedom: P(X >= stat).
pub fn chi_square_pvalue(stat: f64, dof: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    (1.0 - gamma_p(dof as f64 / 2.0, stat / 2.0)).clamp(0.0, 1.0)
}

/// Chi-square test of observed counts against expected counts (same total).
/// Returns (statistic, dof, p-value); bins with expected < 5 are pooled into
/// their neighbor.
pub fn chi_square_test(observed: &[f64], expected: &[f64]) -> (f64, usize, f64) {
    assert_eq!(observed.len(), expected.len());
    let mut obs_pooled = Vec::new();
    let mut exp_pooled = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= 5.0 {
            obs_pooled.push(acc_o);
            exp_pooled.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        if let (Some(o), Some(e)) = (obs_pooled.last_mut(), exp_pooled.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        } else {
            obs_pooled.push(acc_o);
            exp_pooled.push(acc_e);
        }
    }
    let stat: f64 = obs_pooled
        .iter()
        .zip(&exp_pooled)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs_pooled.len().saturating_sub(1).max(1);
    (stat, dof, chi_square_pvalue(stat, dof))
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distance between weighted samples
// ---------------------------------------------------------------------------

/// Sup-distance between the weighted empirical CDFs of two sample sets.
pub fn ks_distance_weighted(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let norm = |s: &[(f64, f64)]| -> Vec<(f64, f64)> {
        let total: f64 = s.iter().map(|(_, w)| w).sum();
        let mut v: Vec<(f64, f64)> = s.iter().map(|&(x, w)| (x, w / total)).collect();
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        v
    };
    let a = norm(a);
    let b = norm(b);
    let mut ia = 0;
    let mut ib = 0;
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut d: f64 = 0.0;
    while ia < a.len() || ib < b.len() {
        let xa = a.get(ia).map(|p| p.0).unwrap_or(f64::INFINITY);
        let xb = b.get(ib).map(|p| p.0).unwrap_or(f64::INFINITY);
        // advance both CDFs through every point tied at the current x
        let x = xa.min(xb);
        while ia < a.len() && a[ia].0 == x {
            fa += a[ia].1;
            ia += 1;
        }
        while ib < b.len() && b[ib].0 == x {
            fb += b[ib].1;
            ib += 1;
        }
        d = d.max((fa - fb).abs());
    }
    d
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature
// ---------------------------------------------------------------------------

/// Eigenvalues of a symmetric tridiagonal matrix by QL iteration with
/// implicit shifts. `off[i]` couples rows i and i+1.
fn tridiagonal_eigenvalues(mut diag: Vec<f64>, mut off: Vec<f64>) -> Vec<f64> {
    let n = diag.len();
    off.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 50, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    diag[l] -= p;
                    off[l] = g;
                    off[m] = 0.0;
                }
            }
        }
    }
    diag
}

/// Nodes and weights for n-point Gauss-Hermite quadrature with weight
/// exp(-x^2): integral f(x) e^{-x^2} dx ~ sum w_i f(x_i).
///
/// Nodes come from the Jacobi-matrix eigenvalues of the orthonormal Hermite
/// recurrence, polished by one Newton step; weights from
/// w_i = 1 / (n htilde_{n-1}(x_i)^2).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // orthonormal Hermite polynomial value, returns (htilde_n, htilde_{n-1})
    let htilde = |k: usize, x: f64| -> (f64, f64) {
        let mut h_prev = 0.0;
        let mut h = std::f64::consts::PI.powf(-0.25);
        for j in 0..k {
            let jf = j as f64;
            let h_next = x * (2.0 / (jf + 1.0)).sqrt() * h - (jf / (jf + 1.0)).sqrt() * h_prev;
            h_prev = h;
            h = h_next;
        }
        (h, h_prev)
    };

    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut nodes = tridiagonal_eigenvalues(diag, off);
    nodes.sort_by(f64::total_cmp);
    for x in &mut nodes {
        for _ in 0..2 {
            let (h, h_lower) = htilde(n, *x);
            let dh = (2.0 * n as f64).sqrt() * h_lower;
            if dh != 0.0 {
                *x -= h / dh;
            }
        }
    }
    // enforce the exact even symmetry of the rule
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -s;
        nodes[n - 1 - i] = s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (_, h_lower) = htilde(n, x);
            1.0 / (n as f64 * h_lower * h_lower)
        })
        .collect();
    (nodes, weights)
}

// ---------------------------------------------------------------------------
// histogram binning
// ---------------------------------------------------------------------------

/// Weighted quantile of samples (weights need not be normalized).
pub fn weighted_quantile(samples: &[(f64, f64)], q: f64) -> f64 {
    let mut v: Vec<(f64, f64)> = samples.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|(_, w)| w).sum();
    let target = q.clamp(0.0, 1.0) * total;
    let mut acc = 0.0;
    for (x, w) in &v {
        acc += w;
        if acc >= target {
            return *x;
        }
    }
    v.last().map(|p| p.0).unwrap_or(0.0)
}

/// Freedman-Diaconis bin edges for weighted samples; collapses to a single
/// narrow bin for (near-)degenerate data.
pub fn freedman_diaconis_edges(samples: &[(f64, f64)]) -> Vec<f64> {
    let lo = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let iqr = weighted_quantile(samples, 0.75) - weighted_quantile(samples, 0.25);
    let n_eff = effective_sample_size(&samples.iter().map(|p| p.1).collect::<Vec<_>>());
    let width = 2.0 * iqr / n_eff.cbrt();
    if !(hi > lo) || !(width > 0.0) {
        let c = if samples.is_empty() { 0.0 } else { lo };
        let eps = (c.abs() * 1e-9).max(1e-9);
        return vec![c - eps, c + eps];
    }
    let n_bins = (((hi - lo) / width).ceil() as usize).clamp(1, 10_000);
    let step = (hi - lo) / n_bins as f64;
    (0..=n_bins).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weighted_mean_of_equal_samples() {
        let samples = vec![(3.2, 0.25); 4];
        let (m, se) = weighted_mean_stderr(&samples).unwrap();
        assert_relative_eq!(m, 3.2);
        assert_relative_eq!(se, 0.0);
    }

    #[test]
    fn degenerate_weights_rejected() {
        let samples = vec![(1.0, 1.0), (2.0, 0.0)];
        assert!(matches!(
            weighted_mean_stderr(&samples),
            Err(BohmError::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn gamma_p_known_values() {
        // P(1, x) = 1 - e^{-x}
        for x in [0.1, 1.0, 3.0] {
            assert_relative_eq!(gamma_p(1.0, x), 1.0 - (-x).exp(), epsilon = 1e-12);
        }
        // P(1/2, x) = erf(sqrt(x)); erf(1) = 0.8427007929497149
        assert_relative_eq!(gamma_p(0.5, 1.0), 0.842_700_792_949_714_9, epsilon = 1e-10);
    }

    #[test]
    fn chi_square_pvalues() {
        // chi2 with 2 dof: survival = exp(-x/2)
        for x in [0.5, 2.0, 10.0] {
            assert_relative_eq!(chi_square_pvalue(x, 2), (-x / 2.0).exp(), epsilon = 1e-10);
        }
        // median of chi2_1 ~ 0.4549
        assert_relative_eq!(chi_square_pvalue(0.454_936, 1), 0.5, epsilon = 1e-5);
    }

    #[test]
    fn ks_distance_of_identical_and_shifted() {
        // dyadic sample values so shifted copies tie exactly
        let a: Vec<(f64, f64)> = (0..128).map(|i| (i as f64 / 128.0, 1.0)).collect();
        assert_relative_eq!(ks_distance_weighted(&a, &a), 0.0);
        let b: Vec<(f64, f64)> = (0..128).map(|i| (i as f64 / 128.0 + 0.5, 1.0)).collect();
        assert_relative_eq!(ks_distance_weighted(&a, &b), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gauss_hermite_moments() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for n in [20usize, 64, 200] {
            let (x, w) = gauss_hermite(n);
            let m0: f64 = w.iter().sum();
            assert_relative_eq!(m0, sqrt_pi, epsilon = 1e-12, max_relative = 1e-12);
            let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
            assert_relative_eq!(m2, sqrt_pi / 2.0, epsilon = 1e-10, max_relative = 1e-10);
            let m4: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(4)).sum();
            assert_relative_eq!(m4, 0.75 * sqrt_pi, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn gauss_hermite_integrates_shifted_exponential() {
        // integral e^{-x^2} e^{a x} dx = sqrt(pi) e^{a^2/4}
        let (x, w) = gauss_hermite(200);
        let a = 3.0;
        let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * (a * xi).exp()).sum();
        let exact = std::f64::consts::PI.sqrt() * (a * a / 4.0).exp();
        assert_relative_eq!(got, exact, max_relative = 1e-12);
    }

    #[test]
    fn fd_edges_cover_data() {
        let samples: Vec<(f64, f64)> =
            (0..1000).map(|i| ((i as f64 * 0.731).sin() * 3.0, 1e-3)).collect();
        let edges = freedman_diaconis_edges(&samples);
        assert!(edges.len() >= 3);
        let lo = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        assert!(edges[0] <= lo && *edges.last().unwrap() >= hi);
    }

    #[test]
    fn fd_edges_degenerate_point_mass() {
        let samples = vec![(0.0, 0.5), (0.0, 0.5)];
        let edges = freedman_diaconis_edges(&samples);
        assert_eq!(edges.len(), 2);
        assert!(edges[0] < 0.0 && edges[1] > 0.0);
    }
}
