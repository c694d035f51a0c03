//! Closed-form single-photon walk in a resonant array.
//!
//! A photon launched in cavity 1 of a resonant array is mapped onto an upper
//! truncated coherent state with amplitudes `N_c (-iJt)^{k-1} / sqrt((k-1)!)`.
//! The normalisation involves the regularised incomplete gamma function,
//! `1 - gamma(N, x) / (N-1)! = e^{-x} sum_{j<N} x^j / j!` with `x = (Jt)^2`,
//! which is evaluated here as a partial sum of Poisson weights.
//!
//! The closed form assumes `[A, A^dagger] = 1`, which fails on the last site of
//! a finite chain, so it agrees with exact propagation only until the photon
//! reaches the far end.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// `ln n! - (n + 1/2) ln n + n - ln(2 pi) / 2`.
fn stirling_error(n: usize) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    if n <= 15 {
        let log_factorial: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        return log_factorial - (nf + 0.5) * nf.ln() + nf - 0.5 * TAU.ln();
    }
    let n2 = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / n2) / n2) / n2) / n2) / nf
}

/// `j ln(j / x) + x - j` without cancellation near `j = x`.
fn deviance(j: f64, x: f64) -> f64 {
    if (j - x).abs() < 0.1 * (j + x) {
        let v = (j - x) / (j + x);
        let mut sum = (j - x) * v;
        let mut term = 2.0 * j * v;
        let v2 = v * v;
        for k in 1.. {
            term *= v2;
            let next = sum + term / (2 * k + 1) as f64;
            if next == sum {
                break;
            }
            sum = next;
        }
        sum
    } else {
        j * (j / x).ln() + x - j
    }
}

/// `ln(e^{-x} x^j / j!)` to full relative precision of the weight.
fn log_poisson(j: usize, x: f64) -> f64 {
    if j == 0 {
        return -x;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    let jf = j as f64;
    -stirling_error(j) - deviance(jf, x) - 0.5 * (TAU * jf).ln()
}

/// `e^{-x} sum_{j=0}^{n-1} x^j / j!`, the probability that a Poisson variable
/// of mean `x` is below `n`.
pub fn regularized_upper_tail(n: usize, x: f64) -> Result<f64> {
    check_tail_args(n, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    // Kahan-compensated
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for j in 0..n {
        let y = log_poisson(j, x).exp() - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    Ok(sum.clamp(0.0, 1.0))
}

fn check_tail_args(n: usize, x: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::arg("the tail needs at least one term"));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::arg(format!("x must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// Natural log of [`regularized_upper_tail`], finite even when the tail
/// underflows.
pub fn log_regularized_upper_tail(n: usize, x: f64) -> Result<f64> {
    let tail = regularized_upper_tail(n, x)?;
    if tail > 1e-300 {
        return Ok(tail.ln());
    }
    let logs: Vec<f64> = (0..n).map(|j| log_poisson(j, x)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(peak + logs.iter().map(|l| (l - peak).exp()).sum::<f64>().ln())
}

/// Truncated coherent state reached by a photon starting in cavity 1.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedCoherentProfile {
    /// `(Jt)^2`.
    pub excitation_scale: f64,
    /// Site amplitudes, cavity 1 first.
    pub amplitudes: Vec<Complex64>,
    /// `N_c = e^{-x/2} / sqrt(tail)`; underflows to zero for very large `x`.
    pub normalization: f64,
}

impl TruncatedCoherentProfile {
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Amplitudes `N_c (-iJt)^{k-1} / sqrt((k-1)!)` for `k = 1..=n_sites`,
/// assembled in log-magnitude form.
pub fn truncated_coherent_amplitudes(coupling: f64, t: f64, n_sites: usize) -> Result<TruncatedCoherentProfile> {
    if !(coupling.is_finite() && coupling > 0.0) {
        return Err(Error::arg(format!("coupling must be positive, got {coupling}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::arg(format!("time must be finite and non-negative, got {t}")));
    }
    if n_sites == 0 {
        return Err(Error::arg("need at least one site"));
    }
    let jt = coupling * t;
    let x = jt * jt;
    if jt == 0.0 {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_sites];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        return Ok(TruncatedCoherentProfile {
            excitation_scale: 0.0,
            amplitudes,
            normalization: 1.0,
        });
    }

    let log_tail = log_regularized_upper_tail(n_sites, x)?;
    let log_norm = -0.5 * x - 0.5 * log_tail;
    // |amplitude_j|^2 = (Poisson weight j) / tail
    let amplitudes = (0..n_sites)
        .map(|j| {
            let magnitude = (0.5 * (log_poisson(j, x) - log_tail)).exp();
            // (-i)^j
            let phase = match j % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            };
            phase * magnitude
        })
        .collect();
    Ok(TruncatedCoherentProfile {
        excitation_scale: x,
        amplitudes,
        normalization: log_norm.exp(),
    })
}

/// `e^{-x} x^k / k!` for `k = 0..n`; the infinite-chain limit of the profile.
pub fn poisson_weights(x: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| if x == 0.0 { if k == 0 { 1.0 } else { 0.0 } } else { log_poisson(k, x).exp() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tail_edge_cases() {
        for n in [1, 3, 10, 100] {
            assert_eq!(regularized_upper_tail(n, 0.0).unwrap(), 1.0);
        }
        for x in [0.1, 1.0, 7.5, 50.0] {
            assert_abs_diff_eq!(regularized_upper_tail(1, x).unwrap(), (-x).exp(), epsilon = 1e-15);
        }
        assert!(regularized_upper_tail(3, -1.0).is_err());
        assert!(regularized_upper_tail(0, 1.0).is_err());
    }

    #[test]
    fn tail_monotonicity() {
        for n in [1, 2, 5, 10, 30] {
            let xs: Vec<f64> = (1..200).map(|i| i as f64 * 0.1).collect();
            let vals: Vec<f64> = xs.iter().map(|x| regularized_upper_tail(n, *x).unwrap()).collect();
            // strictly decreasing until the tail rounds to one
            assert!(vals.windows(2).all(|w| w[1] < w[0] || w[0] > 1.0 - 1e-13), "n = {n}");
        }
        for x in [0.3, 2.0, 9.0] {
            let vals: Vec<f64> = (1..15).map(|n| regularized_upper_tail(n, x).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0] || w[1] > 1.0 - 1e-13), "x = {x}");
        }
    }

    #[test]
    fn log_tail_survives_underflow() {
        // ln(3.1416862235097476178e-340), 40-digit reference
        let got = log_regularized_upper_tail(4, 800.0).unwrap();
        assert_abs_diff_eq!(got, -781.734171948339, epsilon = 1e-9);
    }

    #[test]
    fn profile_at_zero_time() {
        let p = truncated_coherent_amplitudes(0.05, 0.0, 10).unwrap();
        assert_eq!(p.amplitudes[0], Complex64::new(1.0, 0.0));
        assert!(p.amplitudes[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn profile_is_normalised_with_exact_phases() {
        for (j, t, n) in [(0.05, 30.0, 10), (0.05, 84.0, 10), (1.0, 40.0, 12), (0.3, 100.0, 2000)] {
            let p = truncated_coherent_amplitudes(j, t, n).unwrap();
            let total: f64 = p.probabilities().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            for (k, a) in p.amplitudes.iter().enumerate() {
                let unit = match k % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, -1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, 1.0),
                };
                let real = a * unit.conj();
                assert!(real.re >= 0.0 && real.im == 0.0);
            }
        }
    }

    #[test]
    fn normalisation_matches_gamma_expression() {
        let (j, t, n) = (0.05, 30.0, 10);
        let p = truncated_coherent_amplitudes(j, t, n).unwrap();
        let x: f64 = (j * t) * (j * t);
        let expected = (-x / 2.0).exp() / regularized_upper_tail(n, x).unwrap().sqrt();
        assert_abs_diff_eq!(p.normalization, expected, epsilon = 1e-14);
    }

    #[test]
    fn mode_follows_excitation_scale() {
        for jt in [1.5f64, 2.0] {
            let x = jt * jt;
            let p = truncated_coherent_amplitudes(0.05, jt / 0.05, 10).unwrap().probabilities();
            let mode = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .unwrap();
            // Fock label round(x) is a most likely cavity (ties at integer x)
            let at_round = p[x.round() as usize];
            assert!((at_round - p[mode]).abs() <= 1e-12 * p[mode]);
        }
    }
}
