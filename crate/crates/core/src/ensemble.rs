//! Ensembles of single-rail qubit states `alpha |0> + beta |1>`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `(alpha, beta)` with `|alpha|^2 + |beta|^2 = 1`.
pub type QubitAmplitudes = (Complex64, Complex64);

pub trait StateEnsemble: Send + Sync {
    fn name(&self) -> &'static str;

    /// Deterministic in `(samples, seed)`.
    fn draw(&self, samples: usize, seed: u64) -> Vec<QubitAmplitudes>;
}

/// Haar-random pure qubits with the global phase fixed by `alpha >= 0`.
///
/// Sample `i` is drawn from its own stream seeded with `seed ^ i`, so any
/// subset of samples can be regenerated independently.
#[derive(Debug, Default, Clone, Copy)]
pub struct HaarEnsemble;

impl HaarEnsemble {
    pub fn sample(seed: u64, index: usize) -> QubitAmplitudes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
        let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..TAU);
        let half = cos_theta.clamp(-1.0, 1.0).acos() / 2.0;
        (
            Complex64::new(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), phi),
        )
    }
}

impl StateEnsemble for HaarEnsemble {
    fn name(&self) -> &'static str {
        "haar"
    }

    fn draw(&self, samples: usize, seed: u64) -> Vec<QubitAmplitudes> {
        (0..samples).map(|i| Self::sample(seed, i)).collect()
    }
}

/// The four states of the qubit-transfer figure, cycled to fill `samples`.
#[derive(Debug, Default, Clone, Copy)]
pub struct FigureFourEnsemble;

impl FigureFourEnsemble {
    pub fn states() -> [QubitAmplitudes; 4] {
        let r3 = 3f64.sqrt();
        [
            (Complex64::new(0.5, 0.0), Complex64::new(r3 / 2.0, 0.0)),
            (
                Complex64::new(1.0 / r3, 0.0),
                Complex64::new(0.0, (2.0f64 / 3.0).sqrt()),
            ),
            (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (Complex64::new(r3 / 2.0, 0.0), Complex64::new(0.5, 0.0)),
        ]
    }
}

impl StateEnsemble for FigureFourEnsemble {
    fn name(&self) -> &'static str {
        "fig4"
    }

    fn draw(&self, samples: usize, _seed: u64) -> Vec<QubitAmplitudes> {
        Self::states().iter().copied().cycle().take(samples).collect()
    }
}

pub struct EnsembleRegistry {
    entries: BTreeMap<&'static str, Box<dyn StateEnsemble>>,
}

impl EnsembleRegistry {
    pub fn register(&mut self, ensemble: Box<dyn StateEnsemble>) {
        self.entries.insert(ensemble.name(), ensemble);
    }

    pub fn get(&self, name: &str) -> Result<&dyn StateEnsemble> {
        self.entries.get(name).map(|e| e.as_ref()).ok_or_else(|| {
            Error::arg(format!(
                "unknown ensemble {name:?}; available: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for EnsembleRegistry {
    fn default() -> Self {
        let mut registry = Self {
            entries: BTreeMap::new(),
        };
        registry.register(Box::new(HaarEnsemble));
        registry.register(Box::new(FigureFourEnsemble));
        registry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn haar_states_are_normalised_and_reproducible() {
        let a = HaarEnsemble.draw(500, 7);
        let b = HaarEnsemble.draw(500, 7);
        assert_eq!(a, b);
        assert_ne!(a, HaarEnsemble.draw(500, 8));
        for (alpha, beta) in &a {
            assert_abs_diff_eq!(alpha.norm_sqr() + beta.norm_sqr(), 1.0, epsilon = 1e-14);
            assert!(alpha.re >= 0.0 && alpha.im == 0.0);
        }
    }

    #[test]
    fn haar_moments() {
        // |alpha|^2 is uniform on [0, 1]: mean 1/2, E|alpha|^4 = 1/3
        let draws = HaarEnsemble.draw(20_000, 11);
        let n = draws.len() as f64;
        let m2 = draws.iter().map(|(a, _)| a.norm_sqr()).sum::<f64>() / n;
        let m4 = draws.iter().map(|(a, _)| a.norm_sqr().powi(2)).sum::<f64>() / n;
        assert!((m2 - 0.5).abs() < 0.01, "{m2}");
        assert!((m4 - 1.0 / 3.0).abs() < 0.01, "{m4}");
    }

    #[test]
    fn figure_four_states() {
        let states = FigureFourEnsemble.draw(6, 0);
        assert_eq!(states.len(), 6);
        assert_eq!(states[4], states[0]);
        for (a, b) in FigureFourEnsemble::states() {
            assert_abs_diff_eq!(a.norm_sqr() + b.norm_sqr(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn registry() {
        let reg = EnsembleRegistry::default();
        assert_eq!(reg.names(), vec!["fig4", "haar"]);
        assert!(reg.get("uniform").is_err());
    }
}
