//! Interchangeable closed-system propagators, selectable by name.
//!
//! `spectral` is the production path. `dense` diagonalises the full complex
//! Hermitian matrix without the gauge transform, and `taylor` builds
//! `e^{-iHt}` by scaling and squaring a truncated Taylor series; both exist
//! for cross-checks and small arrays.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::{decompose, ExcitationState};
use crate::error::{Error, Result};
use crate::model::HamiltonianMatrix;

pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;

    /// `e^{-iHt}` on the `N`-dimensional site block.
    fn site_propagator(&self, h: &HamiltonianMatrix, t: f64) -> Result<DMatrix<Complex64>>;

    fn evolve(&self, h: &HamiltonianMatrix, state: &ExcitationState, t: f64) -> Result<ExcitationState> {
        if state.n_sites() != h.dim() {
            return Err(Error::arg("state and Hamiltonian sizes differ"));
        }
        if t == 0.0 {
            return Ok(state.clone());
        }
        let u = self.site_propagator(h, t)?;
        let sites = u * state.site_block();
        let mut amps = Vec::with_capacity(h.dim() + 1);
        amps.push(state.vacuum_amplitude());
        amps.extend(sites.iter().copied());
        ExcitationState::from_amplitudes(amps)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("time must be finite, got {t}")))
    }
}

/// Gauge-fixed tridiagonal QL decomposition.
#[derive(Debug, Default, Clone, Copy)]
pub struct SpectralPropagator;

impl Propagator for SpectralPropagator {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn site_propagator(&self, h: &HamiltonianMatrix, t: f64) -> Result<DMatrix<Complex64>> {
        check_time(t)?;
        Ok(decompose(h)?.propagator(t))
    }
}

/// Dense complex Hermitian eigensolver.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenseEigenPropagator;

impl Propagator for DenseEigenPropagator {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn site_propagator(&self, h: &HamiltonianMatrix, t: f64) -> Result<DMatrix<Complex64>> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(DMatrix::identity(h.dim(), h.dim()));
        }
        let eig = SymmetricEigen::new(h.to_dense());
        let v = &eig.eigenvectors;
        let n = h.dim();
        let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * Complex64::from_polar(1.0, -eig.eigenvalues[j] * t));
        Ok(scaled * v.adjoint())
    }
}

/// Scaling and squaring of a 20-term Taylor series.
#[derive(Debug, Default, Clone, Copy)]
pub struct TaylorPropagator;

impl TaylorPropagator {
    const TERMS: usize = 20;
}

impl Propagator for TaylorPropagator {
    fn name(&self) -> &'static str {
        "taylor"
    }

    fn site_propagator(&self, h: &HamiltonianMatrix, t: f64) -> Result<DMatrix<Complex64>> {
        check_time(t)?;
        let n = h.dim();
        let generator = h.to_dense() * Complex64::new(0.0, -t);
        let norm = generator.iter().map(|z| z.norm()).sum::<f64>();
        // scale until the one-step norm is below 1/2
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let step = generator / Complex64::new(2f64.powi(squarings as i32), 0.0);

        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..=Self::TERMS {
            term = &term * &step / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        Ok(sum)
    }
}

/// Name-indexed set of propagators.
pub struct PropagatorRegistry {
    entries: BTreeMap<&'static str, Box<dyn Propagator>>,
}

impl PropagatorRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, propagator: Box<dyn Propagator>) {
        self.entries.insert(propagator.name(), propagator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Propagator> {
        self.entries.get(name).map(|p| p.as_ref()).ok_or_else(|| {
            Error::arg(format!(
                "unknown propagator {name:?}; available: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for PropagatorRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(SpectralPropagator));
        registry.register(Box::new(DenseEigenPropagator));
        registry.register(Box::new(TaylorPropagator));
        registry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, ArrayConfig};

    #[test]
    fn registry_lookup() {
        let reg = PropagatorRegistry::default();
        assert_eq!(reg.names(), vec!["dense", "spectral", "taylor"]);
        assert_eq!(reg.get("taylor").unwrap().name(), "taylor");
        assert!(reg.get("rk4").is_err());
    }

    #[test]
    fn strategies_agree() {
        let cfg = ArrayConfig::switching(7, 1.0, 2, 6, 0.08).unwrap().with_phase(-1.1).unwrap();
        let h = build_hamiltonian(&cfg);
        let reg = PropagatorRegistry::default();
        let psi = ExcitationState::qubit(7, 2, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        let reference = reg.get("spectral").unwrap().evolve(&h, &psi, 37.5).unwrap();
        for name in ["dense", "taylor"] {
            let other = reg.get(name).unwrap().evolve(&h, &psi, 37.5).unwrap();
            assert!((other.amplitudes() - reference.amplitudes()).norm() < 1e-10, "{name}");
        }
    }
}
