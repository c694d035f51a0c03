//! Exact closed-system evolution in the single-excitation space.
//!
//! The site block of the Hamiltonian is diagonalised once (after removing the
//! bond phases, which turns it into a real symmetric tridiagonal matrix), and
//! `e^{-iHt}` is then applied at any `t` without time stepping. The vacuum is
//! decoupled and sits at energy zero, so its amplitude never changes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigen;
use crate::model::HamiltonianMatrix;

const NORM_TOLERANCE: f64 = 1e-10;
const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;

/// Default number of samples on a time grid.
pub const DEFAULT_SAMPLES: usize = 2000;

/// Amplitudes over `{vacuum, site 1, ..., site N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationState {
    amplitudes: DVector<Complex64>,
}

impl ExcitationState {
    /// Rejects states whose norm differs from one by more than `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::arg("a state needs the vacuum and at least one site"));
        }
        let state = Self {
            amplitudes: DVector::from_vec(amplitudes),
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::arg(format!("state is not normalised (norm {norm})")));
        }
        Ok(state)
    }

    pub fn vacuum(n_sites: usize) -> Self {
        let mut amplitudes = DVector::zeros(n_sites + 1);
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// One photon in cavity `site` (1-based).
    pub fn site(n_sites: usize, site: usize) -> Result<Self> {
        Self::qubit(n_sites, site, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    /// `alpha |vac>> + beta |site>>`.
    pub fn qubit(n_sites: usize, site: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if site == 0 || site > n_sites {
            return Err(Error::arg(format!("site {site} outside 1..={n_sites}")));
        }
        let weight = alpha.norm_sqr() + beta.norm_sqr();
        if (weight - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::arg(format!(
                "|alpha|^2 + |beta|^2 = {weight}, expected 1"
            )));
        }
        let mut amplitudes = DVector::zeros(n_sites + 1);
        amplitudes[0] = alpha;
        amplitudes[site] = beta;
        Ok(Self { amplitudes })
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn vacuum_amplitude(&self) -> Complex64 {
        self.amplitudes[0]
    }

    /// Amplitude of cavity `site` (1-based).
    pub fn site_amplitude(&self, site: usize) -> Complex64 {
        self.amplitudes[site]
    }

    pub fn site_block(&self) -> DVector<Complex64> {
        self.amplitudes.rows(1, self.n_sites()).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &ExcitationState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    fn from_parts(vacuum: Complex64, sites: DVector<Complex64>) -> Self {
        let n = sites.len();
        let amplitudes = DVector::from_fn(n + 1, |i, _| if i == 0 { vacuum } else { sites[i - 1] });
        Self { amplitudes }
    }
}

/// Eigen-decomposition of the site block, `H = V diag(lambda) V^dagger`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    gauge: Vec<Complex64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Unit phases `d_k` with `H = D R D^dagger`, `R` real symmetric.
    pub fn gauge(&self) -> &[Complex64] {
        &self.gauge
    }

    /// Eigenvector `index` expressed in the real (phase-free) gauge.
    pub fn real_gauge_vector(&self, index: usize) -> Vec<f64> {
        // columns are D r with r real, so conj(d_k) v_k is real up to rounding
        (0..self.dim())
            .map(|k| (self.gauge[k].conj() * self.eigenvectors[(k, index)]).re)
            .collect()
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        scaled * v.adjoint()
    }

    /// `e^{-iHt}` on the site block.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        if t == 0.0 {
            return DMatrix::identity(self.dim(), self.dim());
        }
        let v = &self.eigenvectors;
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|l| Complex64::from_polar(1.0, -l * t))
            .collect();
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| v[(i, j)] * phases[j]);
        scaled * v.adjoint()
    }

    /// `<<target| e^{-iHt} |source>>`, sites 1-based.
    pub fn amplitude(&self, source: usize, target: usize, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(if source == target { 1.0 } else { 0.0 }, 0.0);
        }
        let v = &self.eigenvectors;
        (0..self.dim())
            .map(|j| v[(target - 1, j)] * v[(source - 1, j)].conj() * Complex64::from_polar(1.0, -self.eigenvalues[j] * t))
            .sum()
    }

    /// Caches the eigen-coefficients of `state` for repeated evaluation.
    pub fn trajectory(&self, state: &ExcitationState) -> Result<Trajectory<'_>> {
        if state.n_sites() != self.dim() {
            return Err(Error::arg(format!(
                "state has {} sites, Hamiltonian has {}",
                state.n_sites(),
                self.dim()
            )));
        }
        Ok(Trajectory {
            spectrum: self,
            initial: state.clone(),
            vacuum: state.vacuum_amplitude(),
            coefficients: self.eigenvectors.adjoint() * state.site_block(),
        })
    }
}

/// A state's evolution under a fixed Hamiltonian, evaluated lazily in `t`.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    spectrum: &'a SpectralDecomposition,
    initial: ExcitationState,
    vacuum: Complex64,
    coefficients: DVector<Complex64>,
}

impl Trajectory<'_> {
    pub fn at(&self, t: f64) -> Result<ExcitationState> {
        if !t.is_finite() {
            return Err(Error::arg(format!("time must be finite, got {t}")));
        }
        // exact at t = 0 rather than V V^+ up to rounding
        if t == 0.0 {
            return Ok(self.initial.clone());
        }
        let rotated = DVector::from_fn(self.coefficients.len(), |j, _| {
            self.coefficients[j] * Complex64::from_polar(1.0, -self.spectrum.eigenvalues[j] * t)
        });
        Ok(ExcitationState::from_parts(
            self.vacuum,
            &self.spectrum.eigenvectors * rotated,
        ))
    }
}

/// Diagonalises the site block through its real symmetric gauge.
pub fn decompose(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let mut gauge = Vec::with_capacity(n);
    gauge.push(Complex64::new(1.0, 0.0));
    for z in h.off_diagonal() {
        let unit = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        // d_k |z| conj(d_{k+1}) = z  =>  d_{k+1} = d_k conj(z / |z|)
        let next = gauge[gauge.len() - 1] * unit.conj();
        gauge.push(next);
    }
    let magnitudes: Vec<f64> = h.off_diagonal().iter().map(|z| z.norm()).collect();
    let (eigenvalues, real_vectors) = tridiagonal_eigen(h.diagonal(), &magnitudes)?;
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| gauge[i] * real_vectors[(i, j)]);
    let spectrum = SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        gauge,
    };

    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let residual = (spectrum.reconstruct() - h.to_dense()).map(|z| z.norm()).max() / scale;
    if residual > RECONSTRUCTION_TOLERANCE {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual,
        });
    }
    Ok(spectrum)
}

/// `e^{-iHt}` applied to the site block; the vacuum amplitude is unchanged.
pub fn evolve(state: &ExcitationState, spectrum: &SpectralDecomposition, t: f64) -> Result<ExcitationState> {
    spectrum.trajectory(state)?.at(t)
}

/// `|c_k|^2` for `k = 1..N`.
pub fn site_probabilities(state: &ExcitationState) -> Vec<f64> {
    state.amplitudes.iter().skip(1).map(|c| c.norm_sqr()).collect()
}

/// `|<<target| e^{-iHt} |source>>|^2`, sites 1-based.
pub fn transfer_probability(source: usize, target: usize, spectrum: &SpectralDecomposition, t: f64) -> Result<f64> {
    let n = spectrum.dim();
    for site in [source, target] {
        if site == 0 || site > n {
            return Err(Error::arg(format!("site {site} outside 1..={n}")));
        }
    }
    if !t.is_finite() {
        return Err(Error::arg(format!("time must be finite, got {t}")));
    }
    Ok(spectrum.amplitude(source, target, t).norm_sqr().min(1.0))
}

/// Uniform grid `start..=end` with `samples` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, samples: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::arg(format!("time grid must increase: {start}..{end}")));
        }
        if samples < 2 {
            return Err(Error::arg("a time grid needs at least 2 samples"));
        }
        Ok(Self { start, end, samples })
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| if i + 1 == self.samples { self.end } else { self.start + step * i as f64 })
            .collect()
    }
}

/// Evaluates `f` on every time in parallel, keeping input order.
pub fn sweep<T, F>(times: &[f64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync,
{
    times.par_iter().map(|&t| f(t)).collect()
}
