//! Photon loss: Lindblad evolution on `{vacuum, one photon in cavity k}`.
//!
//! With every cavity leaking at rate `gamma`,
//!
//! ```text
//! d rho / dt = -i [H, rho] + (gamma / 2) sum_k (2 a_k rho a_k^+ - a_k^+ a_k rho - rho a_k^+ a_k)
//! ```
//!
//! restricted to the vacuum plus single-excitation space reduces to
//!
//! * site-site block: `-i [H, rho]_{jk} - gamma rho_{jk}`,
//! * vacuum-site coherences: `-i [H, rho]_{0k} - (gamma / 2) rho_{0k}`,
//! * vacuum population: `+ gamma sum_k rho_{kk}`.
//!
//! Integration is classical fixed-step RK4. Because the generator is constant,
//! `n` RK4 steps are the `n`-th power of one step map, which is formed by
//! binary powering; this reaches the very long transfer times of weakly
//! coupled arrays at logarithmic cost. Density matrices are carried in real
//! Hermitian coordinates so rounding can never break Hermiticity.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::ExcitationState;
use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, HamiltonianMatrix};
use crate::protocol::TransferPlan;

pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;
/// `dt` and `dt / 2` must agree to this for a run to count as converged.
pub const HALVING_TOLERANCE: f64 = 1e-8;
/// Default RK4 step, in units of `1 / omega_1`.
pub const DEFAULT_DT: f64 = 0.0025;

/// `(N + 1) x (N + 1)` density matrix; index 0 is the vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() < 2 {
            return Err(Error::arg("density matrix must be square with dimension >= 2"));
        }
        Ok(Self { entries })
    }

    pub fn pure(state: &ExcitationState) -> Self {
        let psi = state.amplitudes();
        Self {
            entries: psi * psi.adjoint(),
        }
    }

    pub fn vacuum(n_sites: usize) -> Self {
        Self::pure(&ExcitationState::vacuum(n_sites))
    }

    /// Identity over `N + 1` levels, normalised.
    pub fn maximally_mixed(n_sites: usize) -> Self {
        let d = n_sites + 1;
        Self {
            entries: DMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.dim() - 1
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `Re rho_{ii}`.
    pub fn population(&self, index: usize) -> f64 {
        self.entries[(index, index)].re
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).map(|z| z.norm()).max()
    }

    /// Lowest eigenvalue, via the real symmetric embedding
    /// `[[Re, -Im], [Im, Re]]` which doubles every eigenvalue of `rho`.
    pub fn min_eigenvalue(&self) -> f64 {
        // the complex Hermitian solver returns NaN on some matrices with
        // entries near underflow; the real one does not
        let n = self.dim();
        let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
            let (a, b) = (i % n, j % n);
            let z = (self.entries[(a, b)] + self.entries[(b, a)].conj()) * 0.5;
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        SymmetricEigen::new(real).eigenvalues.min()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries).map(|z| z.norm()).max()
    }

    /// Trace, Hermiticity and positivity within the module tolerances.
    pub fn check_invariants(&self) -> Result<()> {
        let trace = self.trace();
        if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "trace drifted to {trace}; reduce the step size"
            )));
        }
        let defect = self.hermiticity_defect();
        if defect > HERMITICITY_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "Hermiticity defect {defect:.3e}"
            )));
        }
        let lowest = self.min_eigenvalue();
        if lowest.is_nan() || lowest < -POSITIVITY_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "negative eigenvalue {lowest:.3e}; reduce the step size"
            )));
        }
        Ok(())
    }

    fn to_coordinates(&self) -> DVector<f64> {
        hermitian_coordinates(&self.entries)
    }

    fn from_coordinates(dim: usize, coords: &DVector<f64>) -> Self {
        let mut entries = DMatrix::zeros(dim, dim);
        for (slot, basis) in HermitianBasis::new(dim).iter().enumerate() {
            match basis {
                BasisElement::Diagonal(i) => entries[(i, i)] = Complex64::new(coords[slot], 0.0),
                BasisElement::Real(i, j) => {
                    entries[(i, j)].re = coords[slot];
                    entries[(j, i)].re = coords[slot];
                }
                BasisElement::Imaginary(i, j) => {
                    entries[(i, j)].im = coords[slot];
                    entries[(j, i)].im = -coords[slot];
                }
            }
        }
        Self { entries }
    }
}

#[derive(Debug, Clone, Copy)]
enum BasisElement {
    Diagonal(usize),
    /// `E_ij + E_ji`, `i < j`.
    Real(usize, usize),
    /// `i E_ij - i E_ji`, `i < j`.
    Imaginary(usize, usize),
}

struct HermitianBasis {
    elements: Vec<BasisElement>,
}

impl HermitianBasis {
    fn new(dim: usize) -> Self {
        let mut elements: Vec<BasisElement> = (0..dim).map(BasisElement::Diagonal).collect();
        for i in 0..dim {
            for j in i + 1..dim {
                elements.push(BasisElement::Real(i, j));
                elements.push(BasisElement::Imaginary(i, j));
            }
        }
        Self { elements }
    }

    fn iter(&self) -> impl Iterator<Item = BasisElement> + '_ {
        self.elements.iter().copied()
    }

    fn matrix(element: BasisElement, dim: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dim, dim);
        match element {
            BasisElement::Diagonal(i) => m[(i, i)] = Complex64::new(1.0, 0.0),
            BasisElement::Real(i, j) => {
                m[(i, j)] = Complex64::new(1.0, 0.0);
                m[(j, i)] = Complex64::new(1.0, 0.0);
            }
            BasisElement::Imaginary(i, j) => {
                m[(i, j)] = Complex64::new(0.0, 1.0);
                m[(j, i)] = Complex64::new(0.0, -1.0);
            }
        }
        m
    }
}

/// Coordinates of a Hermitian matrix: diagonal, then `(Re, Im)` of each upper
/// element.
fn hermitian_coordinates(m: &DMatrix<Complex64>) -> DVector<f64> {
    let dim = m.nrows();
    let basis = HermitianBasis::new(dim);
    DVector::from_iterator(
        dim * dim,
        basis.iter().map(|b| match b {
            BasisElement::Diagonal(i) => m[(i, i)].re,
            BasisElement::Real(i, j) => m[(i, j)].re,
            BasisElement::Imaginary(i, j) => m[(i, j)].im,
        }),
    )
}

/// Site Hamiltonian embedded next to a zero-energy vacuum.
fn embedded_hamiltonian(h: &HamiltonianMatrix) -> DMatrix<Complex64> {
    let n = h.dim();
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == 0 || j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            h.get(i - 1, j - 1)
        }
    })
}

fn check_rate(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("decay rate must be non-negative, got {gamma}")))
    }
}

/// `d rho / dt` for uniform loss `gamma` on every cavity.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &HamiltonianMatrix, gamma: f64) -> Result<DMatrix<Complex64>> {
    check_rate(gamma)?;
    if rho.dim() != h.dim() + 1 {
        return Err(Error::arg(format!(
            "density matrix is {0}x{0}, Hamiltonian has {1} sites",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(rhs_dense(&rho.entries, &embedded_hamiltonian(h), gamma))
}

fn rhs_dense(rho: &DMatrix<Complex64>, full_h: &DMatrix<Complex64>, gamma: f64) -> DMatrix<Complex64> {
    let minus_i = Complex64::new(0.0, -1.0);
    let mut out = (full_h * rho - rho * full_h) * minus_i;
    let d = rho.nrows();
    let mut lost = 0.0;
    for j in 1..d {
        lost += rho[(j, j)].re;
        for k in 1..d {
            out[(j, k)] -= rho[(j, k)] * gamma;
        }
        out[(0, j)] -= rho[(0, j)] * (gamma / 2.0);
        out[(j, 0)] -= rho[(j, 0)] * (gamma / 2.0);
    }
    out[(0, 0)] += Complex64::new(gamma * lost, 0.0);
    out
}

/// One classical RK4 step, stage by stage.
pub fn rk4_step(rho: &DensityMatrix, h: &HamiltonianMatrix, gamma: f64, dt: f64) -> Result<DensityMatrix> {
    let k1 = lindblad_rhs(rho, h, gamma)?;
    let full_h = embedded_hamiltonian(h);
    let half = Complex64::new(dt / 2.0, 0.0);
    let whole = Complex64::new(dt, 0.0);
    let k2 = rhs_dense(&(&rho.entries + &k1 * half), &full_h, gamma);
    let k3 = rhs_dense(&(&rho.entries + &k2 * half), &full_h, gamma);
    let k4 = rhs_dense(&(&rho.entries + &k3 * whole), &full_h, gamma);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    Ok(DensityMatrix {
        entries: &rho.entries + (k1 + &k2 * two + &k3 * two + k4) * sixth,
    })
}

/// Fixed-step RK4 flow for a constant Lindblad generator.
///
/// The Hamiltonian is integrated in the frame rotating at `frame_offset` on the
/// site block; coherences with the vacuum are rotated back on output. The
/// generator is invariant under that rotation, so the frame is exact.
#[derive(Debug, Clone)]
pub struct MasterIntegrator {
    dim: usize,
    dt: f64,
    frame_offset: f64,
    generator: DMatrix<f64>,
    /// One RK4 step minus the identity.
    step: DMatrix<f64>,
}

impl MasterIntegrator {
    pub fn new(h: &HamiltonianMatrix, gamma: f64, dt: f64, frame_offset: f64) -> Result<Self> {
        check_rate(gamma)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::arg(format!("step must be positive, got {dt}")));
        }
        if !frame_offset.is_finite() {
            return Err(Error::arg("frame offset must be finite"));
        }
        let dim = h.dim() + 1;
        let full_h = embedded_hamiltonian(&h.shifted(frame_offset));
        let basis = HermitianBasis::new(dim);
        let mut generator = DMatrix::zeros(dim * dim, dim * dim);
        for (col, element) in basis.iter().enumerate() {
            let image = rhs_dense(&HermitianBasis::matrix(element, dim), &full_h, gamma);
            generator.set_column(col, &hermitian_coordinates(&image));
        }
        let step = rk4_increment(&generator, dt);
        Ok(Self {
            dim,
            dt,
            frame_offset,
            generator,
            step,
        })
    }

    /// Uses the excitation-weighted site energy of `rho0` as frame offset.
    pub fn for_state(h: &HamiltonianMatrix, gamma: f64, dt: f64, rho0: &DensityMatrix) -> Result<Self> {
        Self::new(h, gamma, dt, excitation_energy(h, rho0))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame_offset(&self) -> f64 {
        self.frame_offset
    }

    /// The real generator acting on Hermitian coordinates.
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// Linear map taking `rho(0)` to `rho(t)` after `floor(t / dt)` full steps
    /// and one final partial step.
    pub fn flow(&self, t: f64) -> Result<Flow> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::arg(format!("time must be finite and non-negative, got {t}")));
        }
        let ratio = t / self.dt;
        let mut steps = ratio.floor();
        // absorb rounding of t = n dt
        if ratio - steps > 1.0 - 1e-9 {
            steps += 1.0;
        }
        let remainder = (t - steps * self.dt).max(0.0);
        let mut increment = power_increment(&self.step, steps as u64);
        if remainder > 1e-12 * self.dt {
            let last = rk4_increment(&self.generator, remainder);
            increment = compose_increments(&increment, &last);
        }
        Ok(Flow {
            dim: self.dim,
            increment,
            frame_phase: self.frame_offset * t,
        })
    }

    /// `rho(t)`, checked against the density-matrix invariants.
    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let rho = self.flow(t)?.apply(rho0)?;
        rho.check_invariants()?;
        Ok(rho)
    }
}

/// `rho(0) -> rho(t)` for a fixed time.
#[derive(Debug, Clone)]
pub struct Flow {
    dim: usize,
    increment: DMatrix<f64>,
    frame_phase: f64,
}

impl Flow {
    pub fn apply(&self, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        if rho0.dim() != self.dim {
            return Err(Error::arg("density matrix size does not match the integrator"));
        }
        let x = rho0.to_coordinates();
        let y = &x + &self.increment * &x;
        let mut rho = DensityMatrix::from_coordinates(self.dim, &y);
        let phase = Complex64::from_polar(1.0, self.frame_phase);
        for k in 1..self.dim {
            rho.entries[(0, k)] *= phase;
            rho.entries[(k, 0)] *= phase.conj();
        }
        Ok(rho)
    }
}

/// `sum_k h^k G^k / k!` for `k = 1..=4`, i.e. one RK4 step minus the identity.
fn rk4_increment(generator: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = generator.nrows();
    let hg = generator * h;
    let id = DMatrix::<f64>::identity(n, n);
    let inner = &id + &hg * 0.25;
    let inner = &id + (&hg * inner) * (1.0 / 3.0);
    let inner = &id + (&hg * inner) * 0.5;
    hg * inner
}

/// `(I + a)(I + b) - I`.
fn compose_increments(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a + b + a * b
}

/// `(I + x)^n - I` by binary powering, keeping the identity separate so small
/// increments keep their relative precision.
fn power_increment(x: &DMatrix<f64>, mut n: u64) -> DMatrix<f64> {
    let dim = x.nrows();
    let mut result = DMatrix::zeros(dim, dim);
    let mut base = x.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = compose_increments(&result, &base);
        }
        n >>= 1;
        if n > 0 {
            base = &base * 2.0 + &base * &base;
        }
    }
    result
}

/// `Re Tr(H rho_sites) / Tr(rho_sites)`, zero for the vacuum.
fn excitation_energy(h: &HamiltonianMatrix, rho: &DensityMatrix) -> f64 {
    let n = h.dim();
    let mut weight = 0.0;
    let mut energy = 0.0;
    for i in 0..n.min(rho.n_sites()) {
        weight += rho.entries[(i + 1, i + 1)].re;
        for j in 0..n.min(rho.n_sites()) {
            energy += (h.get(i, j) * rho.entries[(j + 1, i + 1)]).re;
        }
    }
    if weight > 1e-12 {
        energy / weight
    } else {
        0.0
    }
}

/// Integrates the master equation to `t_end` with fixed RK4 step `dt`.
pub fn integrate_master(rho0: &DensityMatrix, h: &HamiltonianMatrix, gamma: f64, t_end: f64, dt: f64) -> Result<DensityMatrix> {
    MasterIntegrator::for_state(h, gamma, dt, rho0)?.evolve(rho0, t_end)
}

/// Result of a run repeated at half the step.
#[derive(Debug, Clone)]
pub struct MasterRun {
    pub state: DensityMatrix,
    /// `max |rho_dt - rho_{dt/2}|`.
    pub halving_deviation: f64,
    pub converged: bool,
}

/// [`integrate_master`] plus the step-halving comparison.
pub fn integrate_master_checked(
    rho0: &DensityMatrix,
    h: &HamiltonianMatrix,
    gamma: f64,
    t_end: f64,
    dt: f64,
) -> Result<MasterRun> {
    let state = integrate_master(rho0, h, gamma, t_end, dt)?;
    let fine = integrate_master(rho0, h, gamma, t_end, dt / 2.0)?;
    let halving_deviation = state.distance(&fine);
    Ok(MasterRun {
        state,
        halving_deviation,
        converged: halving_deviation <= HALVING_TOLERANCE,
    })
}

/// `rho(t)` at each requested time, every sample checked.
pub fn integrate_master_samples(
    rho0: &DensityMatrix,
    h: &HamiltonianMatrix,
    gamma: f64,
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    let integrator = MasterIntegrator::for_state(h, gamma, dt, rho0)?;
    times.par_iter().map(|&t| integrator.evolve(rho0, t)).collect()
}

/// `<Psi|rho|Psi>`, the Uhlmann fidelity for a pure target.
pub fn state_fidelity(rho: &DensityMatrix, target: &ExcitationState) -> f64 {
    let psi = target.amplitudes();
    (psi.adjoint() * &rho.entries * psi)[(0, 0)].re
}

/// `[Tr sqrt(sqrt(sigma) rho sqrt(sigma))]^2` for arbitrary `sigma`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let root_sigma = hermitian_sqrt(&sigma.entries);
    let inner = &root_sigma * &rho.entries * &root_sigma;
    let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(inner);
    eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum::<f64>().powi(2)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let n = m.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt());
    scaled * v.adjoint()
}

/// One point of an averaged fidelity-versus-loss curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityPoint {
    #[serde(rename = "gamma_over_J")]
    pub gamma_over_j: f64,
    pub mean_fidelity: f64,
    pub stderr: f64,
    pub samples: usize,
    pub t_star: f64,
    /// Largest fidelity change when the step is halved.
    pub halving_deviation: f64,
}

/// Ensemble-averaged fidelity at the plan's transfer time for each loss rate
/// `gamma = (gamma/J) * J`.
///
/// The same ensemble is used at every loss rate.
pub fn average_transfer_fidelity(
    plan: &TransferPlan,
    gamma_over_j: &[f64],
    samples: usize,
    seed: u64,
    ensemble: &dyn StateEnsemble,
    dt: f64,
) -> Result<Vec<FidelityPoint>> {
    if samples == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    if let Some(g) = gamma_over_j.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::arg(format!("gamma/J must be non-negative, got {g}")));
    }
    let states = ensemble.draw(samples, seed);
    let h = build_hamiltonian(&plan.config()?);
    let offset = plan.frequencies[plan.source - 1];
    let t_star = plan.transfer_time;

    let pairs: Vec<(DensityMatrix, ExcitationState)> = states
        .iter()
        .map(|&(alpha, beta)| {
            Ok((
                DensityMatrix::pure(&ExcitationState::qubit(plan.n_sites, plan.source, alpha, beta)?),
                ExcitationState::qubit(plan.n_sites, plan.target, alpha, beta)?,
            ))
        })
        .collect::<Result<_>>()?;

    gamma_over_j
        .par_iter()
        .map(|&ratio| {
            let gamma = ratio * plan.coupling_scale;
            let coarse = MasterIntegrator::new(&h, gamma, dt, offset)?.flow(t_star)?;
            let fine = MasterIntegrator::new(&h, gamma, dt / 2.0, offset)?.flow(t_star)?;
            let mut fidelities = Vec::with_capacity(samples);
            let mut halving_deviation: f64 = 0.0;
            for (rho0, target) in &pairs {
                let rho = coarse.apply(rho0)?;
                rho.check_invariants()?;
                let f = state_fidelity(&rho, target);
                let f_fine = state_fidelity(&fine.apply(rho0)?, target);
                halving_deviation = halving_deviation.max((f - f_fine).abs());
                fidelities.push(f);
            }
            let n = fidelities.len() as f64;
            let mean = fidelities.iter().sum::<f64>() / n;
            let stderr = if fidelities.len() > 1 {
                let var = fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            Ok(FidelityPoint {
                gamma_over_j: ratio,
                mean_fidelity: mean,
                stderr,
                samples,
                t_star,
                halving_deviation,
            })
        })
        .collect()
}

/// `n` log-spaced points from `start` to `end` inclusive.
pub fn log_grid(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && end > start && start.is_finite() && end.is_finite()) || n < 2 {
        return Err(Error::arg(format!("bad log grid {start}:{end}:{n}")));
    }
    let (a, b) = (start.ln(), end.ln());
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                end
            } else if i == 0 {
                start
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{decompose, evolve};
    use crate::model::ArrayConfig;
    use approx::assert_abs_diff_eq;

    fn random_density(n_sites: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = n_sites + 1;
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityMatrix::from_matrix(m / tr).unwrap()
    }

    fn small_h() -> HamiltonianMatrix {
        let cfg = ArrayConfig::switching(4, 1.0, 1, 3, 0.05).unwrap().with_phase(0.3).unwrap();
        build_hamiltonian(&cfg)
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let h = small_h();
        for seed in 0..10 {
            let rho = random_density(4, seed);
            let d = lindblad_rhs(&rho, &h, 0.07).unwrap();
            assert!(d.trace().norm() < 1e-14);
            assert!((&d - d.adjoint()).map(|z| z.norm()).max() < 1e-14);
        }
    }

    #[test]
    fn rhs_matches_lindblad_sum() {
        // brute force: sum over ladder operators on the full truncated space
        let h = small_h();
        let gamma = 0.2;
        let rho = random_density(4, 3);
        let d = 5;
        let full_h = embedded_hamiltonian(&h);
        let mut expected = (&full_h * &rho.entries - &rho.entries * &full_h) * Complex64::new(0.0, -1.0);
        for k in 1..d {
            let mut a = DMatrix::<Complex64>::zeros(d, d);
            a[(0, k)] = Complex64::new(1.0, 0.0);
            let ad = a.adjoint();
            let l = (&a * &rho.entries * &ad) * Complex64::new(2.0, 0.0) - &ad * &a * &rho.entries - &rho.entries * &ad * &a;
            expected += l * Complex64::new(gamma / 2.0, 0.0);
        }
        let got = lindblad_rhs(&rho, &h, gamma).unwrap();
        assert!((got - expected).map(|z| z.norm()).max() < 1e-14);
    }

    #[test]
    fn rhs_rejects_negative_rate() {
        let h = small_h();
        assert!(lindblad_rhs(&DensityMatrix::vacuum(4), &h, -1.0).is_err());
        assert!(lindblad_rhs(&DensityMatrix::vacuum(3), &h, 1.0).is_err());
    }

    #[test]
    fn coordinates_round_trip() {
        let rho = random_density(3, 1);
        let back = DensityMatrix::from_coordinates(4, &rho.to_coordinates());
        assert!(back.distance(&rho) < 1e-15);
    }

    #[test]
    fn powered_map_equals_stepping() {
        let h = small_h();
        let rho0 = random_density(4, 5);
        let (gamma, dt, n) = (0.03, 0.1, 37);
        let mut stepped = rho0.clone();
        for _ in 0..n {
            stepped = rk4_step(&stepped, &h, gamma, dt).unwrap();
        }
        // zero frame offset so both routes integrate the same equation
        let powered = MasterIntegrator::new(&h, gamma, dt, 0.0).unwrap().flow(n as f64 * dt).unwrap().apply(&rho0).unwrap();
        assert!(powered.distance(&stepped) < 1e-13, "{}", powered.distance(&stepped));
    }

    #[test]
    fn frame_choice_only_changes_truncation_error() {
        let h = small_h();
        let rho0 = random_density(4, 9);
        let a = MasterIntegrator::new(&h, 0.02, 0.01, 0.0).unwrap().evolve(&rho0, 20.0).unwrap();
        let b = MasterIntegrator::new(&h, 0.02, 0.01, 1.3).unwrap().evolve(&rho0, 20.0).unwrap();
        assert!(a.distance(&b) < 1e-7, "{}", a.distance(&b));
    }

    #[test]
    fn single_mode_decay() {
        let h = HamiltonianMatrix::from_tridiagonal(vec![1.0], vec![]).unwrap();
        let rho0 = DensityMatrix::pure(&ExcitationState::site(1, 1).unwrap());
        let gamma = 0.3;
        for t in [0.5, 2.0, 7.25] {
            let rho = integrate_master(&rho0, &h, gamma, t, 0.01).unwrap();
            assert_abs_diff_eq!(rho.population(1), (-gamma * t).exp(), epsilon = 1e-8);
            assert_abs_diff_eq!(rho.population(0), 1.0 - (-gamma * t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn closed_system_limit() {
        let cfg = ArrayConfig::switching(5, 1.0, 2, 4, 0.02).unwrap();
        let h = build_hamiltonian(&cfg);
        let psi = ExcitationState::qubit(5, 2, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        let spec = decompose(&h).unwrap();
        let rho0 = DensityMatrix::pure(&psi);
        for t in [10.0, 250.0, 1000.0] {
            let rho = integrate_master(&rho0, &h, 0.0, t, 0.02).unwrap();
            let exact = evolve(&psi, &spec, t).unwrap();
            assert!(state_fidelity(&rho, &exact) >= 1.0 - 1e-8);
            assert!(rho.distance(&DensityMatrix::pure(&exact)) < 1e-8);
        }
    }

    #[test]
    fn fidelity_special_cases() {
        let psi = ExcitationState::qubit(4, 2, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        assert_abs_diff_eq!(state_fidelity(&DensityMatrix::pure(&psi), &psi), 1.0, epsilon = 1e-15);
        let site = ExcitationState::site(4, 3).unwrap();
        assert_eq!(state_fidelity(&DensityMatrix::vacuum(4), &site), 0.0);
        assert_abs_diff_eq!(state_fidelity(&DensityMatrix::maximally_mixed(4), &psi), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn uhlmann_reduces_to_overlap_for_pure_target() {
        let psi = ExcitationState::qubit(3, 1, Complex64::new(0.8, 0.0), Complex64::new(0.36, 0.48)).unwrap();
        let sigma = DensityMatrix::pure(&psi);
        for seed in 0..5 {
            let rho = random_density(3, seed);
            assert_abs_diff_eq!(uhlmann_fidelity(&rho, &sigma), state_fidelity(&rho, &psi), epsilon = 1e-8);
        }
    }

    #[test]
    fn invariant_violation_is_reported() {
        let h = small_h();
        let rho0 = random_density(4, 2);
        // far beyond the RK4 stability limit
        let err = integrate_master(&rho0, &h, 0.0, 500.0, 5.0).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)), "{err}");
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1.0, 25).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[24], 1.0);
        assert_abs_diff_eq!(g[12], (1e-3f64).sqrt(), epsilon = 1e-15);
        assert!(log_grid(0.0, 1.0, 5).is_err());
    }
}
