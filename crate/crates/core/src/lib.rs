//! Single-excitation dynamics of Glauber-Fock coupled-cavity arrays.
//!
//! A chain of `N` cavities with hopping `J_k = J sqrt(k)` conserves the photon
//! number, so one photon (plus the vacuum) lives in an `(N + 1)`-dimensional
//! space. The crate covers:
//!
//! * [`model`]: array configuration, Hamiltonian and ladder matrices, the
//!   parabolic switching profile;
//! * [`dynamics`]: exact spectral propagation and site observables;
//! * [`propagator`]: interchangeable closed-system propagators looked up by name;
//! * [`analytics`]: the truncated-coherent-state closed form;
//! * [`protocol`]: perfect-transfer plans (doublet, transfer time, coupling phase);
//! * [`open_system`]: Lindblad photon loss, fidelities and ensemble averages.
//!
//! Basis ordering is fixed everywhere: index 0 is the vacuum, index `k` in
//! `1..=N` is one photon in cavity `k`.

pub mod analytics;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod model;
pub mod open_system;
pub mod propagator;
pub mod protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Wraps a phase into `[-pi, pi)`.
pub fn wrap_phase(phase: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let wrapped = (phase + PI).rem_euclid(TAU) - PI;
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}
