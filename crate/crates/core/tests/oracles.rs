use approx::assert_relative_eq;
use gfock::analytics::{poisson_weights, regularized_upper_tail, truncated_coherent_amplitudes};
use gfock::dynamics::{decompose, evolve, site_probabilities, ExcitationState};
use gfock::model::{build_hamiltonian, ArrayConfig};
use gfock::open_system::{integrate_master, DensityMatrix};
use gfock::propagator::PropagatorRegistry;
use nalgebra::DMatrix;
use num_complex::Complex64;

// 40-digit references for e^{-x} sum_{j<n} x^j / j!
#[allow(clippy::excessive_precision)]
const TAIL_TABLE: &[(usize, f64, f64)] = &[
    (10, 4.0, 0.99186775720306613684),
    (5, 2.5, 0.89117801891415124235),
    (20, 15.0, 0.8752187849674751773),
    (3, 0.1, 0.99984534692973532832),
    (60, 40.0, 0.99812037143135491606),
    (200, 150.0, 0.99994290311425791756),
    (10200, 1e4, 0.97670906796270111774),
    (10000, 1e4, 0.49867019166004479962),
    (4, 800.0, 3.1416862235097476178e-340),
];

#[test]
fn tail_matches_reference_table() {
    for &(n, x, expected) in TAIL_TABLE {
        let got = regularized_upper_tail(n, x).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-13);
    }
}

#[test]
fn tail_matches_incomplete_gamma() {
    for n in [1usize, 2, 3, 5, 8, 13, 30, 75] {
        for x in [0.01, 0.5, 1.0, 2.25, 4.0, 9.0, 20.0, 60.0] {
            let expected = statrs::function::gamma::gamma_ur(n as f64, x);
            let got = regularized_upper_tail(n, x).unwrap();
            assert!((got - expected).abs() <= 1e-12 * expected.max(1e-300) + 1e-300, "n={n} x={x}: {got} vs {expected}");
        }
    }
}

#[test]
fn propagators_agree_on_small_arrays() {
    let registry = PropagatorRegistry::default();
    let reference = registry.get("taylor").unwrap();
    for n in 2..=8 {
        for (j, eta, t) in [(0.05, 0.0, 84.0), (0.3, 1.2, 17.0), (0.0013, -0.4, 3.0e4)] {
            let freqs: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * (k as f64).sin()).collect();
            let h = build_hamiltonian(&ArrayConfig::new(freqs, j, eta, 0.0).unwrap());
            let expected = reference.site_propagator(&h, t).unwrap();
            for name in ["spectral", "dense"] {
                let got = registry.get(name).unwrap().site_propagator(&h, t).unwrap();
                let err = (&got - &expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-9, "{name} N={n} J={j}: {err:.2e}");
            }
        }
    }
}

#[test]
fn long_chain_reaches_poisson_limit() {
    let (n, j, t) = (60, 0.05, 40.0);
    let spec = decompose(&build_hamiltonian(&ArrayConfig::resonant(n, 1.0, j).unwrap())).unwrap();
    let out = evolve(&ExcitationState::site(n, 1).unwrap(), &spec, t).unwrap();
    let numerical = site_probabilities(&out);
    let poisson = poisson_weights((j * t).powi(2), n);
    let profile = truncated_coherent_amplitudes(j, t, n).unwrap();
    for k in 0..n {
        assert!((numerical[k] - poisson[k]).abs() < 1e-10, "site {}", k + 1);
        // interaction picture removes the common e^{-i omega t}
        let amp = out.site_amplitude(k + 1) * Complex64::from_polar(1.0, t);
        assert!((amp - profile.amplitudes[k]).norm() < 1e-10, "site {}", k + 1);
    }
}

/// With identical loss on every cavity the site block is `e^{-gamma t} U rho U^+`,
/// vacuum coherences shrink by `e^{-gamma t / 2}` and the lost weight lands on
/// the vacuum.
fn uniform_decay(rho0: &DensityMatrix, u: &DMatrix<Complex64>, gamma: f64, t: f64) -> DMatrix<Complex64> {
    let d = rho0.dim();
    let n = d - 1;
    let r = rho0.entries();
    let site = r.view((1, 1), (n, n)).into_owned();
    let row = r.view((0, 1), (1, n)).into_owned();
    let p = (-gamma * t).exp();
    let evolved_site = u * site * u.adjoint() * Complex64::new(p, 0.0);
    let evolved_row = row * u.adjoint() * Complex64::new(p.sqrt(), 0.0);
    let mut out = DMatrix::zeros(d, d);
    out.view_mut((1, 1), (n, n)).copy_from(&evolved_site);
    out.view_mut((0, 1), (1, n)).copy_from(&evolved_row);
    out.view_mut((1, 0), (n, 1)).copy_from(&evolved_row.adjoint());
    out[(0, 0)] = Complex64::new(1.0 - evolved_site.trace().re, 0.0);
    out
}

#[test]
fn master_equation_matches_uniform_decay_closed_form() {
    let cfg = ArrayConfig::switching(5, 1.0, 2, 4, 0.02).unwrap().with_phase(0.7).unwrap();
    let h = build_hamiltonian(&cfg);
    let spec = decompose(&h).unwrap();
    let psi = ExcitationState::qubit(5, 2, Complex64::new(0.6, 0.0), Complex64::new(0.0, -0.8)).unwrap();
    let rho0 = DensityMatrix::pure(&psi);
    for gamma in [0.0, 1e-4, 3e-3, 0.05] {
        for t in [1.0, 150.0, 2000.0] {
            let rho = integrate_master(&rho0, &h, gamma, t, 0.0025).unwrap();
            let expected = uniform_decay(&rho0, &spec.propagator(t), gamma, t);
            let err = (rho.entries() - &expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "gamma={gamma} t={t}: {err:.2e}");
        }
    }
}
