//! Array configuration and the single-excitation Hamiltonian.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wrap_phase;

/// Physical description of a cavity chain.
///
/// Frequencies are stored explicitly, in units of the reference frequency
/// `omega_1`, so resonant, parabolic and user-supplied profiles share one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayConfig {
    n_sites: usize,
    frequencies: Vec<f64>,
    coupling_scale: f64,
    coupling_phase: f64,
    decay_rate: f64,
}

impl ArrayConfig {
    /// The coupling phase is wrapped into `[-pi, pi)`.
    pub fn new(
        frequencies: Vec<f64>,
        coupling_scale: f64,
        coupling_phase: f64,
        decay_rate: f64,
    ) -> Result<Self> {
        let n_sites = frequencies.len();
        if n_sites < 2 {
            return Err(Error::config(format!(
                "an array needs at least 2 cavities, got {n_sites}"
            )));
        }
        if let Some(k) = frequencies.iter().position(|w| !w.is_finite()) {
            return Err(Error::config(format!(
                "frequency of cavity {} is not finite",
                k + 1
            )));
        }
        if !(coupling_scale.is_finite() && coupling_scale > 0.0) {
            return Err(Error::config(format!(
                "coupling scale must be positive, got {coupling_scale}"
            )));
        }
        if !coupling_phase.is_finite() {
            return Err(Error::config("coupling phase must be finite"));
        }
        if !(decay_rate.is_finite() && decay_rate >= 0.0) {
            return Err(Error::config(format!(
                "decay rate must be non-negative, got {decay_rate}"
            )));
        }
        Ok(Self {
            n_sites,
            frequencies,
            coupling_scale,
            coupling_phase: wrap_phase(coupling_phase),
            decay_rate,
        })
    }

    /// All cavities at `frequency`, real couplings, no loss.
    pub fn resonant(n_sites: usize, frequency: f64, coupling_scale: f64) -> Result<Self> {
        Self::new(vec![frequency; n_sites], coupling_scale, 0.0, 0.0)
    }

    /// Parabolic profile making cavities `m` and `n` degenerate.
    pub fn switching(
        n_sites: usize,
        base: f64,
        m: usize,
        n: usize,
        coupling_scale: f64,
    ) -> Result<Self> {
        Self::new(
            switching_frequencies(base, m, n, n_sites)?,
            coupling_scale,
            0.0,
            0.0,
        )
    }

    pub fn with_phase(mut self, coupling_phase: f64) -> Result<Self> {
        if !coupling_phase.is_finite() {
            return Err(Error::config("coupling phase must be finite"));
        }
        self.coupling_phase = wrap_phase(coupling_phase);
        Ok(self)
    }

    pub fn with_decay(mut self, decay_rate: f64) -> Result<Self> {
        if !(decay_rate.is_finite() && decay_rate >= 0.0) {
            return Err(Error::config(format!(
                "decay rate must be non-negative, got {decay_rate}"
            )));
        }
        self.decay_rate = decay_rate;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn coupling_scale(&self) -> f64 {
        self.coupling_scale
    }

    pub fn coupling_phase(&self) -> f64 {
        self.coupling_phase
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// Common frequency if every cavity is resonant (to `1e-12` relative).
    pub fn resonant_frequency(&self) -> Option<f64> {
        let w0 = self.frequencies[0];
        let scale = w0.abs().max(1.0);
        self.frequencies
            .iter()
            .all(|w| (w - w0).abs() <= 1e-12 * scale)
            .then_some(w0)
    }
}

/// Bond strengths `J sqrt(k)` for `k = 1..N-1`.
pub fn build_couplings(scale: f64, n_sites: usize) -> Result<Vec<f64>> {
    if n_sites < 2 {
        return Err(Error::arg(format!(
            "an array needs at least 2 cavities, got {n_sites}"
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::arg(format!("coupling scale must be positive, got {scale}")));
    }
    Ok((1..n_sites).map(|k| scale * (k as f64).sqrt()).collect())
}

/// Inverted-parabola profile `omega_k = C + (k-1) - (k-1)^2 / (m+n-2)`.
///
/// Sites are 1-based; `m` and `n` may come in either order.
pub fn switching_frequencies(base: f64, m: usize, n: usize, n_sites: usize) -> Result<Vec<f64>> {
    if n_sites < 2 {
        return Err(Error::arg(format!(
            "an array needs at least 2 cavities, got {n_sites}"
        )));
    }
    if m == n {
        return Err(Error::arg(format!("source and target are both site {m}")));
    }
    for site in [m, n] {
        if site == 0 || site > n_sites {
            return Err(Error::arg(format!(
                "site {site} outside 1..={n_sites}"
            )));
        }
    }
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::arg(format!("base frequency must be positive, got {base}")));
    }
    let width = (m + n - 2) as f64;
    Ok((0..n_sites)
        .map(|j| {
            let j = j as f64;
            base + (j - j * j / width)
        })
        .collect())
}

/// Hermitian tridiagonal Hamiltonian on the `N` one-photon site states.
///
/// Vacuum is not part of this block; it sits at energy zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    diagonal: Vec<f64>,
    off_diagonal: Vec<Complex64>,
}

impl HamiltonianMatrix {
    /// `off_diagonal[k]` is the `(k, k+1)` element (0-based); the lower
    /// diagonal holds the conjugates.
    pub fn from_tridiagonal(diagonal: Vec<f64>, off_diagonal: Vec<Complex64>) -> Result<Self> {
        if diagonal.is_empty() || off_diagonal.len() + 1 != diagonal.len() {
            return Err(Error::arg(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diagonal.len(),
                off_diagonal.len()
            )));
        }
        if diagonal.iter().any(|d| !d.is_finite())
            || off_diagonal.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::arg("non-finite Hamiltonian element"));
        }
        Ok(Self {
            diagonal,
            off_diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[Complex64] {
        &self.off_diagonal
    }

    /// Element `(i, j)`, 0-based over sites.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match (i, j) {
            _ if i == j => Complex64::new(self.diagonal[i], 0.0),
            _ if j == i + 1 => self.off_diagonal[i],
            _ if i == j + 1 => self.off_diagonal[j].conj(),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Largest element modulus.
    pub fn max_abs(&self) -> f64 {
        self.diagonal
            .iter()
            .map(|d| d.abs())
            .chain(self.off_diagonal.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Same matrix with a constant removed from the diagonal.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            diagonal: self.diagonal.iter().map(|d| d - offset).collect(),
            off_diagonal: self.off_diagonal.clone(),
        }
    }

    /// `H |psi>` for a site-block vector.
    pub fn apply(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.dim();
        DVector::from_fn(n, |i, _| {
            let mut acc = psi[i] * self.diagonal[i];
            if i + 1 < n {
                acc += self.off_diagonal[i] * psi[i + 1];
            }
            if i > 0 {
                acc += self.off_diagonal[i - 1].conj() * psi[i - 1];
            }
            acc
        })
    }
}

/// Diagonal `omega_k`, super-diagonal `J sqrt(k) e^{i eta}`.
pub fn build_hamiltonian(config: &ArrayConfig) -> HamiltonianMatrix {
    let phase = Complex64::from_polar(1.0, config.coupling_phase());
    let off = (1..config.n_sites())
        .map(|k| phase * (config.coupling_scale() * (k as f64).sqrt()))
        .collect();
    HamiltonianMatrix {
        diagonal: config.frequencies().to_vec(),
        off_diagonal: off,
    }
}

/// The Glauber-Fock lowering matrix `A`, strictly upper bidiagonal with
/// `(k, k+1)` entry `sqrt(k)`.
///
/// Reading site `k` as Fock level `k - 1`, `A` acts as `a |n> = sqrt(n) |n-1>`
/// and annihilates the first site.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderMatrix {
    entries: DMatrix<f64>,
}

impl LadderMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn adjoint(&self) -> DMatrix<f64> {
        self.entries.transpose()
    }

    /// `[A, A^dagger]`; equals the identity except `1 - N` in the last slot.
    pub fn commutator(&self) -> DMatrix<f64> {
        let a = &self.entries;
        let ad = a.transpose();
        a * &ad - &ad * a
    }
}

pub fn build_ladder(n_sites: usize) -> Result<LadderMatrix> {
    if n_sites < 2 {
        return Err(Error::arg(format!(
            "an array needs at least 2 cavities, got {n_sites}"
        )));
    }
    let mut entries = DMatrix::zeros(n_sites, n_sites);
    for k in 1..n_sites {
        entries[(k - 1, k)] = (k as f64).sqrt();
    }
    Ok(LadderMatrix { entries })
}

/// `diag(e^{i k eta})` maps `H(eta)` to `H(0)` by conjugation.
pub fn gauge_phases(n_sites: usize, coupling_phase: f64) -> Vec<Complex64> {
    (0..n_sites)
        .map(|k| Complex64::from_polar(1.0, k as f64 * coupling_phase))
        .collect()
}

/// On-disk array description.
///
/// ```json
/// {"n_sites": 6, "frequencies": {"preset": "switching", "C": 1.0, "m": 1, "n": 5},
///  "J": 0.0013, "eta": 0.0, "gamma": 0.0}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n_sites: usize,
    pub frequencies: FrequencySpec,
    #[serde(rename = "J")]
    pub coupling_scale: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencySpec {
    Explicit(Vec<f64>),
    Preset(FrequencyPreset),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyPreset {
    pub preset: PresetKind,
    #[serde(rename = "C", default = "default_base")]
    pub base: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

fn default_base() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    Resonant,
    Switching,
}

impl ConfigFile {
    pub fn to_config(&self) -> Result<ArrayConfig> {
        let frequencies = match &self.frequencies {
            FrequencySpec::Explicit(w) => {
                if w.len() != self.n_sites {
                    return Err(Error::config(format!(
                        "n_sites is {} but {} frequencies were given",
                        self.n_sites,
                        w.len()
                    )));
                }
                w.clone()
            }
            FrequencySpec::Preset(p) => match p.preset {
                PresetKind::Resonant => {
                    if p.m.is_some() || p.n.is_some() {
                        return Err(Error::config("resonant preset takes no m/n"));
                    }
                    if !(p.base.is_finite() && p.base > 0.0) {
                        return Err(Error::config("C must be positive"));
                    }
                    vec![p.base; self.n_sites]
                }
                PresetKind::Switching => {
                    let (Some(m), Some(n)) = (p.m, p.n) else {
                        return Err(Error::config("switching preset needs m and n"));
                    };
                    switching_frequencies(p.base, m, n, self.n_sites)
                        .map_err(|e| Error::config(e.to_string()))?
                }
            },
        };
        ArrayConfig::new(frequencies, self.coupling_scale, self.eta, self.gamma)
    }

    /// Transfer endpoints named by a switching preset.
    pub fn transfer_pair(&self) -> Option<(usize, usize)> {
        match &self.frequencies {
            FrequencySpec::Preset(FrequencyPreset {
                preset: PresetKind::Switching,
                m: Some(m),
                n: Some(n),
                ..
            }) => Some((*m, *n)),
            _ => None,
        }
    }

    pub fn base_frequency(&self) -> Option<f64> {
        match &self.frequencies {
            FrequencySpec::Preset(p) => Some(p.base),
            FrequencySpec::Explicit(w) => w.first().copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    #[test]
    fn couplings_follow_square_root_law() {
        let c = build_couplings(1.0, 4).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c[2], 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(build_couplings(0.05, 2).unwrap(), vec![0.05]);

        let weak = build_couplings(0.0013, 6).unwrap();
        assert_eq!(weak.len(), 5);
        for (k, j) in weak.iter().enumerate() {
            assert_abs_diff_eq!(*j, 0.0013 * ((k + 1) as f64).sqrt(), epsilon = 1e-18);
        }
        assert!(weak.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn couplings_reject_degenerate_input() {
        assert!(build_couplings(1.0, 1).is_err());
        assert!(build_couplings(0.0, 4).is_err());
        assert!(build_couplings(-1.0, 4).is_err());
    }

    #[test]
    fn two_site_hamiltonian() {
        let cfg = ArrayConfig::resonant(2, 1.0, 0.05).unwrap();
        let h = build_hamiltonian(&cfg).to_dense();
        assert_eq!(h[(0, 0)].re, 1.0);
        assert_eq!(h[(1, 1)].re, 1.0);
        assert_eq!(h[(0, 1)], Complex64::new(0.05, 0.0));
        assert_eq!(h[(1, 0)], Complex64::new(0.05, 0.0));
    }

    #[test]
    fn phase_sits_on_super_diagonal() {
        let cfg = ArrayConfig::resonant(3, 1.0, 1.0)
            .unwrap()
            .with_phase(FRAC_PI_2)
            .unwrap();
        let h = build_hamiltonian(&cfg);
        assert_abs_diff_eq!(h.get(0, 1).im, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(1, 2).im, SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(0, 1).re, 0.0, epsilon = 1e-15);
        assert_eq!(h.get(1, 0), h.get(0, 1).conj());
        assert_eq!(h.get(2, 1), h.get(1, 2).conj());
        assert_eq!(h.get(0, 2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ladder_action_and_commutator() {
        assert_eq!(
            build_ladder(2).unwrap().entries().clone(),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
        );
        let a = build_ladder(3).unwrap();
        assert_eq!(a.entries()[(0, 1)], 1.0);
        assert_eq!(a.entries()[(1, 2)], SQRT_2);
        assert_eq!(a.entries().iter().filter(|x| **x != 0.0).count(), 2);

        for n in 2..=12 {
            let a = build_ladder(n).unwrap();
            // A |k>> = sqrt(k-1) |k-1>> with 1-based k; column k-1 holds the image.
            for k in 0..n {
                let col = a.entries().column(k);
                for i in 0..n {
                    let want = if k >= 1 && i == k - 1 { (k as f64).sqrt() } else { 0.0 };
                    assert_eq!(col[i], want);
                }
            }
            let c = a.commutator();
            for i in 0..n {
                let want = if i + 1 == n { 1.0 - n as f64 } else { 1.0 };
                assert_abs_diff_eq!(c[(i, i)], want, epsilon = 1e-12);
                for j in 0..n {
                    if i != j {
                        assert_eq!(c[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn ladder_reconstructs_resonant_hamiltonian() {
        for n in 2..=12 {
            let (w, j) = (0.7, 0.3);
            let a = build_ladder(n).unwrap();
            let expected = (a.entries() + a.adjoint()) * j + DMatrix::identity(n, n) * w;
            let h = build_hamiltonian(&ArrayConfig::resonant(n, w, j).unwrap()).to_dense();
            for r in 0..n {
                for c in 0..n {
                    assert_abs_diff_eq!(h[(r, c)].re, expected[(r, c)], epsilon = 1e-15);
                    assert_eq!(h[(r, c)].im, 0.0);
                }
            }
        }
    }

    #[test]
    fn switching_profile_values() {
        let w = switching_frequencies(1.0, 3, 7, 10).unwrap();
        assert_abs_diff_eq!(w[2], 2.5, epsilon = 1e-15);
        assert_eq!(w[2], w[6]);

        let c = 3.0;
        let w = switching_frequencies(c, 1, 5, 6).unwrap();
        assert_eq!(w[0], c);
        assert_eq!(w[4], c);

        let w = switching_frequencies(c, 2, 4, 6).unwrap();
        assert_abs_diff_eq!(w[1], c + 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(w[3], c + 0.75, epsilon = 1e-15);

        // order of endpoints does not matter
        assert_eq!(
            switching_frequencies(c, 5, 1, 6).unwrap(),
            switching_frequencies(c, 1, 5, 6).unwrap()
        );
    }

    #[test]
    fn switching_profile_rejects_bad_pairs() {
        assert!(switching_frequencies(1.0, 3, 3, 6).is_err());
        assert!(switching_frequencies(1.0, 1, 1, 6).is_err());
        assert!(switching_frequencies(1.0, 0, 3, 6).is_err());
        assert!(switching_frequencies(1.0, 2, 7, 6).is_err());
        assert!(switching_frequencies(0.0, 1, 3, 6).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ArrayConfig::new(vec![1.0], 0.1, 0.0, 0.0).is_err());
        assert!(ArrayConfig::new(vec![1.0, 1.0], 0.0, 0.0, 0.0).is_err());
        assert!(ArrayConfig::new(vec![1.0, 1.0], 0.1, 0.0, -0.1).is_err());
        assert!(ArrayConfig::new(vec![1.0, f64::NAN], 0.1, 0.0, 0.0).is_err());
        let cfg = ArrayConfig::new(vec![1.0, 1.0], 0.1, 4.0, 0.0).unwrap();
        assert_abs_diff_eq!(cfg.coupling_phase(), 4.0 - std::f64::consts::TAU, epsilon = 1e-15);
        assert_eq!(cfg.resonant_frequency(), Some(1.0));
        let sw = ArrayConfig::switching(6, 1.0, 1, 5, 0.0013).unwrap();
        assert_eq!(sw.resonant_frequency(), None);
    }

    #[test]
    fn config_file_schema() {
        let json = r#"{"n_sites": 6, "frequencies": {"preset": "switching", "C": 1.0, "m": 1, "n": 5},
                       "J": 0.0013, "eta": 0.0, "gamma": 0.0}"#;
        let file: ConfigFile = serde_json::from_str(json).unwrap();
        let cfg = file.to_config().unwrap();
        assert_eq!(cfg.frequencies(), switching_frequencies(1.0, 1, 5, 6).unwrap().as_slice());
        assert_eq!(file.transfer_pair(), Some((1, 5)));

        let json = r#"{"n_sites": 3, "frequencies": [1.0, 2.0, 1.0], "J": 0.1, "eta": 0.5, "gamma": 0.01}"#;
        let cfg = serde_json::from_str::<ConfigFile>(json).unwrap().to_config().unwrap();
        assert_eq!(cfg.frequencies(), &[1.0, 2.0, 1.0]);
        assert_eq!(cfg.decay_rate(), 0.01);

        let json = r#"{"n_sites": 4, "frequencies": {"preset": "resonant", "C": 2.0}, "J": 0.1}"#;
        let cfg = serde_json::from_str::<ConfigFile>(json).unwrap().to_config().unwrap();
        assert_eq!(cfg.resonant_frequency(), Some(2.0));

        let unknown = r#"{"n_sites": 3, "frequencies": [1,1,1], "J": 0.1, "extra": 1}"#;
        assert!(serde_json::from_str::<ConfigFile>(unknown).is_err());
        let wrong_len = r#"{"n_sites": 4, "frequencies": [1,1,1], "J": 0.1}"#;
        assert!(serde_json::from_str::<ConfigFile>(wrong_len).unwrap().to_config().is_err());
        let missing_pair = r#"{"n_sites": 4, "frequencies": {"preset": "switching"}, "J": 0.1}"#;
        assert!(serde_json::from_str::<ConfigFile>(missing_pair).unwrap().to_config().is_err());
    }
}
