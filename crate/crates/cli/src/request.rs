//! Resolves flags, config files and presets into one run description.

use gfock::ensemble::{FigureFourEnsemble, QubitAmplitudes};
use gfock::model::{ConfigFile, FrequencyPreset, FrequencySpec, PresetKind};
use gfock::open_system::DEFAULT_DT;
use num_complex::Complex64;
use serde::Serialize;

use crate::args::{Cli, Command, Grid, Pair};
use crate::error::{CliError, Result};

pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_GAMMA_GRID: Grid = Grid {
    start: 1e-3,
    end: 1.0,
    n: 25,
};
pub const PRESET_NAMES: [&str; 6] = ["fig1", "fig2", "fig3a", "fig3b", "fig4", "fig5"];

/// Fully resolved run; serialised verbatim into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct Request {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub array: Option<ConfigFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<QubitAmplitudes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub ensemble: String,
    pub dt: f64,
    pub propagator: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
    #[serde(skip)]
    pub kind: Option<Command>,
}

impl Request {
    pub fn command(&self) -> Command {
        self.kind.expect("resolved requests carry their command")
    }

    /// `(m, n)` from the flags, else from a switching config.
    pub fn endpoints(&self) -> Option<(usize, usize)> {
        let from_config = self.array.as_ref().and_then(ConfigFile::transfer_pair);
        match (self.source, self.target) {
            (Some(m), Some(n)) => Some((m, n)),
            (None, None) => from_config,
            (Some(m), None) => from_config.map(|(_, n)| (m, n)),
            (None, Some(n)) => from_config.map(|(m, _)| (m, n)),
        }
    }

    pub fn require_array(&self) -> Result<&ConfigFile> {
        self.array
            .as_ref()
            .ok_or_else(|| CliError::config(format!("{} needs --config or --preset", self.command)))
    }
}

struct Preset {
    command: Command,
    array: ConfigFile,
    times: Option<Vec<f64>>,
    pair: Option<(usize, usize)>,
    pairs: Vec<(usize, usize)>,
    states: Vec<QubitAmplitudes>,
    seed: Option<u64>,
    samples: Option<usize>,
    grid: Option<Grid>,
    assumptions: Vec<String>,
}

fn switching(n_sites: usize, j: f64, m: usize, n: usize) -> ConfigFile {
    ConfigFile {
        n_sites,
        frequencies: FrequencySpec::Preset(FrequencyPreset {
            preset: PresetKind::Switching,
            base: 1.0,
            m: Some(m),
            n: Some(n),
        }),
        coupling_scale: j,
        eta: 0.0,
        gamma: 0.0,
    }
}

const UNITS_NOTE: &str = "frequencies and times in units of omega_1; switching offset C = omega_1";

fn preset(name: &str) -> Result<Preset> {
    let base = |command, array| Preset {
        command,
        array,
        times: None,
        pair: None,
        pairs: Vec::new(),
        states: Vec::new(),
        seed: None,
        samples: None,
        grid: None,
        assumptions: vec![UNITS_NOTE.to_string()],
    };
    Ok(match name {
        "fig1" => Preset {
            times: Some(vec![0.0, 30.0, 40.0, 84.0]),
            assumptions: vec!["resonant array, omega = 1, J/omega = 0.05, N = 10, photon starts in cavity 1".into()],
            ..base(
                Command::ResonantWalk,
                ConfigFile {
                    n_sites: 10,
                    frequencies: FrequencySpec::Preset(FrequencyPreset {
                        preset: PresetKind::Resonant,
                        base: 1.0,
                        m: None,
                        n: None,
                    }),
                    coupling_scale: 0.05,
                    eta: 0.0,
                    gamma: 0.0,
                },
            )
        },
        "fig2" => base(Command::Spectrum, switching(10, 0.0013, 3, 7)),
        "fig3a" => Preset {
            pair: Some((1, 5)),
            ..base(Command::Transfer, switching(6, 0.0013, 1, 5))
        },
        "fig3b" => Preset {
            pair: Some((2, 4)),
            ..base(Command::Transfer, switching(6, 0.0013, 2, 4))
        },
        "fig4" => Preset {
            pair: Some((1, 4)),
            states: FigureFourEnsemble::states().to_vec(),
            ..base(Command::Qubit, switching(6, 0.0013, 1, 4))
        },
        "fig5" => {
            let mut p = base(Command::Dissipation, switching(6, 0.0013, 1, 3));
            p.pairs = vec![(1, 3), (2, 5)];
            p.seed = Some(20130);
            p.samples = Some(DEFAULT_SAMPLES);
            p.grid = Some(DEFAULT_GAMMA_GRID);
            p.assumptions.extend([
                "N = 6 and J/omega_1 = 0.0013 reused from the fig3a and fig3b presets".to_string(),
                "uniform loss rate gamma on every cavity".to_string(),
                "25 log-spaced gamma/J points in [1e-3, 1] plus a gamma = 0 row".to_string(),
                "Haar-random (alpha, beta), one ensemble shared by all gamma".to_string(),
            ]);
            p
        }
        other => {
            return Err(CliError::config(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

fn read_config(path: &std::path::Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn resolve(cli: &Cli) -> Result<Request> {
    let preset = cli.preset.as_deref().map(preset).transpose()?;
    if let Some(p) = &preset {
        // plan accepts any preset that names a transfer pair
        let plan_ok = cli.command == Command::Plan && p.pair.is_some();
        if p.command != cli.command && !plan_ok {
            return Err(CliError::config(format!(
                "preset {} belongs to the {} command",
                cli.preset.as_deref().unwrap_or_default(),
                p.command.name()
            )));
        }
    }

    let array = match &cli.config {
        Some(path) => Some(read_config(path)?),
        None => preset.as_ref().map(|p| p.array.clone()),
    };

    let states = match (cli.alpha, cli.beta) {
        (Some(a), Some(b)) => vec![(a.0, b.0)],
        (None, None) => preset.as_ref().map(|p| p.states.clone()).unwrap_or_default(),
        _ => return Err(CliError::config("--alpha and --beta go together")),
    };

    let (source, target) = match (cli.source, cli.target, preset.as_ref().and_then(|p| p.pair)) {
        (None, None, Some((m, n))) if cli.config.is_none() => (Some(m), Some(n)),
        (s, t, _) => (s, t),
    };

    let pairs: Vec<(usize, usize)> = match &cli.pairs {
        Some(p) => p.iter().map(|&Pair(m, n)| (m, n)).collect(),
        None => preset.as_ref().map(|p| p.pairs.clone()).unwrap_or_default(),
    };

    let grid = cli.grid.or(preset.as_ref().and_then(|p| p.grid));
    let times = cli.times.clone().or(preset.as_ref().and_then(|p| p.times.clone()));
    if let Some(ts) = &times {
        if ts.is_empty() || ts.iter().any(|t| !t.is_finite()) {
            return Err(CliError::config("--times must be finite numbers"));
        }
    }
    if let Some(dt) = cli.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::config("--dt must be positive"));
        }
    }
    if cli.samples == Some(0) {
        return Err(CliError::config("--samples must be at least 1"));
    }

    let mut assumptions = preset.as_ref().map(|p| p.assumptions.clone()).unwrap_or_default();
    if preset.is_none() && array.as_ref().is_some_and(|a| matches!(a.frequencies, FrequencySpec::Preset(_))) {
        assumptions.push(UNITS_NOTE.to_string());
    }

    Ok(Request {
        command: cli.command.name(),
        preset: cli.preset.clone(),
        array,
        grid: grid.map(|g| (g.start, g.end, g.n)),
        times,
        source,
        target,
        pairs,
        states,
        eta: cli.eta,
        seed: cli.seed.or(preset.as_ref().and_then(|p| p.seed)),
        samples: cli.samples.or(preset.as_ref().and_then(|p| p.samples)),
        ensemble: cli.ensemble.clone().unwrap_or_else(|| "haar".into()),
        dt: cli.dt.unwrap_or(DEFAULT_DT),
        propagator: cli.propagator.clone().unwrap_or_else(|| "spectral".into()),
        assumptions,
        kind: Some(cli.command),
    })
}

/// Normalised `(alpha, beta)` or a configuration error.
pub fn check_state(alpha: Complex64, beta: Complex64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(CliError::config(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
    }
    Ok(())
}
