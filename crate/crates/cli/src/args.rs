use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;

use crate::output::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Frequency profile and eigenvalues of the array.
    Spectrum,
    /// Photon launched in cavity 1 of a resonant array, against the closed form.
    ResonantWalk,
    /// Transfer protocol card (t*, eta*, doublet diagnostics).
    Plan,
    /// P_mn(t) along a transfer.
    Transfer,
    /// Qubit transfer fidelity, exact and two-level.
    Qubit,
    /// Ensemble-averaged fidelity versus loss rate.
    Dissipation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::ResonantWalk => "resonant-walk",
            Command::Plan => "plan",
            Command::Transfer => "transfer",
            Command::Qubit => "qubit",
            Command::Dissipation => "dissipation",
        }
    }
}

/// Single-photon dynamics in Glauber-Fock coupled-cavity arrays.
#[derive(Debug, Clone, Parser)]
#[command(name = "gf-sim", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Array description (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Named parameter set: fig1, fig2, fig3a, fig3b, fig4, fig5.
    #[arg(long)]
    pub preset: Option<String>,

    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Bond phase, overriding eta* or the config.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,

    /// Ensemble size for dissipation, time samples otherwise.
    #[arg(long)]
    pub samples: Option<usize>,

    /// start:end:n; log-spaced gamma/J for dissipation, linear times otherwise.
    #[arg(long)]
    pub grid: Option<Grid>,

    /// Explicit comma-separated times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,

    #[arg(long)]
    pub source: Option<usize>,

    #[arg(long)]
    pub target: Option<usize>,

    /// Transfer pairs for dissipation, e.g. 1:3,2:5.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<Pair>>,

    /// Vacuum amplitude, e.g. 0.5 or 0.6+0.2i.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<ComplexArg>,

    /// One-photon amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<ComplexArg>,

    /// State ensemble for dissipation: haar or fig4.
    #[arg(long)]
    pub ensemble: Option<String>,

    /// RK4 step for the master equation.
    #[arg(long)]
    pub dt: Option<f64>,

    /// Closed-system propagator: spectral, dense or taylor.
    #[arg(long)]
    pub propagator: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, end, n] = parts.as_slice() else {
            return Err(format!("expected start:end:n, got {s:?}"));
        };
        let start: f64 = start.parse().map_err(|e| format!("start: {e}"))?;
        let end: f64 = end.parse().map_err(|e| format!("end: {e}"))?;
        let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(format!("grid end must exceed start in {s:?}"));
        }
        if n < 2 {
            return Err("grid needs at least 2 points".into());
        }
        Ok(Grid { start, end, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair(pub usize, pub usize);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, n) = s.split_once(':').ok_or_else(|| format!("expected m:n, got {s:?}"))?;
        Ok(Pair(
            m.trim().parse().map_err(|e| format!("{e}"))?,
            n.trim().parse().map_err(|e| format!("{e}"))?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexArg(pub Complex64);

impl FromStr for ComplexArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Complex64::from_str(s.trim())
            .map(ComplexArg)
            .map_err(|_| format!("not a complex number: {s:?}"))
    }
}
