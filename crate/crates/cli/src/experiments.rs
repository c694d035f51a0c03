//! One [`Experiment`] per subcommand, looked up by name.

use std::collections::BTreeMap;

use gfock::analytics::truncated_coherent_amplitudes;
use gfock::dynamics::{decompose, site_probabilities, sweep, ExcitationState, DEFAULT_SAMPLES};
use gfock::ensemble::EnsembleRegistry;
use gfock::model::{build_hamiltonian, ArrayConfig, ConfigFile, FrequencySpec, PresetKind};
use gfock::open_system::{average_transfer_fidelity, log_grid, HALVING_TOLERANCE};
use gfock::propagator::PropagatorRegistry;
use gfock::protocol::{make_plan, qubit_fidelity_curve_at_phase, PlanTemplate, TransferPlan};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::output::{Output, Table};
use crate::request::{check_state, Request, DEFAULT_GAMMA_GRID, DEFAULT_SAMPLES as DEFAULT_ENSEMBLE};

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, request: &Request) -> Result<Output>;
}

pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.entries.insert(experiment.name(), experiment);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Experiment> {
        self.entries
            .get(name)
            .map(|e| e.as_ref())
            .ok_or_else(|| CliError::config(format!("unknown command {name:?}")))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut registry = Self {
            entries: BTreeMap::new(),
        };
        registry.register(Box::new(Spectrum));
        registry.register(Box::new(ResonantWalk));
        registry.register(Box::new(Plan));
        registry.register(Box::new(Transfer));
        registry.register(Box::new(Qubit));
        registry.register(Box::new(Dissipation));
        registry
    }
}

/// Runs the request's command and stamps the common metadata.
pub fn execute(request: &Request) -> Result<Output> {
    let registry = ExperimentRegistry::default();
    let mut output = registry.get(request.command)?.run(request)?;
    let mut meta = serde_json::Map::new();
    meta.insert("tool".into(), json!("gf-sim"));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("request".into(), serde_json::to_value(request)?);
    meta.append(&mut output.metadata);
    output.metadata = meta;
    Ok(output)
}

fn array_config(request: &Request) -> Result<ArrayConfig> {
    let mut file = request.require_array()?.clone();
    if let Some(eta) = request.eta {
        file.eta = eta;
    }
    Ok(file.to_config()?)
}

fn plan_template(file: &ConfigFile) -> Result<PlanTemplate> {
    match &file.frequencies {
        FrequencySpec::Preset(p) if p.preset == PresetKind::Switching => Ok(PlanTemplate {
            n_sites: file.n_sites,
            coupling_scale: file.coupling_scale,
            base_frequency: p.base,
        }),
        _ => Err(CliError::config("a transfer plan needs a switching frequency preset")),
    }
}

fn endpoints(request: &Request) -> Result<(usize, usize)> {
    request
        .endpoints()
        .ok_or_else(|| CliError::config("give --source and --target (or a switching config)"))
}

fn request_plan(request: &Request) -> Result<TransferPlan> {
    let template = plan_template(request.require_array()?)?;
    let (m, n) = endpoints(request)?;
    Ok(make_plan(&template, m, n)?)
}

/// `--times`, else a linear `--grid`, else `[0, default_end]`.
fn time_points(request: &Request, default_end: Option<f64>) -> Result<Vec<f64>> {
    if let Some(t) = &request.times {
        return Ok(t.clone());
    }
    let samples = request.samples.unwrap_or(DEFAULT_SAMPLES).max(2);
    let (start, end, n) = match (request.grid, default_end) {
        (Some(g), _) => g,
        // odd count so the midpoint (t* on [0, 2 t*]) is a grid point
        (None, Some(end)) => (0.0, end, samples | 1),
        (None, None) => return Err(CliError::config("give --times or --grid start:end:n")),
    };
    let grid = gfock::dynamics::TimeGrid::new(start, end, n)?;
    Ok(grid.points())
}

fn note_assumptions(request: &Request) {
    for a in &request.assumptions {
        eprintln!("note: {a}");
    }
}

fn plan_json(plan: &TransferPlan) -> Result<Value> {
    let mut value = serde_json::to_value(plan)?;
    value["eta_star_literal"] = json!(plan.eta_star_literal());
    Ok(value)
}

pub struct Spectrum;

impl Experiment for Spectrum {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn run(&self, request: &Request) -> Result<Output> {
        note_assumptions(request);
        let cfg = array_config(request)?;
        let spectrum = decompose(&build_hamiltonian(&cfg))?;
        let n = cfg.n_sites();
        let mut table = Table::new(["k", "omega_k", "eigenvalue", "dominant_site", "dominant_weight"]);
        for k in 0..n {
            let column = spectrum.eigenvectors().column(k);
            let (site, weight) = column
                .iter()
                .map(|z| z.norm_sqr())
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc });
            table.push(vec![
                (k + 1) as f64,
                cfg.frequencies()[k],
                spectrum.eigenvalues()[k],
                (site + 1) as f64,
                weight,
            ]);
        }
        let second: Vec<f64> = cfg.frequencies().windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        let mut output = Output {
            table,
            ..Default::default()
        };
        output.metadata.insert("second_differences".into(), json!(second));
        if let Some(w) = cfg.resonant_frequency() {
            output.metadata.insert("resonant_frequency".into(), json!(w));
        }
        Ok(output)
    }
}

pub struct ResonantWalk;

impl Experiment for ResonantWalk {
    fn name(&self) -> &'static str {
        "resonant-walk"
    }

    fn run(&self, request: &Request) -> Result<Output> {
        note_assumptions(request);
        let cfg = array_config(request)?;
        let omega = cfg.resonant_frequency().ok_or_else(|| {
            CliError::Regime("closed form needs equal cavity frequencies (resonant array)".into())
        })?;
        if cfg.coupling_phase() != 0.0 {
            return Err(CliError::Regime("closed form is stated for real couplings (eta = 0)".into()));
        }
        let n = cfg.n_sites();
        let times = time_points(request, None)?;
        let h = build_hamiltonian(&cfg);
        let propagators = PropagatorRegistry::default();
        let propagator = propagators.get(&request.propagator)?;
        let start = ExcitationState::site(n, 1)?;

        let mut columns = vec!["t".to_string()];
        columns.extend((1..=n).map(|k| format!("P{k}")));
        columns.extend((1..=n).map(|k| format!("closed_P{k}")));
        columns.push("max_abs_deviation".into());
        columns.push("boundary_population".into());
        let mut table = Table::new(columns);

        let rows: Vec<Result<Vec<f64>>> = sweep(&times, |t| {
            let state = propagator.evolve(&h, &start, t)?;
            let profile = truncated_coherent_amplitudes(cfg.coupling_scale(), t.abs(), n)?;
            // closed form lives in the frame rotating at omega
            let frame = Complex64::from_polar(1.0, omega * t);
            let deviation = (0..n)
                .map(|k| (state.site_amplitude(k + 1) * frame - profile.amplitudes[k]).norm())
                .fold(0.0, f64::max);
            let p = site_probabilities(&state);
            let mut row = vec![t];
            row.extend(&p);
            row.extend(profile.probabilities());
            row.push(deviation);
            row.push(p[n - 1]);
            Ok(row)
        });
        for row in rows {
            table.push(row?);
        }
        let mut output = Output {
            table,
            ..Default::default()
        };
        output.metadata.insert("omega".into(), json!(omega));
        output.metadata.insert(
            "note".into(),
            json!("closed form assumes [A, A^+] = 1 and is valid only while the last cavity is empty"),
        );
        Ok(output)
    }
}

pub struct Plan;

impl Experiment for Plan {
    fn name(&self) -> &'static str {
        "plan"
    }

    fn run(&self, request: &Request) -> Result<Output> {
        note_assumptions(request);
        let plan = request_plan(request)?;
        if let Some(w) = &plan.warning {
            eprintln!("warning: {w}");
        }
        let mut table = Table::new([
            "source",
            "target",
            "n_sites",
            "J",
            "lambda_plus",
            "lambda_minus",
            "theta",
            "lambda_mean",
            "t_star",
            "eta_star",
            "doublet_purity",
            "doublet_sign",
        ]);
        table.push(vec![
            plan.source as f64,
            plan.target as f64,
            plan.n_sites as f64,
            plan.coupling_scale,
            plan.lambda_plus,
            plan.lambda_minus,
            plan.theta,
            plan.lambda_mean,
            plan.transfer_time,
            plan.eta_star,
            plan.doublet_purity,
            plan.doublet_sign,
        ]);
        let value = plan_json(&plan)?;
        let mut output = Output {
            table,
            sidecars: vec![("plan.json".into(), value.clone())],
            ..Default::default()
        };
        output.metadata.insert("plan".into(), value);
        Ok(output)
    }
}

pub struct Transfer;

impl Experiment for Transfer {
    fn name(&self) -> &'static str {
        "transfer"
    }

    fn run(&self, request: &Request) -> Result<Output> {
        note_assumptions(request);
        let (m, n) = endpoints(request)?;
        let file = request.require_array()?;
        // a plan exists only for switching profiles built for this very pair
        let plan = match file.transfer_pair() {
            Some(pair) if pair == (m, n) || pair == (n, m) => Some(request_plan(request)?),
            _ => None,
        };
        let cfg = match &plan {
            Some(p) => p.config_with_phase(request.eta.unwrap_or(file.eta))?,
            None => array_config(request)?,
        };
        let n_sites = cfg.n_sites();
        if m == 0 || n == 0 || m > n_sites || n > n_sites || m == n {
            return Err(CliError::config(format!("bad transfer pair {m} -> {n} for {n_sites} sites")));
        }
        if let Some(w) = plan.as_ref().and_then(|p| p.warning.as_ref()) {
            eprintln!("warning: {w}");
        }
        let times = time_points(request, plan.as_ref().map(|p| 2.0 * p.transfer_time))?;

        let h = build_hamiltonian(&cfg);
        let start = ExcitationState::site(n_sites, m)?;
        let probabilities: Vec<Result<Vec<f64>>> = if request.propagator == "spectral" {
            let spectrum = decompose(&h)?;
            let trajectory = spectrum.trajectory(&start)?;
            sweep(&times, |t| Ok(site_probabilities(&trajectory.at(t)?)))
        } else {
            let registry = PropagatorRegistry::default();
            let propagator = registry.get(&request.propagator)?;
            sweep(&times, |t| Ok(site_probabilities(&propagator.evolve(&h, &start, t)?)))
        };

        let mut columns = vec!["t", "P_transfer", "leakage"];
        if plan.is_some() {
            columns.push("P_two_level");
        }
        let mut table = Table::new(columns);
        let (mut peak, mut peak_time, mut max_leakage) = (f64::NEG_INFINITY, 0.0, 0.0f64);
        for (t, p) in times.iter().zip(probabilities) {
            let p = p?;
            let transfer = p[n - 1];
            let leakage = p.iter().sum::<f64>() - p[m - 1] - p[n - 1];
            max_leakage = max_leakage.max(leakage);
            if transfer > peak {
                peak = transfer;
                peak_time = *t;
            }
            let mut row = vec![*t, transfer, leakage];
            if let Some(plan) = &plan {
                row.push(plan.predicted_probability(*t));
            }
            table.push(row);
        }

        let mut output = Output {
            table,
            ..Default::default()
        };
        output.metadata.insert("source".into(), json!(m));
        output.metadata.insert("target".into(), json!(n));
        output.metadata.insert("peak_probability".into(), json!(peak));
        output.metadata.insert("peak_time".into(), json!(peak_time));
        output.metadata.insert("max_leakage".into(), json!(max_leakage));
        if let Some(plan) = &plan {
            let value = plan_json(plan)?;
            output.metadata.insert(
                "peak_time_relative_offset".into(),
                json!((peak_time - plan.transfer_time).abs() / plan.transfer_time),
            );
            output.metadata.insert("plan".into(), value.clone());
            output.sidecars.push(("plan.json".into(), value));
        }
        Ok(output)
    }
}

pub struct Qubit;

impl Experiment for Qubit {
    fn name(&self) -> &'static str {
        "qubit"
    }

    fn run(&self, request: &Request) -> Result<Output> {
        note_assumptions(request);
        if request.states.is_empty() {
            return Err(CliError::config("give --alpha and --beta (or --preset fig4)"));
        }
        for &(a, b) in &request.states {
            check_state(a, b)?;
        }
        let plan = request_plan(request)?;
        if let Some(w) = &plan.warning {
            eprintln!("warning: {w}");
        }
        let eta = request.eta.unwrap_or(plan.eta_star);
        let times = time_points(request, Some(2.0 * plan.transfer_time))?;

        let mut table = Table::new(["t", "state", "F_numerical", "F_closed_form"]);
        let mut summaries = Vec::new();
        for (index, &(alpha, beta)) in request.states.iter().enumerate() {
            let curve = qubit_fidelity_curve_at_phase(&plan, alpha, beta, &times, eta)?;
            for ((t, f), c) in curve.times.iter().zip(&curve.numerical).zip(&curve.closed_form) {
                table.push(vec![*t, index as f64, *f, *c]);
            }
            let (peak, peak_time) = curve.peak();
            summaries.push(json!({
                "state": index,
                "alpha": [alpha.re, alpha.im],
                "beta": [beta.re, beta.im],
                "peak_fidelity": peak,
                "peak_time": peak_time,
                "max_closed_form_deviation": curve.max_deviation(),
            }));
        }
        let value = plan_json(&plan)?;
        let mut output = Output {
            table,
            sidecars: vec![("plan.json".into(), value.clone())],
            ..Default::default()
        };
        output.metadata.insert("eta".into(), json!(eta));
        output.metadata.insert("plan".into(), value);
        output.metadata.insert("states".into(), Value::Array(summaries));
        Ok(output)
    }
}

pub struct Dissipation;

impl Experiment for Dissipation {
    fn name(&self) -> &'static str {
        "dissipation"
    }

    fn run(&self, request: &Request) -> Result<Output> {
        note_assumptions(request);
        let seed = request
            .seed
            .ok_or_else(|| CliError::config("dissipation needs --seed for reproducibility"))?;
        let file = request.require_array()?;
        let template = plan_template(file)?;
        let pairs = if request.pairs.is_empty() {
            vec![endpoints(request)?]
        } else {
            request.pairs.clone()
        };
        let samples = request.samples.unwrap_or(DEFAULT_ENSEMBLE);
        let ensembles = EnsembleRegistry::default();
        let ensemble = ensembles.get(&request.ensemble)?;
        let (start, end, n) = request.grid.unwrap_or((DEFAULT_GAMMA_GRID.start, DEFAULT_GAMMA_GRID.end, DEFAULT_GAMMA_GRID.n));
        let mut grid = vec![0.0];
        grid.extend(log_grid(start, end, n)?);

        let mut table = Table::new([
            "gamma_over_J",
            "mean_fidelity",
            "stderr",
            "samples",
            "t_star",
            "source",
            "target",
        ]);
        let mut worst_halving = 0.0f64;
        let mut plans = Vec::new();
        for &(m, target) in &pairs {
            let plan = make_plan(&template, m, target)?;
            if let Some(w) = &plan.warning {
                eprintln!("warning: {w}");
            }
            let points = average_transfer_fidelity(&plan, &grid, samples, seed, ensemble, request.dt)?;
            for p in points {
                worst_halving = worst_halving.max(p.halving_deviation);
                table.push(vec![
                    p.gamma_over_j,
                    p.mean_fidelity,
                    p.stderr,
                    p.samples as f64,
                    p.t_star,
                    m as f64,
                    target as f64,
                ]);
            }
            plans.push(plan_json(&plan)?);
        }
        let converged = worst_halving <= HALVING_TOLERANCE;
        if !converged {
            eprintln!("warning: halving dt moved a fidelity by {worst_halving:.2e}; reduce --dt");
        }

        let mut output = Output {
            table,
            ..Default::default()
        };
        let meta = &mut output.metadata;
        meta.insert("n_sites".into(), json!(template.n_sites));
        meta.insert("J".into(), json!(template.coupling_scale));
        meta.insert("C".into(), json!(template.base_frequency));
        meta.insert("samples".into(), json!(samples));
        meta.insert("seed".into(), json!(seed));
        meta.insert("ensemble".into(), json!(ensemble.name()));
        meta.insert("dt".into(), json!(request.dt));
        meta.insert("max_halving_deviation".into(), json!(worst_halving));
        meta.insert("converged".into(), json!(converged));
        meta.insert("plans".into(), Value::Array(plans));
        Ok(output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_every_command() {
        assert_eq!(
            ExperimentRegistry::default().names(),
            vec!["dissipation", "plan", "qubit", "resonant-walk", "spectrum", "transfer"]
        );
    }
}
