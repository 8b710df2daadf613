use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use symstruct::coefficient_extraction::{extract_exact_coefficients, extract_kinetic_coefficients, observable_rate, Extraction, JointSystem};
use symstruct::generator_core::{map_from_joint_unitary, propagate_map_prefix, to_interaction_picture};
use symstruct::operator_algebra::{pauli, TimeGrid};
use symstruct::reference_models::{jc_rates, spinstar_kappas};
use symstruct::validators::Verdict;

use crate::artifact::{
    matrix_to_json, Artifact, CoefficientSample, MapSample, SuiteReport, TransitionJson, ARTIFACT_FORMAT,
};
use crate::config::{series_label, series_spec, ExperimentConfig, LoadedConfig, SeriesKindConfig, Tolerances};
use crate::error::{exit, CliError, CliResult};
use crate::format::{flag, g17, to_json, CsvTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    JcRates,
    SpinstarCompare,
    Extract,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::JcRates => "jc-rates",
            Command::SpinstarCompare => "spinstar-compare",
            Command::Extract => "extract",
            Command::Validate => "validate",
        }
    }
}

/// Result of a completed command. Files are already on disk.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
    /// Set when a physical check failed; the command still wrote its output.
    pub physics_failure: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.physics_failure.is_some() {
            exit::PHYSICS
        } else {
            exit::OK
        }
    }
}

/// Metadata written next to every data file.
#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    command: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    config: &'a ExperimentConfig,
    tolerances: Tolerances,
    warnings: Vec<String>,
    files: Vec<String>,
    summary: S,
}

/// Output files collected in memory and written together at the end.
struct Pending {
    dir: PathBuf,
    prefix: String,
    files: Vec<(String, String)>,
}

impl Pending {
    fn new(out: &Path, cfg: &LoadedConfig) -> Self {
        Pending { dir: out.to_path_buf(), prefix: cfg.config.output.prefix.clone(), files: Vec::new() }
    }

    fn name(&self, base: &str) -> String {
        format!("{}{base}", self.prefix)
    }

    fn add(&mut self, base: &str, contents: String) -> String {
        let name = self.name(base);
        self.files.push((name.clone(), contents));
        name
    }

    fn write(self) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        self.files
            .into_iter()
            .map(|(name, contents)| {
                let p = self.dir.join(name);
                std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
                Ok(p)
            })
            .collect()
    }
}

fn csv_meta(table: &mut CsvTable, command: Command, cfg: &LoadedConfig) {
    table.meta("symstruct", format!("{VERSION} {}", command.name()));
    table.meta("config_sha256", cfg.sha256.clone());
    table.meta("tolerances", cfg.tolerances().describe());
}

pub fn run(command: Command, config_path: &Path, out: &Path) -> CliResult<Outcome> {
    let cfg = LoadedConfig::load(config_path)?;
    info!("{} with config {} (sha256 {})", command.name(), config_path.display(), cfg.sha256);
    match command {
        Command::JcRates => cmd_jc_rates(&cfg, out),
        Command::SpinstarCompare => cmd_spinstar_compare(&cfg, out),
        Command::Extract => cmd_extract(&cfg, out),
        Command::Validate => cmd_validate(&cfg, out),
    }
}

#[derive(Serialize)]
struct JcSummary {
    n_points: usize,
    n_singular: usize,
    min_gamma_plus: f64,
    min_gamma_minus: f64,
    min_gamma_z: f64,
    n_trunc: usize,
}

fn nan_min(v: &[f64]) -> f64 {
    v.iter().filter(|x| x.is_finite()).cloned().fold(f64::INFINITY, f64::min)
}

pub fn cmd_jc_rates(cfg: &LoadedConfig, out: &Path) -> CliResult<Outcome> {
    let jc = cfg.jc()?;
    let grid = cfg.grid()?;
    let r = jc_rates(&jc, &grid);
    let cols = ["t", "eta_par", "eta_perp", "r", "gamma_plus", "gamma_minus", "gamma_z", "singular_flag"];
    let mut table = CsvTable::new(cols.iter().map(|s| s.to_string()).collect());
    csv_meta(&mut table, Command::JcRates, cfg);
    for (k, &t) in grid.points().iter().enumerate() {
        table.push(vec![
            g17(t),
            g17(r.eta_par[k]),
            g17(r.eta_perp[k]),
            g17(r.r[k]),
            g17(r.gamma_plus[k]),
            g17(r.gamma_minus[k]),
            g17(r.gamma_z[k]),
            flag(r.singular[k]),
        ]);
    }
    let n_singular = r.singular.iter().filter(|&&s| s).count();
    let mut warnings = Vec::new();
    if n_singular > 0 {
        warnings.push(format!("SINGULAR: {n_singular} grid points lie next to a zero of eta_par or eta_perp"));
    }
    let summary = JcSummary {
        n_points: grid.len(),
        n_singular,
        min_gamma_plus: nan_min(&r.gamma_plus),
        min_gamma_minus: nan_min(&r.gamma_minus),
        min_gamma_z: nan_min(&r.gamma_z),
        n_trunc: jc.n_trunc,
    };
    let mut pending = Pending::new(out, cfg);
    let csv = pending.add("jc_rates.csv", table.render());
    let sidecar = Sidecar {
        command: Command::JcRates.name(),
        version: VERSION,
        config_sha256: &cfg.sha256,
        config: &cfg.config,
        tolerances: cfg.tolerances(),
        warnings: warnings.clone(),
        files: vec![csv],
        summary,
    };
    pending.add("jc_rates.json", to_json(&sidecar));
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Outcome { files: pending.write()?, messages: warnings, physics_failure: None })
}

#[derive(Serialize)]
struct VariantSummary {
    label: String,
    order: usize,
    lambda_b: Option<f64>,
    max_abs_error: f64,
    max_rel_error: f64,
    warnings: Vec<String>,
}

pub fn cmd_spinstar_compare(cfg: &LoadedConfig, out: &Path) -> CliResult<Outcome> {
    let ss = cfg.spinstar()?;
    let grid = cfg.grid()?;
    let rho0 = cfg.initial_state()?;
    if cfg.config.series.is_empty() {
        return Err(cfg.error("spinstar-compare needs at least one `series` entry"));
    }
    if let Some(i) = cfg.config.series.iter().position(|s| s.kind == SeriesKindConfig::Exact) {
        return Err(cfg.error(format!("series[{i}]: spinstar-compare compares truncated series; `exact` is the reference")));
    }
    let t_max = *grid.points().last().unwrap();
    let js = cfg.joint_system()?;
    let kap = spinstar_kappas(&ss, &grid);
    let r_z = cfg.config.initial_state.as_ref().unwrap().r_z;
    // only the population part of ρ(0) feeds ⟨σz⟩
    let exact: Vec<f64> = kap.d_kappa_z.iter().map(|d| r_z * d).collect();
    let specs: Vec<_> = cfg.config.series.iter().map(|s| series_spec(&js, s, t_max)).collect();
    let results = specs
        .par_iter()
        .map(|spec| observable_rate(&js, spec, &grid, &rho0, &pauli::sigma_z()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cols = vec!["t".to_string(), "exact".to_string()];
    let labels: Vec<String> = specs.iter().map(series_label).collect();
    for l in &labels {
        cols.push(l.clone());
        cols.push(format!("err_{l}"));
    }
    let mut table = CsvTable::new(cols);
    csv_meta(&mut table, Command::SpinstarCompare, cfg);
    for (k, &t) in grid.points().iter().enumerate() {
        let mut row = vec![g17(t), g17(exact[k])];
        for (_, rates) in &results {
            row.push(g17(rates[k]));
            row.push(g17((rates[k] - exact[k]).abs()));
        }
        table.push(row);
    }
    let mut warnings = Vec::new();
    let summaries: Vec<VariantSummary> = specs
        .iter()
        .zip(&labels)
        .zip(&results)
        .map(|((spec, label), (ex, rates))| {
            let abs: Vec<f64> = rates.iter().zip(&exact).map(|(a, e)| (a - e).abs()).collect();
            let rel = abs
                .iter()
                .zip(&exact)
                .filter(|(_, e)| e.abs() > 0.0)
                .map(|(a, e)| a / e.abs())
                .fold(0.0, f64::max);
            for w in &ex.warnings {
                warnings.push(format!("{label}: {w}"));
            }
            VariantSummary {
                label: label.clone(),
                order: spec.order,
                lambda_b: ex.lambda_b,
                max_abs_error: abs.iter().cloned().fold(0.0, f64::max),
                max_rel_error: rel,
                warnings: ex.warnings.clone(),
            }
        })
        .collect();
    let mut pending = Pending::new(out, cfg);
    let csv = pending.add("spinstar_compare.csv", table.render());
    let sidecar = Sidecar {
        command: Command::SpinstarCompare.name(),
        version: VERSION,
        config_sha256: &cfg.sha256,
        config: &cfg.config,
        tolerances: cfg.tolerances(),
        warnings: warnings.clone(),
        files: vec![csv],
        summary: summaries,
    };
    pending.add("spinstar_compare.json", to_json(&sidecar));
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Outcome { files: pending.write()?, messages: warnings, physics_failure: None })
}

fn samples_from(grid: &TimeGrid, kept: &[f64], ex: &Extraction) -> Vec<CoefficientSample> {
    let mut k = 0;
    grid.points()
        .iter()
        .map(|&t| {
            if k < kept.len() && kept[k] == t {
                let s = CoefficientSample {
                    t,
                    singular: false,
                    c: Some(ex.coeffs.c(k).to_vec()),
                    d: Some(matrix_to_json(ex.coeffs.d(k))),
                    hbar: Some(matrix_to_json(ex.coeffs.hbar(k))),
                };
                k += 1;
                s
            } else {
                CoefficientSample { t, singular: true, c: None, d: None, hbar: None }
            }
        })
        .collect()
}

/// Builds the extraction artifact for the configured model and method.
pub fn build_artifact(cfg: &LoadedConfig, js: &JointSystem, grid: &TimeGrid) -> CliResult<Artifact> {
    let series = match cfg.config.series.as_slice() {
        [s] => s,
        _ => return Err(cfg.error("extract needs exactly one `series` entry")),
    };
    let basis = js.basis();
    let t_max = *grid.points().last().unwrap();
    let (method, samples, warnings, map_source, maps) = if series.kind == SeriesKindConfig::Exact {
        let min_gap = grid.points().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let h = series.step.unwrap_or_else(|| (min_gap / 8.0).min(1e-4));
        if !(4.0 * h < min_gap) {
            return Err(cfg.error(format!("series[0].step = {h} must be below a quarter of the grid spacing {min_gap}")));
        }
        let (kept, ex) = extract_exact_coefficients(js, grid.points(), h)?;
        let lab = map_from_joint_unitary(&js.joint_hamiltonian_dense(), js.rho_e(), js.n(), grid)?;
        let maps = to_interaction_picture(&lab, js.h_s(), grid)?;
        (format!("exact (step {})", g17(h)), samples_from(grid, &kept, &ex), ex.warnings, "joint-unitary", maps)
    } else {
        let spec = series_spec(js, series, t_max);
        let ex = extract_kinetic_coefficients(js, &spec, grid)?;
        let samples = samples_from(grid, grid.points(), &ex);
        let mut warnings = ex.warnings.clone();
        let (maps, err) = propagate_map_prefix(&ex.coeffs, &basis)?;
        if let Some(e) = err {
            warnings.push(format!("re-propagation stopped after {} of {} samples: {e}", maps.len(), grid.len()));
        }
        let source = if maps.is_empty() { "none" } else { "re-propagated" };
        (series_label(&spec), samples, warnings, source, maps)
    };
    Ok(Artifact {
        format: ARTIFACT_FORMAT.into(),
        version: VERSION.into(),
        config_sha256: cfg.sha256.clone(),
        method,
        h_s: matrix_to_json(js.h_s().matrix()),
        transitions: basis
            .transitions()
            .iter()
            .map(|t| TransitionJson { n: t.n, m: t.m, omega: t.omega })
            .collect(),
        samples,
        map_source: map_source.into(),
        maps: grid
            .points()
            .iter()
            .zip(&maps)
            .map(|(&t, m)| MapSample { t, matrix: matrix_to_json(m.matrix()) })
            .collect(),
        warnings,
    })
}

fn failure_message(reports: &[SuiteReport]) -> Option<String> {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict() == Verdict::Fail)
        .flat_map(|r| {
            r.checks
                .iter()
                .filter(|c| c.verdict == "FAIL")
                .map(move |c| format!("{}: {} FAIL (worst {})", r.source, c.name, g17(c.worst)))
        })
        .collect();
    (!failed.is_empty()).then(|| failed.join("; "))
}

pub fn cmd_extract(cfg: &LoadedConfig, out: &Path) -> CliResult<Outcome> {
    let grid = cfg.grid()?;
    let js = cfg.joint_system()?;
    let r = js.residuals();
    info!(
        "postulate residuals: energy conservation {}, stationarity {}, mean field {}",
        g17(r.energy_conservation),
        g17(r.stationarity),
        g17(r.mean_field)
    );
    let artifact = build_artifact(cfg, &js, &grid)?;
    let mut pending = Pending::new(out, cfg);
    let name = pending.name("extract.json");
    let report = artifact.validate(&name, &cfg.tolerances())?;
    pending.add("extract.json", to_json(&artifact));
    pending.add("extract_report.json", to_json(&report));
    pending.add("extract_report.txt", report.text());
    for w in &artifact.warnings {
        warn!("{w}");
    }
    let physics_failure = failure_message(std::slice::from_ref(&report));
    Ok(Outcome { files: pending.write()?, messages: vec![report.text()], physics_failure })
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    tolerances: Tolerances,
    verdict: &'a str,
    reports: &'a [SuiteReport],
}

pub fn cmd_validate(cfg: &LoadedConfig, out: &Path) -> CliResult<Outcome> {
    let inputs = match &cfg.config.inputs {
        Some(v) if !v.is_empty() => v,
        _ => return Err(CliError::Usage("validate needs a non-empty `inputs` list".into())),
    };
    let tol = cfg.tolerances();
    let reports = inputs
        .iter()
        .map(|p| {
            let path = cfg.resolve(p);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let artifact: Artifact = serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: path.clone(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            if artifact.format != ARTIFACT_FORMAT {
                return Err(CliError::Config { path, message: format!("unsupported artifact format `{}`", artifact.format) });
            }
            artifact.validate(&p.display().to_string(), &tol)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let verdict = Verdict::all(reports.iter().map(|r| r.verdict()));
    let mut text = format!("overall: {verdict}\n");
    for r in &reports {
        text.push_str(&r.text());
    }
    let mut pending = Pending::new(out, cfg);
    pending.add(
        "validate_report.json",
        to_json(&ValidateReport {
            command: Command::Validate.name(),
            version: VERSION,
            config_sha256: &cfg.sha256,
            tolerances: tol,
            verdict: verdict.as_str(),
            reports: &reports,
        }),
    );
    pending.add("validate_report.txt", text.clone());
    Ok(Outcome { files: pending.write()?, messages: vec![text], physics_failure: failure_message(&reports) })
}
