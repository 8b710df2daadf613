//! Experiment configuration: one JSON object per file, unknown keys rejected.
//!
//! ```json
//! {
//!   "model": { "type": "spinstar", "k": 10, "g": 1.0, "omega": 1.0 },
//!   "grid": { "t_max": 2.0, "n_points": 201 },
//!   "series": [ { "kind": "maclaurin", "order": 6 },
//!               { "kind": "chebyshev", "order": 38, "interval": 2.0 } ],
//!   "initial_state": { "r_z": 0.3, "r_pm": 0.1 },
//!   "tolerances": { "cptp": 1e-10 },
//!   "output": { "prefix": "fig3_" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use symstruct::coefficient_extraction::{GeneratorForm, JointSystem, SeriesSpec};
use symstruct::operator_algebra::{cplx, CMatrix, DensityOperator, SparseMatrix, TimeGrid};
use symstruct::reference_models::{jc_joint_hamiltonian, spinstar_joint_hamiltonian, JCConfig, SpinStarConfig};
use symstruct::symmetry_basis::FreeHamiltonian;
use symstruct::validators;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub output: OutputConfig,
    /// Artifacts consumed by `validate`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<PathBuf>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Jc {
        g: f64,
        omega: f64,
        env: JcEnvironment,
        /// Cavity truncation; defaults to one above the highest populated level.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_trunc: Option<usize>,
    },
    Spinstar { k: usize, g: f64, omega: f64 },
    /// Joint matrices read from a separate JSON file (see [`CustomMatrices`]).
    Custom { file: PathBuf },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum JcEnvironment {
    Fock(usize),
    Thermal { nbar: f64, n_max: usize },
    Populations(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKindConfig {
    Maclaurin,
    Chebyshev,
    /// Finite differences of the exact joint-unitary map.
    Exact,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FormConfig {
    #[default]
    MapDerivative,
    TimeLocal,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub kind: SeriesKindConfig,
    /// Expansion order M; Maclaurin defaults to 10, Chebyshev to ⌈λ_B T⌉ + 20.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Chebyshev window `[0, T]`; defaults to the grid's `t_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
    #[serde(default)]
    pub form: FormConfig,
    /// Finite-difference step of the exact kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// Qubit state `ρ = (I + r_z σz)/2 + r_pm (σ₊ + σ₋)`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub r_z: f64,
    #[serde(default)]
    pub r_pm: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymmetry: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cptp: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Prepended to every output file name.
    #[serde(default)]
    pub prefix: String,
}

/// Effective tolerances after applying overrides.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Tolerances {
    pub asymmetry: f64,
    pub monotone: f64,
    pub damping: f64,
    pub cptp: f64,
}

impl ToleranceOverrides {
    pub fn resolve(&self) -> Tolerances {
        Tolerances {
            asymmetry: self.asymmetry.unwrap_or(validators::ASYMMETRY_TOL),
            monotone: self.monotone.unwrap_or(validators::MONOTONE_TOL),
            damping: self.damping.unwrap_or(validators::DAMPING_TOL),
            cptp: self.cptp.unwrap_or(validators::CPTP_TOL),
        }
    }
}

impl Tolerances {
    pub fn describe(&self) -> String {
        use crate::format::g17;
        format!(
            "asymmetry={} monotone={} damping={} cptp={}",
            g17(self.asymmetry),
            g17(self.monotone),
            g17(self.damping),
            g17(self.cptp)
        )
    }
}

/// Joint matrices of a custom model, each a list of rows of `[re, im]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMatrices {
    pub h_s: Vec<Vec<[f64; 2]>>,
    pub h_e: Vec<Vec<[f64; 2]>>,
    pub h_se: Vec<Vec<[f64; 2]>>,
    pub rho_e: Vec<Vec<[f64; 2]>>,
}

/// A parsed config together with its location and content hash.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub sha256: String,
    pub config: ExperimentConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: format!("not UTF-8: {e}"),
        })?;
        let config: ExperimentConfig = parse_json(path, &text)?;
        let loaded = LoadedConfig { path: path.to_path_buf(), sha256: sha256_hex(&bytes), config };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn error(&self, message: impl Into<String>) -> CliError {
        CliError::Config { path: self.path.clone(), message: message.into() }
    }

    /// Paths in the config are relative to the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    /// Checks that do not depend on the command.
    fn validate(&self) -> CliResult<()> {
        let c = &self.config;
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        match &c.model {
            Some(ModelConfig::Jc { g, omega, .. }) | Some(ModelConfig::Spinstar { g, omega, .. }) => {
                if !g.is_finite() || *g < 0.0 || !omega.is_finite() {
                    return Err(self.error("model.g must be finite and ≥ 0, model.omega finite"));
                }
            }
            _ => {}
        }
        if let Some(g) = &c.grid {
            if g.n_points == 0 || (g.n_points > 1 && !finite_pos(g.t_max)) {
                return Err(self.error("grid needs n_points ≥ 1 and t_max > 0"));
            }
        }
        for (i, s) in c.series.iter().enumerate() {
            if s.order == Some(0) {
                return Err(self.error(format!("series[{i}].order must be ≥ 1")));
            }
            if s.interval.is_some_and(|t| !finite_pos(t)) || s.step.is_some_and(|h| !finite_pos(h)) {
                return Err(self.error(format!("series[{i}]: interval and step must be positive")));
            }
            if s.kind == SeriesKindConfig::Exact && (s.order.is_some() || s.interval.is_some()) {
                return Err(self.error(format!("series[{i}]: the exact kind takes no order or interval")));
            }
            if s.kind != SeriesKindConfig::Exact && s.step.is_some() {
                return Err(self.error(format!("series[{i}]: step only applies to the exact kind")));
            }
        }
        let tol = &c.tolerances;
        for (name, v) in [("asymmetry", tol.asymmetry), ("monotone", tol.monotone), ("damping", tol.damping), ("cptp", tol.cptp)] {
            if v.is_some_and(|x| !(x.is_finite() && x >= 0.0)) {
                return Err(self.error(format!("tolerances.{name} must be finite and ≥ 0")));
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        self.config.tolerances.resolve()
    }

    pub fn grid(&self) -> CliResult<TimeGrid> {
        let g = self.config.grid.as_ref().ok_or_else(|| self.error("missing `grid`"))?;
        Ok(TimeGrid::uniform(g.t_max, g.n_points)?)
    }

    pub fn model(&self) -> CliResult<&ModelConfig> {
        self.config.model.as_ref().ok_or_else(|| self.error("missing `model`"))
    }

    pub fn jc(&self) -> CliResult<JCConfig> {
        match self.model()? {
            ModelConfig::Jc { g, omega, env, n_trunc } => {
                let mut cfg = match env {
                    JcEnvironment::Fock(n) => JCConfig::fock(*g, *omega, *n),
                    JcEnvironment::Thermal { nbar, n_max } => JCConfig::thermal(*g, *omega, *nbar, *n_max)?,
                    JcEnvironment::Populations(p) => JCConfig::new(*g, *omega, p.clone(), p.len())?,
                };
                if let Some(n) = n_trunc {
                    cfg = JCConfig::new(cfg.g, cfg.omega, cfg.env_populations.clone(), *n)?;
                }
                Ok(cfg)
            }
            _ => Err(self.error("this command needs a `jc` model")),
        }
    }

    pub fn spinstar(&self) -> CliResult<SpinStarConfig> {
        match self.model()? {
            ModelConfig::Spinstar { k, g, omega } => Ok(SpinStarConfig::new(*k, *g, *omega)?),
            _ => Err(self.error("this command needs a `spinstar` model")),
        }
    }

    /// Joint system of whichever model is configured.
    pub fn joint_system(&self) -> CliResult<JointSystem> {
        match self.model()? {
            ModelConfig::Jc { .. } => Ok(jc_joint_hamiltonian(&self.jc()?)?),
            ModelConfig::Spinstar { .. } => Ok(spinstar_joint_hamiltonian(&self.spinstar()?)?),
            ModelConfig::Custom { file } => {
                let path = self.resolve(file);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                let m: CustomMatrices = parse_json(&path, &text)?;
                let err = |msg: String| CliError::Config { path: path.clone(), message: msg };
                let h_s = to_matrix(&m.h_s).map_err(|e| err(format!("h_s: {e}")))?;
                let h_e = to_matrix(&m.h_e).map_err(|e| err(format!("h_e: {e}")))?;
                let h_se = to_matrix(&m.h_se).map_err(|e| err(format!("h_se: {e}")))?;
                let rho_e = to_matrix(&m.rho_e).map_err(|e| err(format!("rho_e: {e}")))?;
                Ok(JointSystem::new(
                    FreeHamiltonian::new(h_s)?,
                    SparseMatrix::from_dense(&h_e, 0.0),
                    SparseMatrix::from_dense(&h_se, 0.0),
                    DensityOperator::new(rho_e, 1e-10)?,
                )?)
            }
        }
    }

    pub fn initial_state(&self) -> CliResult<DensityOperator> {
        let s = self.config.initial_state.as_ref().ok_or_else(|| self.error("missing `initial_state`"))?;
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[cplx(0.5 + s.r_z / 2.0, 0.0), cplx(s.r_pm, 0.0), cplx(s.r_pm, 0.0), cplx(0.5 - s.r_z / 2.0, 0.0)],
        );
        DensityOperator::new(m, 1e-12).map_err(|e| self.error(format!("initial_state: {e}")))
    }
}

fn to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err("expected a non-empty square list of rows".into());
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err("non-finite entry".into());
    }
    Ok(CMatrix::from_fn(n, n, |i, j| cplx(rows[i][j][0], rows[i][j][1])))
}

/// Library series spec for a configured series entry (not the exact kind).
pub fn series_spec(js: &JointSystem, s: &SeriesConfig, t_max: f64) -> SeriesSpec {
    let form = match s.form {
        FormConfig::MapDerivative => GeneratorForm::MapDerivative,
        FormConfig::TimeLocal => GeneratorForm::TimeLocal,
    };
    let spec = match s.kind {
        SeriesKindConfig::Maclaurin => SeriesSpec::maclaurin(s.order.unwrap_or(SeriesSpec::DEFAULT_MACLAURIN_ORDER)),
        SeriesKindConfig::Chebyshev | SeriesKindConfig::Exact => {
            let interval = s.interval.unwrap_or(t_max);
            match s.order {
                Some(m) => SeriesSpec::chebyshev(m, interval),
                None => SeriesSpec::default_chebyshev(js, interval),
            }
        }
    };
    spec.with_form(form)
}

/// Column label such as `maclaurin_M6` or `chebyshev_M38_time_local`.
pub fn series_label(spec: &SeriesSpec) -> String {
    use symstruct::coefficient_extraction::SeriesKind;
    let kind = match spec.kind {
        SeriesKind::Maclaurin => "maclaurin",
        SeriesKind::Chebyshev => "chebyshev",
    };
    let form = match spec.form {
        GeneratorForm::MapDerivative => "",
        GeneratorForm::TimeLocal => "_time_local",
    };
    format!("{kind}_M{}{form}", spec.order)
}
