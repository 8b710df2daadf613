//! The extraction artifact shared by `extract` (writer) and `validate`
//! (reader), and the validator suite run on it.

use serde::{Deserialize, Serialize};
use symstruct::generator_core::assemble_at;
use symstruct::operator_algebra::{cplx, CMatrix, Superoperator, TimeGrid};
use symstruct::symmetry_basis::{build_basis, EigenoperatorBasis, FreeHamiltonian};
use symstruct::validators::{
    asymmetry_integral_check, cptp_check, damping_matrix_check, trace_norm_monotone_check, transition_rates, Verdict,
};

use crate::config::Tolerances;
use crate::error::{CliError, CliResult};
use crate::format::g17;

pub const ARTIFACT_FORMAT: &str = "symstruct-extract/1";

/// Complex matrix as rows of `[re, im]`.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix, String> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err("ragged or empty matrix".into());
    }
    Ok(CMatrix::from_fn(nr, nc, |i, j| cplx(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionJson {
    pub n: usize,
    pub m: usize,
    pub omega: f64,
}

/// Coefficients at one time; absent where the generator is singular.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSample {
    pub t: f64,
    pub singular: bool,
    pub c: Option<Vec<f64>>,
    pub d: Option<MatrixJson>,
    pub hbar: Option<MatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSample {
    pub t: f64,
    /// `N² × N²` superoperator in column-stacking convention.
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub format: String,
    pub version: String,
    pub config_sha256: String,
    pub method: String,
    pub h_s: MatrixJson,
    /// Transition ordering of every `c` vector.
    pub transitions: Vec<TransitionJson>,
    pub samples: Vec<CoefficientSample>,
    /// `joint-unitary`, `re-propagated`, or `none`.
    pub map_source: String,
    pub maps: Vec<MapSample>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub verdict: String,
    /// Check-specific worst value (see `detail`).
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SuiteReport {
    pub source: String,
    pub verdict: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn verdict(&self) -> Verdict {
        parse_verdict(&self.verdict)
    }

    pub fn text(&self) -> String {
        let mut s = format!("{}: {}\n", self.source, self.verdict);
        for c in &self.checks {
            s.push_str(&format!("  {:<22} {:<12} worst={} ({})\n", c.name, c.verdict, g17(c.worst), c.detail));
        }
        s
    }
}

fn parse_verdict(s: &str) -> Verdict {
    match s {
        "PASS" => Verdict::Pass,
        "FAIL" => Verdict::Fail,
        _ => Verdict::Inconclusive,
    }
}

fn check(name: &str, verdict: Verdict, worst: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), verdict: verdict.as_str().into(), worst, detail: detail.into() }
}

impl Artifact {
    pub fn basis(&self) -> CliResult<EigenoperatorBasis> {
        let h = matrix_from_json(&self.h_s).map_err(|e| CliError::Usage(format!("artifact h_s: {e}")))?;
        Ok(build_basis(&FreeHamiltonian::new(h)?))
    }

    fn maps(&self) -> CliResult<Vec<Superoperator>> {
        self.maps
            .iter()
            .map(|m| {
                let mat = matrix_from_json(&m.matrix).map_err(|e| CliError::Usage(format!("map at t={}: {e}", m.t)))?;
                Ok(Superoperator::new(mat)?)
            })
            .collect()
    }

    /// Transition rates per sample; NaN where singular.
    fn rates(&self, basis: &EigenoperatorBasis) -> CliResult<Vec<Vec<f64>>> {
        let nf = basis.transitions().len();
        let mut out = vec![Vec::with_capacity(self.samples.len()); nf];
        for s in &self.samples {
            match (&s.c, &s.d, &s.hbar) {
                (Some(c), Some(d), Some(h)) if !s.singular => {
                    let bad = |e: String| CliError::Usage(format!("sample t={}: {e}", s.t));
                    let l = assemble_at(c, &matrix_from_json(d).map_err(bad)?, &matrix_from_json(h).map_err(bad)?, basis)?;
                    for (a, r) in transition_rates(&[l], basis)?.into_iter().enumerate() {
                        out[a].push(r[0]);
                    }
                }
                _ => out.iter_mut().for_each(|v| v.push(f64::NAN)),
            }
        }
        Ok(out)
    }

    /// Runs the validator suite: CPTP, trace-norm monotonicity and damping
    /// matrix on the stored maps, asymmetry integrals on the coefficients.
    pub fn validate(&self, source: &str, tol: &Tolerances) -> CliResult<SuiteReport> {
        let basis = self.basis()?;
        let maps = self.maps()?;
        let mut checks = Vec::new();
        if maps.is_empty() {
            for name in ["cptp", "trace_norm_monotone", "damping_matrix"] {
                checks.push(check(name, Verdict::Inconclusive, f64::NAN, "no maps in artifact"));
            }
        } else {
            let mut v = Vec::new();
            let mut worst = f64::INFINITY;
            let mut tp = 0.0f64;
            for m in &maps {
                let r = cptp_check(m, tol.cptp)?;
                v.push(r.verdict);
                worst = worst.min(r.choi_min_eigenvalue);
                tp = tp.max(r.trace_preservation_residual);
            }
            checks.push(check(
                "cptp",
                Verdict::all(v),
                worst,
                format!("min Choi eigenvalue over {} maps; max trace defect {}", maps.len(), g17(tp)),
            ));
            let mono = trace_norm_monotone_check(&maps, &basis, tol.monotone)?;
            checks.push(check(
                "trace_norm_monotone",
                mono.verdict,
                mono.max_abs_eigenvalue.iter().cloned().fold(0.0, f64::max),
                format!("max |λ_α|; structure residual {}", g17(mono.structure_residual)),
            ));
            let mut v = Vec::new();
            let mut worst = f64::INFINITY;
            for m in &maps {
                let r = damping_matrix_check(m, &basis, tol.damping)?;
                v.push(r.verdict);
                worst = worst.min(r.min_eigenvalue);
            }
            checks.push(check("damping_matrix", Verdict::all(v), worst, "min eigenvalue"));
        }
        let times: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        if times.is_empty() {
            checks.push(check("asymmetry_integrals", Verdict::Inconclusive, f64::NAN, "no coefficient samples"));
        } else {
            let grid = TimeGrid::new(times)?;
            let singular: Vec<bool> = self.samples.iter().map(|s| s.singular).collect();
            let rates = self.rates(&basis)?;
            let r = asymmetry_integral_check(&rates, &grid, Some(&singular), tol.asymmetry)?;
            let n_sing = singular.iter().filter(|&&s| s).count();
            checks.push(check(
                "asymmetry_integrals",
                r.verdict,
                r.worst_margin,
                format!("max running integral; {n_sing} singular samples"),
            ));
        }
        let verdict = Verdict::all(checks.iter().map(|c| parse_verdict(&c.verdict)));
        Ok(SuiteReport { source: source.into(), verdict: verdict.as_str().into(), checks })
    }
}
