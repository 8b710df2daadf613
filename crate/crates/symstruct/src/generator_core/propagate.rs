use crate::error::{Result, SymError};
use crate::operator_algebra::{
    cplx, devec, hermiticity_residual, min_eigenvalue, trace, vec_op, CMatrix, DensityOperator, Superoperator,
    TimeGrid,
};
use crate::symmetry_basis::EigenoperatorBasis;

use super::{assemble_generator, KineticCoefficients};

/// Upper bound on ‖𝓛‖·h for every Runge–Kutta substep.
const MAX_NORM_STEP: f64 = 0.05;
/// Trace drift, relative to `max(1, max|Y|)`, that aborts a propagation.
/// Relative so that a generator with negative rates (whose map grows
/// without bound) still propagates and can be judged by the CPTP check.
const MAX_TRACE_DRIFT: f64 = 1e-6;

/// States sampled on a time grid, with optional named observables.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<CMatrix>,
    observables: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<CMatrix>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(SymError::DimensionMismatch(format!(
                "{} states for {} grid points",
                states.len(),
                grid.len()
            )));
        }
        Ok(Trajectory { grid, states, observables: Vec::new() })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[CMatrix] {
        &self.states
    }

    /// Records `tr(ρ(t)·op)` (real part) under `name`.
    pub fn add_observable(&mut self, name: &str, op: &CMatrix) {
        let series = self.states.iter().map(|r| trace(&(r * op)).re).collect();
        self.observables.push((name.to_string(), series));
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn observables(&self) -> &[(String, Vec<f64>)] {
        &self.observables
    }

    /// Verifies that every state is a density operator within `tol`.
    pub fn check_states(&self, tol: f64) -> Result<()> {
        for (k, r) in self.states.iter().enumerate() {
            let h = hermiticity_residual(r);
            let tr = (trace(r) - cplx(1.0, 0.0)).norm();
            let me = min_eigenvalue(r)?;
            if h > tol || tr > tol || me < -tol {
                return Err(SymError::InvalidState(format!(
                    "state at t={} violates tolerance {tol:.1e}: herm {h:.2e}, trace {tr:.2e}, min eig {me:.2e}",
                    self.grid.points()[k]
                )));
            }
        }
        Ok(())
    }
}

/// Row vector τ with τ·vec(X) = tr X.
fn trace_functional(n: usize) -> Vec<usize> {
    (0..n).map(|a| a + a * n).collect()
}

fn traces(y: &CMatrix, diag: &[usize]) -> Vec<crate::operator_algebra::C64> {
    (0..y.ncols()).map(|c| diag.iter().map(|&r| y[(r, c)]).sum()).collect()
}

fn rk4(gens: &[Superoperator], grid: &TimeGrid, y0: CMatrix) -> Result<Vec<CMatrix>> {
    match rk4_prefix(gens, grid, y0) {
        (out, None) => Ok(out),
        (_, Some(e)) => Err(e),
    }
}

/// Classical RK4 for dY/dt = 𝓛(t)Y with 𝓛 linearly interpolated between
/// the grid samples. Returns the samples reached before any breakdown.
fn rk4_prefix(gens: &[Superoperator], grid: &TimeGrid, y0: CMatrix) -> (Vec<CMatrix>, Option<SymError>) {
    let n = gens[0].dim();
    let diag = trace_functional(n);
    let tr0 = traces(&y0, &diag);
    let pts = grid.points();
    let mut out = Vec::with_capacity(pts.len());
    let mut y = y0;
    out.push(y.clone());
    for k in 0..pts.len() - 1 {
        let dt = pts[k + 1] - pts[k];
        let (la, lb) = (gens[k].matrix(), gens[k + 1].matrix());
        let norm = gens[k].inf_norm().max(gens[k + 1].inf_norm());
        let nsub = ((norm * dt / MAX_NORM_STEP).ceil() as usize).max(1);
        let h = dt / nsub as f64;
        let at = |s: f64| -> CMatrix { la * cplx(1.0 - s, 0.0) + lb * cplx(s, 0.0) };
        for j in 0..nsub {
            let s0 = j as f64 / nsub as f64;
            let sm = (j as f64 + 0.5) / nsub as f64;
            let s1 = (j + 1) as f64 / nsub as f64;
            let (l0, lm, l1) = (at(s0), at(sm), at(s1));
            let k1 = &l0 * &y;
            let k2 = &lm * (&y + &k1 * cplx(0.5 * h, 0.0));
            let k3 = &lm * (&y + &k2 * cplx(0.5 * h, 0.0));
            let k4 = &l1 * (&y + &k3 * cplx(h, 0.0));
            y += (k1 + k2 * cplx(2.0, 0.0) + k3 * cplx(2.0, 0.0) + k4) * cplx(h / 6.0, 0.0);
        }
        let scale = y.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let drift =
            traces(&y, &diag).iter().zip(&tr0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        if drift > MAX_TRACE_DRIFT || !crate::operator_algebra::all_finite(&y) {
            let what = if crate::operator_algebra::all_finite(&y) {
                format!("relative trace drift {drift:.3e} exceeds {MAX_TRACE_DRIFT:.0e}")
            } else {
                "map overflowed".to_string()
            };
            return (out, Some(SymError::Numerical(format!("{what} at t={}", pts[k + 1]))));
        }
        out.push(y.clone());
    }
    (out, None)
}

fn generators(coeffs: &KineticCoefficients, basis: &EigenoperatorBasis) -> Result<Vec<Superoperator>> {
    (0..coeffs.len()).map(|k| assemble_generator(coeffs, basis, k)).collect()
}

/// Integrates dρ/dt = 𝓛(t)[ρ] over the coefficient grid.
pub fn propagate(
    coeffs: &KineticCoefficients,
    basis: &EigenoperatorBasis,
    rho0: &DensityOperator,
) -> Result<Trajectory> {
    let n = basis.dim();
    if rho0.dim() != n {
        return Err(SymError::DimensionMismatch(format!("initial state dim {} vs N={n}", rho0.dim())));
    }
    let gens = generators(coeffs, basis)?;
    let ys = rk4(&gens, coeffs.grid(), CMatrix::from_column_slice(n * n, 1, vec_op(rho0.matrix()).as_slice()))?;
    let states = ys
        .into_iter()
        .map(|y| devec(&y.column(0).into_owned(), n))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(coeffs.grid().clone(), states)
}

/// Integrates dΛ/dt = 𝓛(t)Λ with Λ(t₀) = 𝟙.
pub fn propagate_map(coeffs: &KineticCoefficients, basis: &EigenoperatorBasis) -> Result<Vec<Superoperator>> {
    let n = basis.dim();
    let gens = generators(coeffs, basis)?;
    rk4(&gens, coeffs.grid(), CMatrix::identity(n * n, n * n))?
        .into_iter()
        .map(Superoperator::new)
        .collect()
}

/// Like [`propagate_map`], but on breakdown (overflow under a generator
/// with negative rates, trace drift) returns the maps on the grid prefix
/// reached so far together with the error.
pub fn propagate_map_prefix(
    coeffs: &KineticCoefficients,
    basis: &EigenoperatorBasis,
) -> Result<(Vec<Superoperator>, Option<SymError>)> {
    let n = basis.dim();
    let gens = generators(coeffs, basis)?;
    let (ys, err) = rk4_prefix(&gens, coeffs.grid(), CMatrix::identity(n * n, n * n));
    let maps = ys.into_iter().map(Superoperator::new).collect::<Result<Vec<_>>>()?;
    Ok((maps, err))
}
