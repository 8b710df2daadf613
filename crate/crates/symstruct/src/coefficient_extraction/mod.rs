//! First-principles kinetic coefficients from a joint Hamiltonian.
//!
//! Under strict energy conservation, `[H_S + H_E, H_SE] = 0`, the
//! interaction-picture coupling is time independent and the
//! interaction-picture reduced map is
//!
//! ```text
//! Λ̃(t)[X] = tr_E(e^{−iCt}[X ⊗ ρ_E]),   C = [H_SE, •].
//! ```
//!
//! Two truncated expansions of this map are provided: the Maclaurin series
//! in `t` and a Chebyshev series of `C/λ_B` with Bessel coefficients. Both
//! reduce to time-independent system-space terms `tr_E(p(C)[Ŝ_β ⊗ ρ_E])`
//! computed once per basis element; evaluating a generator at any time is
//! then a cheap linear combination. The generator is fitted to the
//! symmetric form to yield kinetic coefficients.
//!
//! All coefficients produced here refer to the interaction picture: `H̄`
//! excludes the bare system Hamiltonian, the dissipative coefficients are
//! picture independent.

mod sectors;
mod series;

use log::warn;
use rayon::prelude::*;

pub use series::{
    chebyshev_generator_action, maclaurin_generator_action, spectral_bound, GeneratorForm, SeriesExpansion,
    SeriesKind, SeriesSpec,
};

use crate::error::{Result, SymError};
use crate::generator_core::{
    assemble_generator, extract_generator, fit_coefficients_from_generator, map_from_joint_unitary,
    to_interaction_picture, KineticCoefficients,
};
use crate::operator_algebra::{
    hermiticity_residual, trace, CMatrix, DensityOperator, SparseMatrix, Superoperator, TimeGrid,
};
use crate::symmetry_basis::{
    bohr_spectrum, build_basis, default_degeneracy_tol, EigenoperatorBasis, FreeHamiltonian,
};

/// Relative tolerance of the strict-energy-conservation check.
pub const ENERGY_CONSERVATION_RTOL: f64 = 1e-10;
/// Absolute tolerance of the environment-stationarity check.
pub const STATIONARITY_TOL: f64 = 1e-10;

/// Residual norms of the structural assumptions on a joint system.
#[derive(Clone, Debug, PartialEq)]
pub struct PostulateResiduals {
    /// ‖[H_S⊗I + I⊗H_E, H_SE]‖_F
    pub energy_conservation: f64,
    /// ‖H_SE‖_F, the scale of the check above.
    pub coupling_norm: f64,
    /// ‖[ρ_E, H_E]‖_F
    pub stationarity: f64,
    /// ‖tr_E(H_SE (I ⊗ ρ_E))‖_F before centering.
    pub mean_field: f64,
}

/// System, environment and interaction Hamiltonians plus the initial
/// environment state. Joint-space operators are stored sparse.
#[derive(Clone, Debug)]
pub struct JointSystem {
    h_s: FreeHamiltonian,
    h_e: SparseMatrix,
    h_se: SparseMatrix,
    rho_e: DensityOperator,
    residuals: PostulateResiduals,
}

/// `tr_E(H (I ⊗ ρ_E))` for a sparse joint operator.
fn mean_field(h_se: &SparseMatrix, rho_e: &CMatrix, n: usize) -> CMatrix {
    let ne = rho_e.nrows();
    let mut m = CMatrix::zeros(n, n);
    for (r, c, v) in h_se.triplets() {
        let (a, e) = (r / ne, r % ne);
        let (b, f) = (c / ne, c % ne);
        m[(a, b)] += v * rho_e[(f, e)];
    }
    m
}

impl JointSystem {
    /// Validates both structural postulates. A nonzero mean-field term
    /// `tr_E(H_SE (I⊗ρ_E))` is moved into `H_S` (with a warning) so that
    /// the interaction is centred.
    pub fn new(h_s: FreeHamiltonian, h_e: SparseMatrix, h_se: SparseMatrix, rho_e: DensityOperator) -> Result<Self> {
        let n = h_s.dim();
        let ne = rho_e.dim();
        if h_e.nrows() != ne || h_e.ncols() != ne {
            return Err(SymError::DimensionMismatch(format!("H_E is {}×{}, ρ_E is {ne}×{ne}", h_e.nrows(), h_e.ncols())));
        }
        if h_se.nrows() != n * ne || h_se.ncols() != n * ne {
            return Err(SymError::DimensionMismatch(format!(
                "H_SE is {}×{}, expected {}",
                h_se.nrows(),
                h_se.ncols(),
                n * ne
            )));
        }
        for (name, m) in [("H_E", &h_e), ("H_SE", &h_se)] {
            let r = m.hermiticity_residual();
            if r > 1e-12 * m.max_abs().max(1.0) {
                warn!("{name} is not Hermitian (residual {r:.3e})");
                return Err(SymError::NotHermitian { residual: r });
            }
        }
        let h0 = SparseMatrix::from_dense(h_s.matrix(), 0.0)
            .kron(&SparseMatrix::identity(ne))
            .add(&SparseMatrix::identity(n).kron(&h_e))?;
        let comm = h0.mul_sparse(&h_se)?.sub(&h_se.mul_sparse(&h0)?)?;
        let coupling_norm = h_se.frobenius_norm();
        let energy_conservation = comm.frobenius_norm();
        let stationarity = (h_e.mul_dense(rho_e.matrix())? - h_e.dense_mul(rho_e.matrix())?).norm();
        let mf = mean_field(&h_se, rho_e.matrix(), n);
        let residuals = PostulateResiduals {
            energy_conservation,
            coupling_norm,
            stationarity,
            mean_field: mf.norm(),
        };
        if energy_conservation > ENERGY_CONSERVATION_RTOL * coupling_norm {
            return Err(SymError::PostulateViolation {
                which: "strict energy conservation [H_S + H_E, H_SE] = 0".into(),
                residual: energy_conservation,
            });
        }
        if stationarity > STATIONARITY_TOL {
            return Err(SymError::PostulateViolation {
                which: "stationary environment [ρ_E, H_E] = 0".into(),
                residual: stationarity,
            });
        }
        let (h_s, h_se) = if residuals.mean_field > 1e-12 * coupling_norm.max(1.0) {
            warn!(
                "interaction has a mean-field part of norm {:.3e}; absorbing it into H_S",
                residuals.mean_field
            );
            let hs = FreeHamiltonian::new(crate::operator_algebra::hermitian_part(&(h_s.matrix() + &mf)))?;
            let shift = SparseMatrix::from_dense(&mf, 0.0).kron(&SparseMatrix::identity(ne));
            (hs, h_se.sub(&shift)?)
        } else {
            (h_s, h_se)
        };
        Ok(JointSystem { h_s, h_e, h_se, rho_e, residuals })
    }

    pub fn h_s(&self) -> &FreeHamiltonian {
        &self.h_s
    }

    pub fn h_e(&self) -> &SparseMatrix {
        &self.h_e
    }

    pub fn h_se(&self) -> &SparseMatrix {
        &self.h_se
    }

    pub fn rho_e(&self) -> &DensityOperator {
        &self.rho_e
    }

    pub fn residuals(&self) -> &PostulateResiduals {
        &self.residuals
    }

    pub fn n(&self) -> usize {
        self.h_s.dim()
    }

    pub fn ne(&self) -> usize {
        self.rho_e.dim()
    }

    /// `H_S ⊗ I + I ⊗ H_E`
    pub fn free_joint(&self) -> SparseMatrix {
        SparseMatrix::from_dense(self.h_s.matrix(), 0.0)
            .kron(&SparseMatrix::identity(self.ne()))
            .add(&SparseMatrix::identity(self.n()).kron(&self.h_e))
            .expect("shapes validated at construction")
    }

    /// Full joint Hamiltonian as a dense matrix.
    pub fn joint_hamiltonian_dense(&self) -> CMatrix {
        self.free_joint().add(&self.h_se).expect("shapes validated at construction").to_dense()
    }

    /// Eigenoperator basis of `H_S`.
    pub fn basis(&self) -> EigenoperatorBasis {
        build_basis(&self.h_s)
    }

    /// `X ⊗ ρ_E` as a dense joint operator.
    pub fn lift(&self, x: &CMatrix) -> CMatrix {
        x.kronecker(self.rho_e.matrix())
    }
}

/// Kinetic coefficients extracted from a joint system on a grid.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub coeffs: KineticCoefficients,
    /// Raw source–drain matrices `p(t)`.
    pub raw: Vec<CMatrix>,
    /// Generators the coefficients were fitted to (interaction picture).
    pub generators: Vec<Superoperator>,
    pub max_fit_residual: f64,
    pub max_c_imag_residue: f64,
    pub max_p_hermiticity_residue: f64,
    pub lambda_b: Option<f64>,
    pub warnings: Vec<String>,
}

fn require_non_degenerate(h: &FreeHamiltonian) -> Result<()> {
    let spec = bohr_spectrum(h, default_degeneracy_tol(h));
    if spec.degenerate {
        return Err(SymError::Degenerate(format!(
            "Bohr frequencies of H_S are degenerate (min gap {:.3e}); lift the degeneracy first",
            spec.min_gap
        )));
    }
    Ok(())
}

fn fit_all(
    generators: Vec<Superoperator>,
    basis: &EigenoperatorBasis,
    grid: &TimeGrid,
    lambda_b: Option<f64>,
    warnings: Vec<String>,
) -> Result<Extraction> {
    let fits = generators
        .par_iter()
        .map(|l| fit_coefficients_from_generator(l, basis))
        .collect::<Result<Vec<_>>>()?;
    let n = basis.dim();
    let coeffs = KineticCoefficients::new(
        grid.clone(),
        n,
        fits.iter().map(|f| f.c.clone()).collect(),
        fits.iter().map(|f| f.d.clone()).collect(),
        fits.iter().map(|f| f.hbar.clone()).collect(),
    )?;
    Ok(Extraction {
        coeffs,
        raw: fits.iter().map(|f| f.p.clone()).collect(),
        generators,
        max_fit_residual: fits.iter().map(|f| f.residual).fold(0.0, f64::max),
        max_c_imag_residue: fits.iter().map(|f| f.c_imag_residue).fold(0.0, f64::max),
        max_p_hermiticity_residue: fits.iter().map(|f| f.p_hermiticity_residue).fold(0.0, f64::max),
        lambda_b,
        warnings,
    })
}

/// Applies the truncated generator of `spec` to every basis element at each
/// grid time and fits the symmetric coefficients.
pub fn extract_kinetic_coefficients(js: &JointSystem, spec: &SeriesSpec, grid: &TimeGrid) -> Result<Extraction> {
    require_non_degenerate(js.h_s())?;
    let basis = js.basis();
    let expansion = SeriesExpansion::new(js, spec, &basis)?;
    let generators = grid
        .points()
        .par_iter()
        .map(|&t| expansion.generator(t, spec.form))
        .collect::<Result<Vec<_>>>()?;
    fit_all(generators, &basis, grid, expansion.lambda_b(), expansion.warnings().to_vec())
}

/// Exact interaction-picture generators at `centers`, obtained from the
/// joint unitary map differentiated on clusters `t ± k·h` (k ≤ 2).
///
/// Returns, for each centre, the generator (or `None` when Λ is singular)
/// and the condition number of Λ.
pub fn exact_generators(js: &JointSystem, centers: &[f64], h: f64) -> Result<Vec<(f64, Option<Superoperator>, f64)>> {
    let grid = TimeGrid::clustered(centers, h, 2)?;
    let maps = map_from_joint_unitary(&js.joint_hamiltonian_dense(), js.rho_e(), js.n(), &grid)?;
    let maps = to_interaction_picture(&maps, js.h_s(), &grid)?;
    let ext = extract_generator(&maps, &grid)?;
    centers
        .iter()
        .map(|&c| {
            let k = grid
                .index_of(c, 1e-12 * c.abs().max(1.0))
                .ok_or_else(|| SymError::InvalidInput(format!("centre {c} not on grid")))?;
            Ok((c, ext[k].generator.clone(), ext[k].condition))
        })
        .collect()
}

/// Fits coefficients to exact generators at `centers` (skipping singular
/// times). Returns the grid of retained times and the extraction.
pub fn extract_exact_coefficients(js: &JointSystem, centers: &[f64], h: f64) -> Result<(Vec<f64>, Extraction)> {
    require_non_degenerate(js.h_s())?;
    let basis = js.basis();
    let mut times = Vec::new();
    let mut gens = Vec::new();
    let mut warnings = Vec::new();
    for (t, g, cond) in exact_generators(js, centers, h)? {
        match g {
            Some(g) => {
                times.push(t);
                gens.push(g);
            }
            None => warnings.push(format!("SINGULAR: map at t={t} has condition number {cond:.3e}")),
        }
    }
    let grid = TimeGrid::new(times.clone())?;
    Ok((times, fit_all(gens, &basis, &grid, None, warnings)?))
}

/// Centred-interaction check used by tests: `‖tr_E(H_SE(I⊗ρ_E))‖`.
pub fn mean_field_norm(js: &JointSystem) -> f64 {
    mean_field(js.h_se(), js.rho_e().matrix(), js.n()).norm()
}

/// Largest Hermiticity defect of the `d` samples of an extraction.
pub fn max_d_hermiticity(ex: &Extraction) -> f64 {
    (0..ex.coeffs.len()).map(|k| hermiticity_residual(ex.coeffs.d(k))).fold(0.0, f64::max)
}

/// Rate of change `d⟨O⟩/dt` predicted by extracted coefficients, for an
/// observable `O` commuting with `H_S` (so both pictures agree).
///
/// With [`GeneratorForm::MapDerivative`] the assembled generator is the
/// derivative of the truncated map and is applied to `ρ(0)`; with
/// [`GeneratorForm::TimeLocal`] it is applied to `Λ^(M)(t)[ρ(0)]`.
pub fn observable_rate(
    js: &JointSystem,
    spec: &SeriesSpec,
    grid: &TimeGrid,
    rho0: &DensityOperator,
    op: &CMatrix,
) -> Result<(Extraction, Vec<f64>)> {
    if rho0.dim() != js.n() || op.shape() != (js.n(), js.n()) {
        return Err(SymError::DimensionMismatch("state or observable vs system dimension".into()));
    }
    let ex = extract_kinetic_coefficients(js, spec, grid)?;
    let basis = js.basis();
    let expansion = match spec.form {
        GeneratorForm::MapDerivative => None,
        GeneratorForm::TimeLocal => Some(SeriesExpansion::new(js, spec, &basis)?),
    };
    let rates = (0..grid.len())
        .map(|k| {
            let l = assemble_generator(&ex.coeffs, &basis, k)?;
            let rho = match &expansion {
                None => rho0.matrix().clone(),
                Some(e) => e.map(grid.points()[k])?.apply(rho0.matrix())?,
            };
            Ok(trace(&(op * l.apply(&rho)?)).re)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ex, rates))
}
