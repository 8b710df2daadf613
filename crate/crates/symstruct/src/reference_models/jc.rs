//! Resonant Jaynes–Cummings model with a Fock-diagonal field.

use super::{phase_covariant_qubit_map, singular_flags, Picture, SINGULAR_FLOOR};
use crate::coefficient_extraction::JointSystem;
use crate::error::{Result, SymError};
use crate::generator_core::KineticCoefficients;
use crate::operator_algebra::{cplx, pauli, CMatrix, DensityOperator, SparseMatrix, Superoperator, TimeGrid};
use crate::symmetry_basis::FreeHamiltonian;

/// Populations above this in the top Fock level mean the truncation is too
/// small for exact excitation-conserving dynamics.
const TOP_LEVEL_LEAKAGE: f64 = 1e-10;

/// Qubit frequency `ω`, coupling `g` and the Fock populations `p_n`
/// (`n = 0..=n_trunc`) of the field.
#[derive(Clone, Debug, PartialEq)]
pub struct JCConfig {
    pub g: f64,
    pub omega: f64,
    pub env_populations: Vec<f64>,
    pub n_trunc: usize,
}

impl JCConfig {
    /// `env_populations` shorter than `n_trunc + 1` is zero-padded.
    pub fn new(g: f64, omega: f64, env_populations: Vec<f64>, n_trunc: usize) -> Result<Self> {
        if !g.is_finite() || !omega.is_finite() {
            return Err(SymError::InvalidInput("g and ω must be finite".into()));
        }
        if env_populations.len() > n_trunc + 1 {
            return Err(SymError::InvalidInput(format!(
                "{} populations given for Fock truncation {n_trunc}",
                env_populations.len()
            )));
        }
        if env_populations.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SymError::InvalidState("populations must be finite and non-negative".into()));
        }
        let total: f64 = env_populations.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SymError::InvalidState(format!("populations sum to {total}, not 1")));
        }
        let mut p = env_populations;
        p.resize(n_trunc + 1, 0.0);
        Ok(JCConfig { g, omega, env_populations: p, n_trunc })
    }

    /// Field in the Fock state `|n⟩`, truncated just above it.
    pub fn fock(g: f64, omega: f64, n: usize) -> Self {
        let mut p = vec![0.0; n + 2];
        p[n] = 1.0;
        JCConfig { g, omega, env_populations: p, n_trunc: n + 1 }
    }

    pub fn vacuum(g: f64, omega: f64) -> Self {
        Self::fock(g, omega, 0)
    }

    /// Geometric (thermal) distribution with mean `n̄`, cut at `n_max` and
    /// renormalized; the truncation leaves one empty level on top.
    pub fn thermal(g: f64, omega: f64, nbar: f64, n_max: usize) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(SymError::InvalidInput("mean photon number must be non-negative".into()));
        }
        let q = nbar / (1.0 + nbar);
        let mut p: Vec<f64> = (0..=n_max).map(|n| q.powi(n as i32)).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        Self::new(g, omega, p, n_max + 1)
    }

    fn populated(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.env_populations.iter().copied().enumerate().filter(|(_, p)| *p > 0.0)
    }
}

/// Bloch functions `η_∥`, `η_⊥`, `r` and their exact time derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct JCBlochFunctions {
    pub grid: TimeGrid,
    pub eta_par: Vec<f64>,
    pub eta_perp: Vec<f64>,
    pub r: Vec<f64>,
    pub d_eta_par: Vec<f64>,
    pub d_eta_perp: Vec<f64>,
    pub d_r: Vec<f64>,
}

/// Rates of the phase-covariant master equation. Values at flagged times
/// are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct JCRates {
    pub grid: TimeGrid,
    pub eta_par: Vec<f64>,
    pub eta_perp: Vec<f64>,
    pub r: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub gamma_z: Vec<f64>,
    pub singular: Vec<bool>,
}

/// `(w, ẇ)` with `w(n, t) = cos(g√n t)`.
fn w(g: f64, n: usize, t: f64) -> (f64, f64) {
    let k = g * (n as f64).sqrt();
    ((k * t).cos(), -k * (k * t).sin())
}

/// Bloch functions from the finite Fock sums, differentiated term by term.
pub fn jc_bloch_functions(cfg: &JCConfig, grid: &TimeGrid) -> JCBlochFunctions {
    let nt = grid.len();
    let mut out = JCBlochFunctions {
        grid: grid.clone(),
        eta_par: vec![0.0; nt],
        eta_perp: vec![0.0; nt],
        r: vec![0.0; nt],
        d_eta_par: vec![0.0; nt],
        d_eta_perp: vec![0.0; nt],
        d_r: vec![0.0; nt],
    };
    for (k, &t) in grid.points().iter().enumerate() {
        let (mut ep, mut eq, mut r, mut dep, mut deq, mut dr) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (n, p) in cfg.populated() {
            let (a, da) = w(cfg.g, n, t);
            let (b, db) = w(cfg.g, n + 1, t);
            ep += p * (a * a + b * b);
            dep += p * 2.0 * (a * da + b * db);
            r += p * (b * b - a * a);
            dr += p * 2.0 * (b * db - a * da);
            eq += p * a * b;
            deq += p * (da * b + a * db);
        }
        out.eta_par[k] = ep - 1.0;
        out.eta_perp[k] = eq;
        out.r[k] = r;
        out.d_eta_par[k] = dep;
        out.d_eta_perp[k] = deq;
        out.d_r[k] = dr;
    }
    out
}

/// Time-dependent rates `γ_±`, `γ_z`.
///
/// `γ_± = (η_∥/2)·d/dt[(1 ± r)/η_∥]` and `γ_z = ¼(η̇_∥/η_∥ − 2η̇_⊥/η_⊥)`.
/// A point is flagged singular when `η_∥` or `η_⊥` is within one local grid
/// step of a zero (see the module docs of `reference_models`).
pub fn jc_rates(cfg: &JCConfig, grid: &TimeGrid) -> JCRates {
    let b = jc_bloch_functions(cfg, grid);
    let f_par = singular_flags(grid, &b.eta_par, &b.d_eta_par, SINGULAR_FLOOR);
    let f_perp = singular_flags(grid, &b.eta_perp, &b.d_eta_perp, SINGULAR_FLOOR);
    let nt = grid.len();
    let mut rates = JCRates {
        grid: grid.clone(),
        eta_par: b.eta_par.clone(),
        eta_perp: b.eta_perp.clone(),
        r: b.r.clone(),
        gamma_plus: vec![f64::NAN; nt],
        gamma_minus: vec![f64::NAN; nt],
        gamma_z: vec![f64::NAN; nt],
        singular: (0..nt).map(|k| f_par[k] || f_perp[k]).collect(),
    };
    for k in 0..nt {
        if rates.singular[k] {
            continue;
        }
        let (ep, dep) = (b.eta_par[k], b.d_eta_par[k]);
        let (r, dr) = (b.r[k], b.d_r[k]);
        rates.gamma_plus[k] = (dr * ep - (1.0 + r) * dep) / (2.0 * ep);
        rates.gamma_minus[k] = (-dr * ep - (1.0 - r) * dep) / (2.0 * ep);
        rates.gamma_z[k] = 0.25 * (dep / ep - 2.0 * b.d_eta_perp[k] / b.eta_perp[k]);
    }
    rates
}

/// Kinetic coefficients of the rates in the eigenoperator basis of
/// `H_S = (ω/2)σz`: `c = (γ₋, γ₊)` for `(σ₋, σ₊)`, `d₁₁ = 2γ_z`, `H̄ = 0`.
/// Singular times are dropped; the returned grid holds the kept times.
pub fn jc_coefficients(rates: &JCRates) -> Result<KineticCoefficients> {
    let keep: Vec<usize> = (0..rates.grid.len()).filter(|&k| !rates.singular[k]).collect();
    let grid = TimeGrid::new(keep.iter().map(|&k| rates.grid.points()[k]).collect())?;
    let c = keep.iter().map(|&k| vec![rates.gamma_minus[k], rates.gamma_plus[k]]).collect();
    let d = keep.iter().map(|&k| CMatrix::from_element(1, 1, cplx(2.0 * rates.gamma_z[k], 0.0))).collect();
    let hbar = vec![CMatrix::zeros(2, 2); keep.len()];
    KineticCoefficients::new(grid, 2, c, d, hbar)
}

/// Exact reduced map at time `t`: `(x, y, z) ↦ (η_⊥x, η_⊥y, η_∥z + r)`,
/// with the coherences additionally rotated by `e^{∓iωt}` in the
/// Schrödinger picture.
pub fn jc_exact_map(cfg: &JCConfig, t: f64, picture: Picture) -> Result<Superoperator> {
    let grid = TimeGrid::new(vec![t])?;
    let b = jc_bloch_functions(cfg, &grid);
    let phase = match picture {
        Picture::Interaction => cplx(1.0, 0.0),
        Picture::Schrodinger => cplx(0.0, -cfg.omega * t).exp(),
    };
    let eq = cplx(b.eta_perp[0], 0.0);
    Ok(phase_covariant_qubit_map(b.r[0], b.eta_par[0], eq * phase, eq * phase.conj()))
}

/// Joint system `H_S = (ω/2)σz`, `H_E = ω n̂`,
/// `H_SE = g(σ₊⊗b + σ₋⊗b†)` with the field state `diag(p_n)`.
///
/// The interaction conserves the excitation number, so a truncation one
/// level above the highest populated Fock state is exact; any population in
/// the top level is rejected.
pub fn jc_joint_hamiltonian(cfg: &JCConfig) -> Result<JointSystem> {
    let ne = cfg.n_trunc + 1;
    let top = cfg.env_populations[cfg.n_trunc];
    if top > TOP_LEVEL_LEAKAGE {
        return Err(SymError::InvalidInput(format!(
            "Fock truncation {} too small: top level has population {top:.3e}",
            cfg.n_trunc
        )));
    }
    let h_s = FreeHamiltonian::new(pauli::sigma_z() * cplx(0.5 * cfg.omega, 0.0))?;
    let h_e = SparseMatrix::from_triplets(ne, ne, (0..ne).map(|n| (n, n, cplx(cfg.omega * n as f64, 0.0))).collect());
    // system index 0 = excited; joint index s·ne + n
    let mut trip = Vec::new();
    for n in 1..ne {
        let amp = cplx(cfg.g * (n as f64).sqrt(), 0.0);
        // σ₊⊗b : |g, n⟩ → |e, n−1⟩
        trip.push((n - 1, ne + n, amp));
        trip.push((ne + n, n - 1, amp));
    }
    let h_se = SparseMatrix::from_triplets(2 * ne, 2 * ne, trip);
    let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        ne,
        cfg.env_populations.iter().map(|&p| cplx(p, 0.0)),
    ));
    let rho_e = DensityOperator::new(rho, 1e-12)?;
    JointSystem::new(h_s, h_e, h_se, rho_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator_core::map_from_joint_unitary;
    use crate::operator_algebra::{choi_matrix, min_eigenvalue};

    #[test]
    fn vacuum_bloch_functions() {
        let cfg = JCConfig::vacuum(0.7, 1.0);
        let grid = TimeGrid::uniform(3.0, 31).unwrap();
        let b = jc_bloch_functions(&cfg, &grid);
        for (k, &t) in grid.points().iter().enumerate() {
            let c = (0.7 * t).cos();
            assert!((b.eta_par[k] - c * c).abs() < 1e-14);
            assert!((b.eta_perp[k] - c).abs() < 1e-14);
            assert!((b.r[k] - (c * c - 1.0)).abs() < 1e-14);
            assert!((b.eta_perp[k].powi(2) - b.eta_par[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_values() {
        let cfg = JCConfig::thermal(1.0, 1.0, 0.8, 12).unwrap();
        let b = jc_bloch_functions(&cfg, &TimeGrid::new(vec![0.0]).unwrap());
        assert!((b.eta_par[0] - 1.0).abs() < 1e-14);
        assert!((b.eta_perp[0] - 1.0).abs() < 1e-14);
        assert!(b.r[0].abs() < 1e-14);
    }

    #[test]
    fn vacuum_rates() {
        let g = 1.3;
        let cfg = JCConfig::vacuum(g, 1.0);
        let grid = TimeGrid::uniform(1.1, 101).unwrap();
        let r = jc_rates(&cfg, &grid);
        for (k, &t) in grid.points().iter().enumerate() {
            assert!(!r.singular[k]);
            assert!(r.gamma_plus[k].abs() < 1e-12 && r.gamma_z[k].abs() < 1e-12);
            let exact = 2.0 * g * (g * t).tan();
            assert!((r.gamma_minus[k] - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn fock_one_rates_go_negative_and_flag_zeros() {
        let cfg = JCConfig::fock(1.0, 1.0, 1);
        let grid = TimeGrid::uniform(4.0, 2001).unwrap();
        let r = jc_rates(&cfg, &grid);
        for series in [&r.gamma_plus, &r.gamma_minus, &r.gamma_z] {
            assert!(series.iter().any(|&x| x < -0.1));
        }
        // η_⊥ = cos(t)cos(√2 t) vanishes at t = π/2
        let k = grid.index_of(std::f64::consts::FRAC_PI_2, 1.1e-3).unwrap();
        assert!(r.singular[k]);
    }

    #[test]
    fn exact_map_rabi_oscillation() {
        let cfg = JCConfig::vacuum(0.9, 2.0);
        let t = 0.8;
        let m = jc_exact_map(&cfg, t, Picture::Schrodinger).unwrap();
        let rho = crate::operator_algebra::matrix_unit(2, 0, 0);
        let out = m.apply(&rho).unwrap();
        let z = (out[(0, 0)] - out[(1, 1)]).re;
        assert!((z - (2.0 * 0.9 * t).cos()).abs() < 1e-14);
        let id = jc_exact_map(&cfg, 0.0, Picture::Schrodinger).unwrap();
        assert!(id.max_abs_diff(&Superoperator::identity(2)) < 1e-15);
    }

    #[test]
    fn exact_map_is_completely_positive_for_thermal_field() {
        let cfg = JCConfig::thermal(1.0, 1.0, 1.5, 25).unwrap();
        for k in 0..40 {
            let m = jc_exact_map(&cfg, 0.25 * k as f64, Picture::Interaction).unwrap();
            assert!(min_eigenvalue(&choi_matrix(&m)).unwrap() > -1e-12);
        }
    }

    #[test]
    fn joint_unitary_reproduces_closed_form() {
        let cfg = JCConfig::thermal(0.6, 1.1, 0.5, 6).unwrap();
        let js = jc_joint_hamiltonian(&cfg).unwrap();
        assert!(js.residuals().energy_conservation <= 1e-12);
        let grid = TimeGrid::uniform(5.0, 11).unwrap();
        let maps = map_from_joint_unitary(&js.joint_hamiltonian_dense(), js.rho_e(), 2, &grid).unwrap();
        for (m, &t) in maps.iter().zip(grid.points()) {
            let exact = jc_exact_map(&cfg, t, Picture::Schrodinger).unwrap();
            assert!(m.max_abs_diff(&exact) < 1e-11, "t={t}");
        }
    }

    #[test]
    fn truncation_is_checked() {
        let cfg = JCConfig::new(1.0, 1.0, vec![0.5, 0.5], 1).unwrap();
        assert!(jc_joint_hamiltonian(&cfg).is_err());
        assert!(JCConfig::new(1.0, 1.0, vec![0.5, 0.6], 3).is_err());
    }
}
