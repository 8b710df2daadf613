//! Central spin coupled to `K` environment spins in the fully mixed state.
//!
//! The environment decomposes into collective-spin multiplets `(j, m)` with
//! multiplicity `d(j) = C(K, K/2 − j) − C(K, K/2 − j − 1)`. On each multiplet
//! the coupling `2g(σ₊J₋ + σ₋J₊)` rotates `|e, j, m⟩ ↔ |g, j, m−1⟩` with
//! frequency `2g·h(j, m)`, `h(j, m) = √(j(j+1) − m(m−1))`, which yields the
//! cosine sums below.

use super::{phase_covariant_qubit_map, singular_flags, Picture, SINGULAR_FLOOR};
use crate::coefficient_extraction::JointSystem;
use crate::error::{Result, SymError};
use crate::generator_core::{KineticCoefficients, Trajectory};
use crate::operator_algebra::{
    cplx, pauli, CMatrix, DensityOperator, SparseMatrix, Superoperator, TimeGrid, C64, ZERO,
};
use crate::special::binomial;
use crate::symmetry_basis::FreeHamiltonian;

/// Largest `K` accepted by the closed forms.
pub const MAX_CLOSED_FORM_SPINS: usize = 30;
/// Largest `K` accepted for the joint-space Hamiltonian (dimension `2^{K+1}`).
pub const MAX_JOINT_SPINS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct SpinStarConfig {
    pub k: usize,
    pub g: f64,
    pub omega: f64,
}

impl SpinStarConfig {
    pub fn new(k: usize, g: f64, omega: f64) -> Result<Self> {
        if k == 0 || k > MAX_CLOSED_FORM_SPINS {
            return Err(SymError::InvalidInput(format!(
                "number of environment spins must be in 1..={MAX_CLOSED_FORM_SPINS}, got {k}"
            )));
        }
        if !g.is_finite() || !omega.is_finite() {
            return Err(SymError::InvalidInput("g and ω must be finite".into()));
        }
        Ok(SpinStarConfig { k, g, omega })
    }
}

/// One `(j, m)` level with its weight `d(j)/2^K` and the two ladder
/// amplitudes `h(j, m)` and `h(j, −m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinStarLevel {
    pub j: f64,
    pub m: f64,
    pub weight: f64,
    pub h: f64,
    pub h_neg: f64,
}

fn ladder(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m - 1.0)).max(0.0).sqrt()
}

/// All `(j, m)` levels; `j` runs from `K/2` down in unit steps.
pub fn spinstar_levels(k: usize) -> Vec<SpinStarLevel> {
    let norm = 2f64.powi(k as i32);
    let mut out = Vec::new();
    for l in 0..=(k / 2) {
        let j = (k as f64 - 2.0 * l as f64) / 2.0;
        let d = binomial(k as u32, l as i64) - binomial(k as u32, l as i64 - 1);
        let weight = d as f64 / norm;
        let twice_j = k - 2 * l;
        for q in 0..=twice_j {
            let m = j - q as f64;
            out.push(SpinStarLevel { j, m, weight, h: ladder(j, m), h_neg: ladder(j, -m) });
        }
    }
    out
}

/// `κ_z`, `κ` and their exact derivatives on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinStarKappas {
    pub grid: TimeGrid,
    pub kappa_z: Vec<f64>,
    pub kappa: Vec<f64>,
    pub d_kappa_z: Vec<f64>,
    pub d_kappa: Vec<f64>,
}

/// `κ_z = Σ w cos(4hgt)`, `κ = Σ w cos(2h(j,m)gt) cos(2h(j,−m)gt)`.
pub fn spinstar_kappas(cfg: &SpinStarConfig, grid: &TimeGrid) -> SpinStarKappas {
    let levels = spinstar_levels(cfg.k);
    let g = cfg.g;
    let nt = grid.len();
    let mut out = SpinStarKappas {
        grid: grid.clone(),
        kappa_z: vec![0.0; nt],
        kappa: vec![0.0; nt],
        d_kappa_z: vec![0.0; nt],
        d_kappa: vec![0.0; nt],
    };
    for (i, &t) in grid.points().iter().enumerate() {
        let (mut kz, mut k, mut dkz, mut dk) = (0.0, 0.0, 0.0, 0.0);
        for lv in &levels {
            let az = 4.0 * lv.h * g;
            kz += lv.weight * (az * t).cos();
            dkz -= lv.weight * az * (az * t).sin();
            let (a, b) = (2.0 * lv.h * g, 2.0 * lv.h_neg * g);
            let (ca, sa, cb, sb) = ((a * t).cos(), (a * t).sin(), (b * t).cos(), (b * t).sin());
            k += lv.weight * ca * cb;
            dk += lv.weight * (-a * sa * cb - b * ca * sb);
        }
        out.kappa_z[i] = kz;
        out.kappa[i] = k;
        out.d_kappa_z[i] = dkz;
        out.d_kappa[i] = dk;
    }
    out
}

fn coherence_phase(cfg: &SpinStarConfig, t: f64, picture: Picture) -> C64 {
    match picture {
        Picture::Interaction => cplx(1.0, 0.0),
        // H_S = ωσz: σ₊ rotates at the Bohr frequency 2ω
        Picture::Schrodinger => cplx(0.0, -2.0 * cfg.omega * t).exp(),
    }
}

/// Exact reduced map: `Λ[σz] = κ_z σz`, `Λ[σ±] = κ e^{∓2iωt} σ±`, unital.
pub fn spinstar_exact_map(cfg: &SpinStarConfig, t: f64, picture: Picture) -> Result<Superoperator> {
    let kap = spinstar_kappas(cfg, &TimeGrid::new(vec![t])?);
    let ph = coherence_phase(cfg, t, picture);
    let k = cplx(kap.kappa[0], 0.0);
    Ok(phase_covariant_qubit_map(0.0, kap.kappa_z[0], k * ph, k * ph.conj()))
}

/// Laboratory-frame trajectory of the central spin.
pub fn spinstar_exact_trajectory(
    cfg: &SpinStarConfig,
    rho0: &DensityOperator,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if rho0.dim() != 2 {
        return Err(SymError::DimensionMismatch("central spin state must be 2×2".into()));
    }
    let states = grid
        .points()
        .iter()
        .map(|&t| spinstar_exact_map(cfg, t, Picture::Schrodinger)?.apply(rho0.matrix()))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(grid.clone(), states)
}

/// Exact time-local generator in terms of `η = κ̇_z/κ_z` (population
/// relaxation rate) and `η_z = κ̇_z/(2κ_z) − κ̇/κ` (extra dephasing). Values
/// at flagged points are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinStarGenerator {
    pub grid: TimeGrid,
    pub eta: Vec<f64>,
    pub eta_z: Vec<f64>,
    pub singular: Vec<bool>,
}

pub fn spinstar_exact_generator(cfg: &SpinStarConfig, grid: &TimeGrid) -> SpinStarGenerator {
    let k = spinstar_kappas(cfg, grid);
    let fz = singular_flags(grid, &k.kappa_z, &k.d_kappa_z, SINGULAR_FLOOR);
    let fk = singular_flags(grid, &k.kappa, &k.d_kappa, SINGULAR_FLOOR);
    let nt = grid.len();
    let singular: Vec<bool> = (0..nt).map(|i| fz[i] || fk[i]).collect();
    let mut eta = vec![f64::NAN; nt];
    let mut eta_z = vec![f64::NAN; nt];
    for i in (0..nt).filter(|&i| !singular[i]) {
        eta[i] = k.d_kappa_z[i] / k.kappa_z[i];
        eta_z[i] = k.d_kappa_z[i] / (2.0 * k.kappa_z[i]) - k.d_kappa[i] / k.kappa[i];
    }
    SpinStarGenerator { grid: grid.clone(), eta, eta_z, singular }
}

/// Kinetic coefficients of the exact generator (basis of `H_S = ωσz`):
/// `c(σ₋) = c(σ₊) = −η/2`, `d₁₁ = η_z`, `H̄ = 0`. Singular times are dropped.
pub fn spinstar_coefficients(gen: &SpinStarGenerator) -> Result<KineticCoefficients> {
    let keep: Vec<usize> = (0..gen.grid.len()).filter(|&i| !gen.singular[i]).collect();
    let grid = TimeGrid::new(keep.iter().map(|&i| gen.grid.points()[i]).collect())?;
    let c = keep.iter().map(|&i| vec![-0.5 * gen.eta[i]; 2]).collect();
    let d = keep.iter().map(|&i| CMatrix::from_element(1, 1, cplx(gen.eta_z[i], 0.0))).collect();
    KineticCoefficients::new(grid, 2, c, d, vec![CMatrix::zeros(2, 2); keep.len()])
}

/// Environment moments `Q_n = 2^{−K} tr((J₊J₋)ⁿ)` and the mixed moments
/// `R_m^{n−m} = 2^{−K} tr((J₊J₋)^m (J₋J₊)^{n−m})`, both from the multiplet
/// decomposition (`J₊J₋ → h(j,m)²`, `J₋J₊ → h(j,−m)²`).
pub fn spinstar_moments(cfg: &SpinStarConfig, n: u32, m: u32) -> Result<(f64, f64)> {
    if n > 12 || m > n {
        return Err(SymError::InvalidInput(format!("moment orders need m ≤ n ≤ 12, got n={n}, m={m}")));
    }
    let levels = spinstar_levels(cfg.k);
    let q = levels.iter().map(|l| l.weight * l.h.powi(2 * n as i32)).sum();
    let r = levels
        .iter()
        .map(|l| l.weight * l.h.powi(2 * m as i32) * l.h_neg.powi(2 * (n - m) as i32))
        .sum();
    Ok((q, r))
}

/// Joint system `H_S = ωσz`, `H_E = ωΣσz⁽ᵏ⁾`, `H_SE = 2g(σ₊J₋ + σ₋J₊)`,
/// `ρ_E = I/2^K`.
pub fn spinstar_joint_hamiltonian(cfg: &SpinStarConfig) -> Result<JointSystem> {
    let k = cfg.k;
    if k > MAX_JOINT_SPINS {
        return Err(SymError::InvalidInput(format!(
            "joint space limited to K ≤ {MAX_JOINT_SPINS} spins, got {k}"
        )));
    }
    let ne = 1usize << k;
    let h_s = FreeHamiltonian::new(pauli::sigma_z() * cplx(cfg.omega, 0.0))?;
    let h_e = SparseMatrix::from_triplets(ne, ne, (0..ne).map(|e| (e, e, cplx(cfg.omega * sz_sum(e, k), 0.0))).collect());
    let h_se = star_coupling(&ladder_up(2), k, cfg.g);
    JointSystem::new(h_s, h_e, h_se, DensityOperator::maximally_mixed(ne))
}

/// `Σ_k σz⁽ᵏ⁾` eigenvalue of the product state `e` (bit 0 = excited).
pub(super) fn sz_sum(e: usize, k: usize) -> f64 {
    let down = e.count_ones() as f64;
    (k as f64 - down) - down
}

/// Raising operator of the central system as a dense `n×n` matrix
/// (`σ₊` for `n = 2`).
pub(super) fn ladder_up(n: usize) -> CMatrix {
    if n == 2 {
        pauli::sigma_plus()
    } else {
        let mut s = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            s[(i, i + 1)] = cplx(2f64.sqrt(), 0.0);
        }
        s
    }
}

/// `2g(A⊗J₋ + A†⊗J₊)` with `J₋ = Σσ₋⁽ᵏ⁾` (flips a bit from 0 to 1).
pub(super) fn star_coupling(a: &CMatrix, k: usize, g: f64) -> SparseMatrix {
    let n = a.nrows();
    let ne = 1usize << k;
    let mut trip = Vec::new();
    for s in 0..n {
        for s2 in 0..n {
            let amp = a[(s, s2)];
            if amp == ZERO {
                continue;
            }
            let amp = amp * 2.0 * g;
            for e in 0..ne {
                for bit in 0..k {
                    let mask = 1usize << bit;
                    if e & mask == 0 {
                        // ⟨s, e|mask| A⊗J₋ |s2, e⟩
                        let (row, col) = (s * ne + (e | mask), s2 * ne + e);
                        trip.push((row, col, amp));
                        trip.push((col, row, amp.conj()));
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(n * ne, n * ne, trip)
}
