//! Closed-form oracles for two energy-conserving qubit models, the joint
//! Hamiltonians that reproduce them, and a deliberately degenerate variant.
//!
//! Both reference models give phase-covariant qubit maps. Writing a qubit
//! state as `ρ = ½(I + zσz) + r₊σ₊ + r₋σ₋` (level 0 = excited), every map of
//! this family is
//!
//! ```text
//! Λ[I] = I + shift·σz,   Λ[σz] = λ_z σz,   Λ[σ±] = λ_± σ±,
//! ```
//!
//! which [`phase_covariant_qubit_map`] turns into a superoperator.

mod degenerate;
mod jc;
mod spinstar;

pub use degenerate::{spin1_star, DegenerateSpinStar};
pub use jc::{
    jc_bloch_functions, jc_coefficients, jc_exact_map, jc_joint_hamiltonian, jc_rates, JCBlochFunctions, JCConfig,
    JCRates,
};
pub use spinstar::{
    spinstar_coefficients, spinstar_exact_generator, spinstar_exact_map, spinstar_exact_trajectory, spinstar_kappas,
    spinstar_joint_hamiltonian, spinstar_levels, spinstar_moments, SpinStarConfig, SpinStarGenerator, SpinStarKappas,
    SpinStarLevel, MAX_CLOSED_FORM_SPINS, MAX_JOINT_SPINS,
};

use crate::operator_algebra::{cplx, CMatrix, Superoperator, C64};
use crate::operator_algebra::TimeGrid;

/// Interaction picture (free rotation removed) or laboratory frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Picture {
    #[default]
    Interaction,
    Schrodinger,
}

/// Phase-covariant qubit map from its four characteristic numbers.
pub fn phase_covariant_qubit_map(shift: f64, lambda_z: f64, lambda_plus: C64, lambda_minus: C64) -> Superoperator {
    // images of the matrix units E_ij, columns at index i + 2j
    let mut m = CMatrix::zeros(4, 4);
    // E00 = (I + σz)/2 ↦ (I + (shift + λz)σz)/2
    m[(0, 0)] = cplx(0.5 * (1.0 + shift + lambda_z), 0.0);
    m[(3, 0)] = cplx(0.5 * (1.0 - shift - lambda_z), 0.0);
    // E11 = (I − σz)/2 ↦ (I + (shift − λz)σz)/2
    m[(0, 3)] = cplx(0.5 * (1.0 + shift - lambda_z), 0.0);
    m[(3, 3)] = cplx(0.5 * (1.0 - shift + lambda_z), 0.0);
    // E01 = σ₊, E10 = σ₋
    m[(2, 2)] = lambda_plus;
    m[(1, 1)] = lambda_minus;
    Superoperator::new(m).expect("4×4")
}

/// Flags grid points where `|x|` is below what the grid can resolve:
/// `|x(t_i)| < max(floor, |ẋ(t_i)|·h_i)` with `h_i` the local grid step.
/// Any sign change of `x` between neighbours flags both points, so no zero
/// crossing is missed on a coarse grid.
pub(crate) fn singular_flags(grid: &TimeGrid, x: &[f64], dx: &[f64], floor: f64) -> Vec<bool> {
    let mut flags: Vec<bool> = (0..grid.len())
        .map(|i| !(x[i].abs() >= floor.max(dx[i].abs() * grid.local_step(i))))
        .collect();
    for i in 1..x.len() {
        if x[i - 1].signum() != x[i].signum() && x[i - 1] != 0.0 && x[i] != 0.0 {
            let (a, b) = (x[i - 1].abs(), x[i].abs());
            // flag the point closer to the crossing
            if a <= b {
                flags[i - 1] = true;
            } else {
                flags[i] = true;
            }
        }
    }
    flags
}

/// Absolute floor below which a Bloch function counts as zero.
pub const SINGULAR_FLOOR: f64 = 1e-10;
