//! Spin-1 variant of the star model whose free Hamiltonian has equally
//! spaced levels, hence degenerate Bohr frequencies.

use super::spinstar::{ladder_up, star_coupling, sz_sum, MAX_JOINT_SPINS};
use crate::error::{Result, SymError};
use crate::operator_algebra::{cplx, diag_real, CMatrix, DensityOperator, SparseMatrix};
use crate::symmetry_basis::{lift_degeneracy, FreeHamiltonian, LiftedHamiltonian};

/// Degenerate model and its ε-lifted counterpart. The lifted joint
/// Hamiltonian only differs in the system part; it no longer conserves
/// energy exactly, so both are kept as plain dense matrices.
#[derive(Clone, Debug)]
pub struct DegenerateSpinStar {
    pub h_s: FreeHamiltonian,
    pub lifted: LiftedHamiltonian,
    pub h_e: SparseMatrix,
    pub h_se: SparseMatrix,
    pub rho_e: DensityOperator,
    pub joint_degenerate: CMatrix,
    pub joint_lifted: CMatrix,
}

/// `H_S = diag(2ω, 0, −2ω)` (level 0 highest), `H_E = ωΣσz⁽ᵏ⁾`,
/// `H_SE = 2g(S₊J₋ + S₋J₊)` with spin-1 ladder operators, `ρ_E = I/2^K`.
pub fn spin1_star(k: usize, g: f64, omega: f64, epsilon: f64) -> Result<DegenerateSpinStar> {
    if k == 0 || k > MAX_JOINT_SPINS {
        return Err(SymError::InvalidInput(format!("K must be in 1..={MAX_JOINT_SPINS}")));
    }
    let ne = 1usize << k;
    let h_s = FreeHamiltonian::new(diag_real(&[2.0 * omega, 0.0, -2.0 * omega]))?;
    let lifted = lift_degeneracy(&h_s, epsilon)?;
    let h_e = SparseMatrix::from_triplets(ne, ne, (0..ne).map(|e| (e, e, cplx(omega * sz_sum(e, k), 0.0))).collect());
    let h_se = star_coupling(&ladder_up(3), k, g);
    let joint = |hs: &CMatrix| -> CMatrix {
        hs.kronecker(&CMatrix::identity(ne, ne)) + CMatrix::identity(3, 3).kronecker(&h_e.to_dense()) + h_se.to_dense()
    };
    Ok(DegenerateSpinStar {
        joint_degenerate: joint(h_s.matrix()),
        joint_lifted: joint(lifted.hamiltonian.matrix()),
        h_s,
        lifted,
        h_e,
        h_se,
        rho_e: DensityOperator::maximally_mixed(ne),
    })
}
