//! Time-local master-equation generators for open quantum systems whose
//! dynamics respect time-translation symmetry.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator_algebra`] — dense complex operators, superoperators in the
//!   column-stacking convention, Choi matrices, sparse joint-space matrices.
//! * [`symmetry_basis`] — eigenoperator bases of a free Hamiltonian, Bohr
//!   spectra, degeneracy lifting, block-structure verification.
//! * [`generator_core`] — assembling symmetric generators from kinetic
//!   coefficients, fitting coefficients back, propagation, exact maps from
//!   joint unitaries and generator extraction.
//! * [`coefficient_extraction`] — Maclaurin and Chebyshev expansions of the
//!   reduced dynamics computed from a joint Hamiltonian.
//! * [`reference_models`] — Jaynes–Cummings and spin-star closed forms.
//! * [`validators`] — physicality and symmetry constraint checks.

pub mod coefficient_extraction;
pub mod error;
pub mod generator_core;
pub mod operator_algebra;
pub mod reference_models;
pub mod special;
pub mod symmetry_basis;
pub mod validators;

pub use error::{Result, SymError};
