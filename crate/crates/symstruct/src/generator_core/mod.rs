//! Generators with the symmetric structure imposed by time-translation
//! invariance.
//!
//! In the eigenoperator basis of the free Hamiltonian, a symmetric
//! time-local generator takes the form
//!
//! ```text
//! 𝓛(t) = −i[H̄(t), •]
//!        + Σ_α c_α(t) (F_α • F_α† − ½{F_α†F_α, •})
//!        + Σ_{i,j<N} d_ij(t) (P_i • P_j† − ½{P_j†P_i, •})
//! ```
//!
//! with real (possibly negative) rates `c_α`, a Hermitian matrix `d` on the
//! traceless diagonal operators, and a diagonal traceless `H̄`. This module
//! assembles that superoperator, recovers the coefficients from an arbitrary
//! symmetric generator, propagates states, and computes exact maps and
//! generators from a joint unitary evolution.

mod joint;
mod propagate;

use nalgebra::DMatrix;

pub use joint::{
    extract_generator, fd_weights, map_from_joint_unitary, to_interaction_picture, ExtractedGenerator,
    JointPropagator, SINGULAR_CONDITION,
};
pub use propagate::{propagate, propagate_map, propagate_map_prefix, Trajectory};

use crate::error::{Result, SymError};
use crate::operator_algebra::{
    cplx, hermiticity_residual, max_abs, CMatrix, CVector, Superoperator, TimeGrid, C64, ONE, ZERO,
};
use crate::symmetry_basis::{verify_block_structure, BlockResiduals, EigenoperatorBasis};

/// Time-sampled coefficients `c_α(t)`, `d_ij(t)`, `H̄(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticCoefficients {
    grid: TimeGrid,
    dim: usize,
    c: Vec<Vec<f64>>,
    d: Vec<CMatrix>,
    hbar: Vec<CMatrix>,
}

fn coefficient_tol(m: &CMatrix) -> f64 {
    1e-12 * max_abs(m).max(1.0)
}

impl KineticCoefficients {
    /// Validates shapes, finiteness and Hermiticity of every sample.
    pub fn new(grid: TimeGrid, dim: usize, c: Vec<Vec<f64>>, d: Vec<CMatrix>, hbar: Vec<CMatrix>) -> Result<Self> {
        let nt = grid.len();
        if c.len() != nt || d.len() != nt || hbar.len() != nt {
            return Err(SymError::DimensionMismatch(format!(
                "coefficient series lengths {} / {} / {} vs grid {nt}",
                c.len(),
                d.len(),
                hbar.len()
            )));
        }
        for k in 0..nt {
            check_sample(dim, &c[k], &d[k], &hbar[k])?;
        }
        Ok(KineticCoefficients { grid, dim, c, d, hbar })
    }

    /// All-zero coefficients on `grid`.
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        let nt = grid.len();
        KineticCoefficients {
            grid,
            dim,
            c: vec![vec![0.0; dim * (dim - 1)]; nt],
            d: vec![CMatrix::zeros(dim - 1, dim - 1); nt],
            hbar: vec![CMatrix::zeros(dim, dim); nt],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rates `c_α(t_k)` in transition order.
    pub fn c(&self, k: usize) -> &[f64] {
        &self.c[k]
    }

    pub fn d(&self, k: usize) -> &CMatrix {
        &self.d[k]
    }

    pub fn hbar(&self, k: usize) -> &CMatrix {
        &self.hbar[k]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

fn check_sample(dim: usize, c: &[f64], d: &CMatrix, hbar: &CMatrix) -> Result<()> {
    if c.len() != dim * (dim - 1) || d.shape() != (dim - 1, dim - 1) || hbar.shape() != (dim, dim) {
        return Err(SymError::DimensionMismatch(format!(
            "coefficients for N={dim}: |c|={}, d {:?}, H̄ {:?}",
            c.len(),
            d.shape(),
            hbar.shape()
        )));
    }
    if c.iter().any(|x| !x.is_finite())
        || !crate::operator_algebra::all_finite(d)
        || !crate::operator_algebra::all_finite(hbar)
    {
        return Err(SymError::InvalidInput("non-finite kinetic coefficient".into()));
    }
    let rd = hermiticity_residual(d);
    if rd > coefficient_tol(d) {
        return Err(SymError::NotHermitian { residual: rd });
    }
    let rh = hermiticity_residual(hbar);
    if rh > coefficient_tol(hbar) {
        return Err(SymError::NotHermitian { residual: rh });
    }
    Ok(())
}

/// Assembles the symmetric generator from one coefficient sample.
pub fn assemble_at(c: &[f64], d: &CMatrix, hbar: &CMatrix, basis: &EigenoperatorBasis) -> Result<Superoperator> {
    let n = basis.dim();
    check_sample(n, c, d, hbar)?;
    let mut l = Superoperator::hamiltonian(hbar).into_matrix();
    for (rate, t) in c.iter().zip(basis.transitions()) {
        if *rate != 0.0 {
            l += Superoperator::dissipator(&t.op).into_matrix() * cplx(*rate, 0.0);
        }
    }
    let p = basis.diagonal_ops();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            if d[(i, j)] != ZERO {
                l += Superoperator::dissipator_pair(&p[i], &p[j]).into_matrix() * d[(i, j)];
            }
        }
    }
    Superoperator::new(l)
}

/// Assembles the generator at grid index `t_index`.
pub fn assemble_generator(
    coeffs: &KineticCoefficients,
    basis: &EigenoperatorBasis,
    t_index: usize,
) -> Result<Superoperator> {
    if coeffs.dim() != basis.dim() {
        return Err(SymError::DimensionMismatch(format!(
            "coefficients for N={} with basis N={}",
            coeffs.dim(),
            basis.dim()
        )));
    }
    if t_index >= coeffs.len() {
        return Err(SymError::InvalidInput(format!("time index {t_index} out of range")));
    }
    assemble_at(coeffs.c(t_index), coeffs.d(t_index), coeffs.hbar(t_index), basis)
}

/// Superoperator of the raw form `Σ_α c_α D[F_α] + Σ_ij p_ij Π_i • Π_j`.
pub fn raw_superoperator(c: &[f64], p: &CMatrix, basis: &EigenoperatorBasis) -> Result<Superoperator> {
    let n = basis.dim();
    if c.len() != n * (n - 1) || p.shape() != (n, n) {
        return Err(SymError::DimensionMismatch("raw coefficients".into()));
    }
    let mut l = CMatrix::zeros(n * n, n * n);
    for (rate, t) in c.iter().zip(basis.transitions()) {
        l += Superoperator::dissipator(&t.op).into_matrix() * cplx(*rate, 0.0);
    }
    let pi = basis.projectors();
    for i in 0..n {
        for j in 0..n {
            l += pi[j].conjugate().kronecker(&pi[i]) * p[(i, j)];
        }
    }
    Superoperator::new(l)
}

/// GKLS data `(d, H̄)` obtained from a raw source–drain matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GklsDiagonal {
    pub d: CMatrix,
    pub hbar: CMatrix,
}

/// Converts the raw coefficients `p_ij` of `Σ p_ij Π_i • Π_j` into the
/// traceless-diagonal GKLS form.
///
/// With `P = OΠ` the change of basis gives `d̂ = O p Oᵀ`. Row and column `N`
/// (the identity direction) are split off: `P̂ = N^{−1/2} Σ_{i<N} d̂_iN P_i`
/// yields `H̄ = (P̂† − P̂)/2i`, and the remaining anticommutator part is fixed
/// by trace preservation. The reassembled generator equals the raw one
/// exactly when the raw term is trace-annihilating, i.e. `p_ii = 0`.
pub fn raw_to_gkls(p: &CMatrix, basis: &EigenoperatorBasis) -> Result<GklsDiagonal> {
    let n = basis.dim();
    if p.shape() != (n, n) {
        return Err(SymError::DimensionMismatch(format!("p {:?} vs N={n}", p.shape())));
    }
    let rp = hermiticity_residual(p);
    if rp > coefficient_tol(p) {
        return Err(SymError::NotHermitian { residual: rp });
    }
    let o: DMatrix<C64> = basis.gellmann().map(|x| cplx(x, 0.0));
    let dhat = &o * p * o.transpose();
    let d = crate::operator_algebra::hermitian_part(&dhat.view((0, 0), (n - 1, n - 1)).into_owned());
    let mut phat = CMatrix::zeros(n, n);
    for (k, pk) in basis.diagonal_ops().iter().take(n - 1).enumerate() {
        phat += pk * dhat[(k, n - 1)];
    }
    phat /= cplx((n as f64).sqrt(), 0.0);
    let hbar = (phat.adjoint() - &phat) / cplx(0.0, 2.0);
    Ok(GklsDiagonal { d, hbar: crate::operator_algebra::hermitian_part(&hbar) })
}

/// Coefficients recovered from a symmetric generator.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Real parts of the fitted rates, in transition order.
    pub c: Vec<f64>,
    /// Largest discarded imaginary part of any rate.
    pub c_imag_residue: f64,
    /// Raw source–drain matrix (Hermitian part).
    pub p: CMatrix,
    pub p_hermiticity_residue: f64,
    pub d: CMatrix,
    pub hbar: CMatrix,
    /// Euclidean residual of the linear solve.
    pub residual: f64,
    pub block: BlockResiduals,
}

/// Relative block-structure tolerance required before fitting.
pub const FIT_SYMMETRY_RTOL: f64 = 1e-6;

/// Recovers `c`, `p`, `d`, `H̄` from a generator with symmetric structure.
///
/// Harvests the transition eigenvalues `a_nm = ⟨F_nm, 𝓛[F_nm]⟩` and the
/// invariant block `b_ij = ⟨Π_i, 𝓛[Π_j]⟩`, then solves
///
/// * `c_(i←n) = b_in` for `i ≠ n`,
/// * `p_nn − Σ_{i≠n} c_(i←n) = b_nn`,
/// * `p_nm − ½ Σ_{i≠n} c_(i←n) − ½ Σ_{i≠m} c_(i←m) = a_nm`,
///
/// as one linear system by SVD least squares.
pub fn fit_coefficients_from_generator(l: &Superoperator, basis: &EigenoperatorBasis) -> Result<FitResult> {
    let n = basis.dim();
    let block = verify_block_structure(l, basis)?;
    let scale = max_abs(l.matrix()).max(1.0);
    let tol = FIT_SYMMETRY_RTOL * scale;
    if block.max_residual() > tol {
        return Err(SymError::SymmetryViolation { residual: block.max_residual(), tol });
    }
    let nf = n * (n - 1);
    let nunk = nf + n * n;
    let neq = 2 * nf + n;
    let mut a = CMatrix::zeros(neq, nunk);
    let mut rhs = CVector::zeros(neq);
    let trans = basis.transitions();
    let c_index = |to: usize, from: usize| basis.transition_index(to, from).unwrap();
    let p_index = |i: usize, j: usize| nf + i * n + j;
    let mut row = 0;
    for (alpha, t) in trans.iter().enumerate() {
        a[(row, alpha)] = ONE;
        rhs[row] = block.invariant_block[(t.n, t.m)];
        row += 1;
    }
    for m in 0..n {
        a[(row, p_index(m, m))] = ONE;
        for i in (0..n).filter(|&i| i != m) {
            a[(row, c_index(i, m))] = -ONE;
        }
        rhs[row] = block.invariant_block[(m, m)];
        row += 1;
    }
    for (alpha, t) in trans.iter().enumerate() {
        a[(row, p_index(t.n, t.m))] = ONE;
        for i in (0..n).filter(|&i| i != t.n) {
            a[(row, c_index(i, t.n))] -= cplx(0.5, 0.0);
        }
        for i in (0..n).filter(|&i| i != t.m) {
            a[(row, c_index(i, t.m))] -= cplx(0.5, 0.0);
        }
        rhs[row] = block.transition_eigenvalues[alpha];
        row += 1;
    }
    debug_assert_eq!(row, neq);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return Err(SymError::Numerical("coefficient system is singular".into()));
    }
    let x = svd
        .solve(&rhs, 1e-14 * smax)
        .map_err(|e| SymError::Numerical(format!("least-squares solve failed: {e}")))?;
    let residual = (&a * &x - &rhs).norm();
    let c: Vec<f64> = (0..nf).map(|k| x[k].re).collect();
    let c_imag_residue = (0..nf).map(|k| x[k].im.abs()).fold(0.0, f64::max);
    let p_full = CMatrix::from_fn(n, n, |i, j| x[p_index(i, j)]);
    let p_hermiticity_residue = hermiticity_residual(&p_full);
    let p = crate::operator_algebra::hermitian_part(&p_full);
    let GklsDiagonal { d, hbar } = raw_to_gkls(&p, basis)?;
    Ok(FitResult { c, c_imag_residue, p, p_hermiticity_residue, d, hbar, residual, block })
}
