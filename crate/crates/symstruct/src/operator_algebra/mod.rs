//! Dense complex operator and superoperator arithmetic.
//!
//! Conventions fixed for the whole crate:
//!
//! * ħ = 1; Hamiltonian entries are angular frequencies.
//! * Vectorization stacks columns, so `vec(A·X·B) = (Bᵀ ⊗ A)·vec(X)`. Since
//!   nalgebra stores matrices column-major, `vec` is a plain copy of the
//!   storage.
//! * Composite spaces are ordered system ⊗ environment.
//! * Qubit index 0 is the excited/up state: `σ_z = diag(1, −1)` and
//!   `σ₊ = |0⟩⟨1|`.

pub mod sparse;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, SymError};

pub use sparse::SparseMatrix;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Returns the dimension of a square matrix or a `NonSquare` error.
pub fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(SymError::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// max |A − A†| entrywise; infinite for non-square input.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(a - a.adjoint()))
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * cplx(0.5, 0.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Kronecker product `a ⊗ b` (system factor first).
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Partial trace over the environment of an operator on the `n·ne`
/// dimensional joint space.
pub fn partial_trace_env(rho: &CMatrix, n: usize, ne: usize) -> Result<CMatrix> {
    let d = check_square(rho)?;
    if d != n * ne {
        return Err(SymError::DimensionMismatch(format!(
            "joint dimension {d} does not factor as {n}·{ne}"
        )));
    }
    Ok(CMatrix::from_fn(n, n, |a, b| (0..ne).map(|e| rho[(a * ne + e, b * ne + e)]).sum()))
}

/// Hilbert–Schmidt inner product tr(a† b).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(SymError::DimensionMismatch(format!(
            "hs_inner {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Only the Hermitian part of the input is used.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = check_square(h)?;
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    check_square(h)?;
    let eig = SymmetricEigen::new(hermitian_part(h));
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Returns `exp(scale · a)`.
///
/// Hermitian inputs go through an eigen-decomposition, which keeps `e^{−iHt}`
/// unitary to roundoff; anything else uses nalgebra's scaling-and-squaring
/// Padé approximant.
pub fn matrix_exponential(a: &CMatrix, scale: C64) -> Result<CMatrix> {
    check_square(a)?;
    let herm_tol = 1e-12 * max_abs(a).max(1.0);
    if hermiticity_residual(a) <= herm_tol {
        let (vals, v) = eigh(a)?;
        let mut vd = v.clone();
        for (j, &e) in vals.iter().enumerate() {
            let p = (scale * e).exp();
            vd.column_mut(j).iter_mut().for_each(|z| *z *= p);
        }
        Ok(vd * v.adjoint())
    } else {
        Ok((a * scale).exp())
    }
}

/// Column-stacking vectorization.
pub fn vec_op(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec_op`] for an `n×n` operator.
pub fn devec(v: &CVector, n: usize) -> Result<CMatrix> {
    if v.len() != n * n {
        return Err(SymError::DimensionMismatch(format!("devec: length {} ≠ {n}²", v.len())));
    }
    Ok(CMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Matrix unit |i⟩⟨j| of dimension `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag_real(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(d.len(), d.iter().map(|&x| cplx(x, 0.0))))
}

/// Single-qubit operators in the `|0⟩ = excited` convention.
pub mod pauli {
    use super::{cplx, CMatrix};

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cplx(0., 0.), cplx(1., 0.), cplx(1., 0.), cplx(0., 0.)])
    }
    pub fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cplx(0., 0.), cplx(0., -1.), cplx(0., 1.), cplx(0., 0.)])
    }
    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cplx(1., 0.), cplx(0., 0.), cplx(0., 0.), cplx(-1., 0.)])
    }
    /// σ₊ = |e⟩⟨g|
    pub fn sigma_plus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cplx(0., 0.), cplx(1., 0.), cplx(0., 0.), cplx(0., 0.)])
    }
    /// σ₋ = |g⟩⟨e|
    pub fn sigma_minus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cplx(0., 0.), cplx(0., 0.), cplx(1., 0.), cplx(0., 0.)])
    }
}

/// A validated density operator: Hermitian, unit trace and positive
/// semidefinite, each within `tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    tol: f64,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        check_square(&matrix)?;
        if !all_finite(&matrix) {
            return Err(SymError::InvalidState("non-finite entries".into()));
        }
        let herm = hermiticity_residual(&matrix);
        if herm > tol {
            return Err(SymError::InvalidState(format!("not Hermitian (residual {herm:.3e})")));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > tol {
            return Err(SymError::InvalidState(format!("trace {tr} ≠ 1")));
        }
        let min_eig = min_eigenvalue(&matrix)?;
        if min_eig < -tol {
            return Err(SymError::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityOperator { matrix, tol })
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let nrm = psi.norm();
        if nrm == 0.0 {
            return Err(SymError::InvalidState("zero state vector".into()));
        }
        let p = psi / cplx(nrm, 0.0);
        Self::new(&p * p.adjoint(), 1e-12)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityOperator { matrix: identity(n) / cplx(n as f64, 0.0), tol: 1e-12 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Matrix of a linear map on `N×N` operators, acting on column-stacked
/// vectorizations.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d2 = check_square(&matrix)?;
        let dim = (d2 as f64).sqrt().round() as usize;
        if dim * dim != d2 {
            return Err(SymError::DimensionMismatch(format!("{d2} is not a perfect square")));
        }
        Ok(Superoperator { dim, matrix })
    }

    pub fn identity(n: usize) -> Self {
        Superoperator { dim: n, matrix: identity(n * n) }
    }

    pub fn zero(n: usize) -> Self {
        Superoperator { dim: n, matrix: CMatrix::zeros(n * n, n * n) }
    }

    /// X ↦ A·X
    pub fn left(a: &CMatrix) -> Self {
        let n = a.nrows();
        Superoperator { dim: n, matrix: identity(n).kronecker(a) }
    }

    /// X ↦ X·B
    pub fn right(b: &CMatrix) -> Self {
        let n = b.nrows();
        Superoperator { dim: n, matrix: b.transpose().kronecker(&identity(n)) }
    }

    /// X ↦ −i[H, X]
    pub fn hamiltonian(h: &CMatrix) -> Self {
        let m = (Self::left(h).matrix - Self::right(h).matrix) * (-I);
        Superoperator { dim: h.nrows(), matrix: m }
    }

    /// X ↦ A·X·B† − ½{B†A, X}, the general GKLS building block.
    pub fn dissipator_pair(a: &CMatrix, b: &CMatrix) -> Self {
        let n = a.nrows();
        let bda = b.adjoint() * a;
        let jump = b.conjugate().kronecker(a);
        let anti = identity(n).kronecker(&bda) + bda.transpose().kronecker(&identity(n));
        Superoperator { dim: n, matrix: jump - anti * cplx(0.5, 0.0) }
    }

    /// X ↦ F·X·F† − ½{F†F, X}
    pub fn dissipator(f: &CMatrix) -> Self {
        Self::dissipator_pair(f, f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(SymError::DimensionMismatch(format!(
                "superoperator on {}×{} applied to {:?}",
                self.dim,
                self.dim,
                x.shape()
            )));
        }
        devec(&(&self.matrix * vec_op(x)), self.dim)
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(SymError::DimensionMismatch("compose".into()));
        }
        Ok(Superoperator { dim: self.dim, matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(SymError::DimensionMismatch("add".into()));
        }
        Ok(Superoperator { dim: self.dim, matrix: &self.matrix + &other.matrix })
    }

    pub fn scale(&self, s: C64) -> Superoperator {
        Superoperator { dim: self.dim, matrix: &self.matrix * s }
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    /// Max absolute row sum — a cheap bound on the induced operator norm.
    pub fn inf_norm(&self) -> f64 {
        self.matrix.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Superoperator of X ↦ A·X·B†.
pub fn superop_sandwich(a: &CMatrix, b: &CMatrix) -> Result<Superoperator> {
    let n = check_square(a)?;
    if check_square(b)? != n {
        return Err(SymError::DimensionMismatch(format!(
            "sandwich {}×{} with {}×{}",
            n,
            n,
            b.nrows(),
            b.ncols()
        )));
    }
    Superoperator::new(b.conjugate().kronecker(a))
}

/// Choi matrix Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|) (input factor first).
pub fn choi_matrix(s: &Superoperator) -> CMatrix {
    let n = s.dim();
    let m = s.matrix();
    CMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, a) = (r / n, r % n);
        let (j, b) = (c / n, c % n);
        m[(a + b * n, i + j * n)]
    })
}

/// Strictly increasing, non-negative sample times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(SymError::InvalidInput("empty time grid".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(SymError::InvalidInput("non-finite time".into()));
        }
        if points[0] < 0.0 {
            return Err(SymError::InvalidInput("negative first time".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SymError::InvalidInput("time grid not strictly increasing".into()));
        }
        Ok(TimeGrid { points })
    }

    /// `n` equally spaced points on `[0, t_max]`; `n = 1` gives `{0}`.
    pub fn uniform(t_max: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(SymError::InvalidInput("grid needs at least one point".into())),
            1 => Self::new(vec![0.0]),
            _ => {
                if !(t_max > 0.0) {
                    return Err(SymError::InvalidInput("t_max must be positive".into()));
                }
                Self::new((0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect())
            }
        }
    }

    /// Clusters `c + k·h`, `k = −half..=half`, around each centre (points
    /// below zero are dropped). Finite-difference stencils on such a grid stay
    /// local to each cluster.
    pub fn clustered(centers: &[f64], h: f64, half: usize) -> Result<Self> {
        let mut pts = Vec::with_capacity(centers.len() * (2 * half + 1));
        for &c in centers {
            for k in -(half as i64)..=(half as i64) {
                let t = c + k as f64 * h;
                if t >= 0.0 {
                    pts.push(t);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest spacing to a neighbour of point `i` (0 for a single point).
    pub fn local_step(&self, i: usize) -> f64 {
        let p = &self.points;
        let left = if i > 0 { p[i] - p[i - 1] } else { 0.0 };
        let right = if i + 1 < p.len() { p[i + 1] - p[i] } else { 0.0 };
        left.max(right)
    }

    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        self.points.iter().position(|&x| (x - t).abs() <= tol)
    }
}
