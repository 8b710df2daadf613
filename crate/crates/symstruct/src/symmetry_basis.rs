//! Eigenoperator bases of a free propagator.
//!
//! For a non-degenerate free Hamiltonian `H_S = Σ ε_n |n⟩⟨n|` the operators
//! `F_nm = |n⟩⟨m|` (n ≠ m) and `Π_j = |j⟩⟨j|` are eigenoperators of the free
//! evolution: `U_S(t) F_nm U_S(t)† = e^{−iω_nm t} F_nm` with Bohr frequency
//! `ω_nm = ε_n − ε_m`, and every `Π_j` is invariant. A superoperator that
//! commutes with the free evolution is block diagonal in this basis: each
//! transition operator is an eigenvector (given non-degenerate Bohr
//! frequencies) and the projectors span an invariant block.
//!
//! The diagonal block is also expressed in an orthonormal generalized
//! Gell-Mann basis `P_1 … P_{N−1}` (traceless) plus `P_N = I/√N`.

use nalgebra::{DMatrix, Schur};

use crate::error::{Result, SymError};
use crate::operator_algebra::{
    check_square, cplx, eigh, hermiticity_residual, hs_inner, max_abs, CMatrix, Superoperator, C64, ZERO,
};

/// Relative tolerance (fraction of the spectral width) below which two
/// energies or two Bohr frequencies are considered equal.
pub const DEFAULT_DEGENERACY_RTOL: f64 = 1e-9;

/// Hermitian system Hamiltonian with its ordered, phase-fixed eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeHamiltonian {
    matrix: CMatrix,
    energies: Vec<f64>,
    vectors: CMatrix,
}

/// Makes the largest-magnitude component of every column real and positive.
fn fix_phases(v: &mut CMatrix) {
    for j in 0..v.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..v.nrows() {
            let a = v[(i, j)].norm();
            // strict comparison with a small margin keeps the choice stable
            // under roundoff when two components tie
            if a > best_abs + 1e-12 {
                best = i;
                best_abs = a;
            }
        }
        let phase = v[(best, j)] / cplx(best_abs, 0.0);
        let fix = phase.conj();
        v.column_mut(j).iter_mut().for_each(|z| *z *= fix);
        v[(best, j)] = cplx(v[(best, j)].re, 0.0);
    }
}

impl FreeHamiltonian {
    /// Diagonalizes `h`. Rejects non-Hermitian input and degenerate energy
    /// levels (closer than `1e−9` of the spectral width).
    pub fn new(h: CMatrix) -> Result<Self> {
        check_square(&h)?;
        let scale = max_abs(&h).max(1.0);
        let herm = hermiticity_residual(&h);
        if herm > 1e-12 * scale {
            return Err(SymError::NotHermitian { residual: herm });
        }
        let (energies, mut vectors) = eigh(&h)?;
        fix_phases(&mut vectors);
        Self::check_levels(&energies)?;
        Ok(FreeHamiltonian { matrix: h, energies, vectors })
    }

    /// Hamiltonian with the given energies in the computational basis.
    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        Self::new(crate::operator_algebra::diag_real(energies))
    }

    /// Effective Hamiltonian of a unitary symmetry operation `U = e^{−iH}`.
    ///
    /// The eigenphases `e^{iθ_n}` of `U` are mapped to energies `ε_n = −θ_n`
    /// with `θ_n ∈ (−π, π]`. This lets the basis construction be reused for
    /// any symmetry generated by a single unitary with non-degenerate
    /// spectrum.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let n = check_square(u)?;
        let defect = max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)));
        if defect > 1e-10 {
            return Err(SymError::InvalidInput(format!("matrix is not unitary (defect {defect:.3e})")));
        }
        // For a normal matrix the Schur form is diagonal and Q holds the
        // eigenvectors.
        let (q, t) = Schur::new(u.clone()).unpack();
        let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (-t[(i, i)].arg(), i)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let energies: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        Self::check_levels(&energies)?;
        let mut vectors = CMatrix::from_fn(n, n, |r, c| q[(r, pairs[c].1)]);
        fix_phases(&mut vectors);
        let d = crate::operator_algebra::diag_real(&energies);
        let matrix = crate::operator_algebra::hermitian_part(&(&vectors * d * vectors.adjoint()));
        Ok(FreeHamiltonian { matrix, energies, vectors })
    }

    fn check_levels(energies: &[f64]) -> Result<()> {
        let width = energies.last().unwrap() - energies[0];
        let tol = DEFAULT_DEGENERACY_RTOL * width.max(f64::MIN_POSITIVE);
        for w in energies.windows(2) {
            if w[1] - w[0] <= tol {
                return Err(SymError::Degenerate(format!(
                    "energy levels {} and {} coincide",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Eigenvectors as columns, in ascending-energy order.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn spectral_width(&self) -> f64 {
        self.energies.last().unwrap() - self.energies[0]
    }

    /// `U_S(t) = e^{−iH t}`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut vd = self.vectors.clone();
        for (j, &e) in self.energies.iter().enumerate() {
            let p = cplx(0.0, -e * t).exp();
            vd.column_mut(j).iter_mut().for_each(|z| *z *= p);
        }
        vd * self.vectors.adjoint()
    }

    /// Rebuilds a Hamiltonian with the same eigenvectors and new energies.
    fn with_energies(&self, energies: Vec<f64>) -> Result<Self> {
        let d = crate::operator_algebra::diag_real(&energies);
        let matrix = crate::operator_algebra::hermitian_part(&(&self.vectors * d * self.vectors.adjoint()));
        Self::check_levels(&energies)?;
        Ok(FreeHamiltonian { matrix, energies, vectors: self.vectors.clone() })
    }
}

/// One transition operator `F_nm = |n⟩⟨m|` (eigenbasis indices).
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub n: usize,
    pub m: usize,
    pub omega: f64,
    pub op: CMatrix,
}

/// Ordered operator basis `{F_nm} ∪ {Π_j}` together with the Gell-Mann
/// diagonal basis `{P_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenoperatorBasis {
    dim: usize,
    energies: Vec<f64>,
    vectors: CMatrix,
    transitions: Vec<Transition>,
    projectors: Vec<CMatrix>,
    diagonal: Vec<CMatrix>,
    gellmann: DMatrix<f64>,
}

/// Orthogonal matrix `O` with `P_i = Σ_l O_il Π_l`: rows `i < N` are the
/// normalized generalized Gell-Mann diagonals, row `N` is `1/√N`.
fn gellmann_matrix(n: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(n, n);
    for j in 1..n {
        let norm = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for l in 0..j {
            o[(j - 1, l)] = norm;
        }
        o[(j - 1, j)] = -(j as f64) * norm;
    }
    for l in 0..n {
        o[(n - 1, l)] = 1.0 / (n as f64).sqrt();
    }
    o
}

/// Builds the eigenoperator basis of `h`.
pub fn build_basis(h: &FreeHamiltonian) -> EigenoperatorBasis {
    let n = h.dim();
    let v = &h.vectors;
    let ket = |i: usize| v.column(i).into_owned();
    let outer = |i: usize, j: usize| ket(i) * ket(j).adjoint();
    let mut transitions = Vec::with_capacity(n * (n - 1));
    for a in 0..n {
        for b in 0..n {
            if a != b {
                transitions.push(Transition {
                    n: a,
                    m: b,
                    omega: h.energies[a] - h.energies[b],
                    op: outer(a, b),
                });
            }
        }
    }
    let projectors: Vec<CMatrix> = (0..n).map(|j| outer(j, j)).collect();
    let gellmann = gellmann_matrix(n);
    let diagonal = (0..n)
        .map(|i| {
            let mut p = CMatrix::zeros(n, n);
            for l in 0..n {
                if gellmann[(i, l)] != 0.0 {
                    p += &projectors[l] * cplx(gellmann[(i, l)], 0.0);
                }
            }
            p
        })
        .collect();
    EigenoperatorBasis {
        dim: n,
        energies: h.energies.clone(),
        vectors: v.clone(),
        transitions,
        projectors,
        diagonal,
        gellmann,
    }
}

impl EigenoperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// `P_1 … P_N`; the last one is `I/√N`.
    pub fn diagonal_ops(&self) -> &[CMatrix] {
        &self.diagonal
    }

    /// Orthogonal change of basis `P_i = Σ_l O_il Π_l`.
    pub fn gellmann(&self) -> &DMatrix<f64> {
        &self.gellmann
    }

    /// Position of `F_nm` in the transition list.
    pub fn transition_index(&self, n: usize, m: usize) -> Option<usize> {
        if n == m || n >= self.dim || m >= self.dim {
            return None;
        }
        Some(n * (self.dim - 1) + if m > n { m - 1 } else { m })
    }

    /// The `{Ŝ}` basis: transitions first, then projectors.
    pub fn s_basis(&self) -> Vec<&CMatrix> {
        self.transitions.iter().map(|t| &t.op).chain(self.projectors.iter()).collect()
    }

    /// The `{T̂}` basis: transitions first, then `P_1 … P_N`.
    pub fn t_basis(&self) -> Vec<&CMatrix> {
        self.transitions.iter().map(|t| &t.op).chain(self.diagonal.iter()).collect()
    }

    /// Unitary whose columns are the vectorized `{Ŝ}` elements.
    pub fn s_frame(&self) -> CMatrix {
        let n2 = self.dim * self.dim;
        let basis = self.s_basis();
        CMatrix::from_fn(n2, n2, |r, c| basis[c].as_slice()[r])
    }

    /// Matrix elements `⟨Ŝ_α, S[Ŝ_β]⟩`.
    pub fn to_s_frame(&self, s: &Superoperator) -> CMatrix {
        let w = self.s_frame();
        w.adjoint() * s.matrix() * w
    }

    /// Inverse of [`Self::to_s_frame`].
    pub fn from_s_frame(&self, m: &CMatrix) -> Superoperator {
        let w = self.s_frame();
        Superoperator::new(&w * m * w.adjoint()).expect("frame matrix is N²×N²")
    }

    /// Gram matrix of the full `{Ŝ}` ∪ `{P}` element list (for tests).
    pub fn gram(&self, use_t: bool) -> CMatrix {
        let b = if use_t { self.t_basis() } else { self.s_basis() };
        CMatrix::from_fn(b.len(), b.len(), |i, j| hs_inner(b[i], b[j]).unwrap())
    }
}

/// Transition frequencies and the smallest separation between them.
#[derive(Clone, Debug, PartialEq)]
pub struct BohrSpectrum {
    pub entries: Vec<(usize, usize, f64)>,
    pub min_gap: f64,
    /// Pair of transitions that realize `min_gap`.
    pub closest: Option<((usize, usize), (usize, usize))>,
    pub degenerate: bool,
}

/// Computes all `ω_nm` and reports DEGENERATE when two distinct transitions
/// are closer than `tol`.
pub fn bohr_spectrum(h: &FreeHamiltonian, tol: f64) -> BohrSpectrum {
    let e = h.energies();
    let n = e.len();
    let mut entries = Vec::with_capacity(n * (n - 1));
    for a in 0..n {
        for b in 0..n {
            if a != b {
                entries.push((a, b, e[a] - e[b]));
            }
        }
    }
    let mut min_gap = f64::INFINITY;
    let mut closest = None;
    for i in 0..entries.len() {
        for j in (i + 1)..entries.len() {
            let gap = (entries[i].2 - entries[j].2).abs();
            if gap < min_gap {
                min_gap = gap;
                closest = Some(((entries[i].0, entries[i].1), (entries[j].0, entries[j].1)));
            }
        }
    }
    BohrSpectrum { entries, min_gap, closest, degenerate: min_gap < tol }
}

/// Default degeneracy tolerance for `h`: `1e−9` times its spectral width.
pub fn default_degeneracy_tol(h: &FreeHamiltonian) -> f64 {
    DEFAULT_DEGENERACY_RTOL * h.spectral_width()
}

/// Outcome of [`lift_degeneracy`].
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedHamiltonian {
    pub hamiltonian: FreeHamiltonian,
    /// Number of ε-shifts applied.
    pub shifts: usize,
    /// Operator-norm distance ‖H − H'‖.
    pub distance: f64,
}

/// Removes Bohr-frequency degeneracies by repeatedly shifting the highest
/// level involved in the closest pair of transitions upward by `epsilon`,
/// until every pair of transitions is separated by at least `epsilon/2`.
pub fn lift_degeneracy(h: &FreeHamiltonian, epsilon: f64) -> Result<LiftedHamiltonian> {
    if !(epsilon > 0.0) {
        return Err(SymError::InvalidInput("epsilon must be positive".into()));
    }
    let n = h.dim();
    let mut energies = h.energies().to_vec();
    let mut shifts = 0usize;
    let max_shifts = 16 * n * n * n;
    loop {
        let current = h.with_energies(energies.clone())?;
        let spec = bohr_spectrum(&current, 0.5 * epsilon);
        if !spec.degenerate {
            let distance = energies
                .iter()
                .zip(h.energies())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            return Ok(LiftedHamiltonian { hamiltonian: current, shifts, distance });
        }
        if shifts >= max_shifts {
            return Err(SymError::Degenerate(format!(
                "could not separate Bohr frequencies after {shifts} shifts"
            )));
        }
        let ((a, b), (c, d)) = spec.closest.expect("degenerate spectrum has a closest pair");
        let top = [a, b, c, d].into_iter().max_by(|&x, &y| energies[x].total_cmp(&energies[y])).unwrap();
        energies[top] += epsilon;
        shifts += 1;
        if top + 1 < n && energies[top] >= energies[top + 1] {
            return Err(SymError::InvalidInput(format!(
                "epsilon {epsilon} reorders the energy levels"
            )));
        }
    }
}

/// Splits `x` into asymmetry modes: components with a common Bohr
/// frequency, sorted by frequency. The ω = 0 component contains the
/// diagonal (projector) part and is always present; transition modes with
/// zero amplitude are omitted.
pub fn mode_decompose(x: &CMatrix, basis: &EigenoperatorBasis) -> Result<Vec<(f64, CMatrix)>> {
    let n = basis.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(SymError::DimensionMismatch(format!("operator {:?} vs basis dim {n}", x.shape())));
    }
    let width = basis.energies().last().unwrap() - basis.energies()[0];
    let tol = DEFAULT_DEGENERACY_RTOL * width.max(1.0);
    let mut modes: Vec<(f64, CMatrix)> = Vec::new();
    let mut push = |omega: f64, op: CMatrix| {
        if let Some(slot) = modes.iter_mut().find(|(w, _)| (w - omega).abs() <= tol) {
            slot.1 += op;
        } else {
            modes.push((omega, op));
        }
    };
    let mut diag = CMatrix::zeros(n, n);
    for p in basis.projectors() {
        diag += p * hs_inner(p, x)?;
    }
    push(0.0, diag);
    for t in basis.transitions() {
        let amp = hs_inner(&t.op, x)?;
        if amp != ZERO {
            push(t.omega, &t.op * amp);
        }
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(modes)
}

/// Residuals of the symmetric block structure of a superoperator.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockResiduals {
    /// Largest off-diagonal magnitude inside the transition block.
    pub transition_offdiag: f64,
    /// Largest magnitude coupling transitions with projectors.
    pub transition_projector: f64,
    /// Diagonal of the transition block: eigenvalues `λ_α` on `F_α`.
    pub transition_eigenvalues: Vec<C64>,
    /// The N×N invariant block `⟨Π_i, S[Π_j]⟩`.
    pub invariant_block: CMatrix,
}

impl BlockResiduals {
    pub fn max_residual(&self) -> f64 {
        self.transition_offdiag.max(self.transition_projector)
    }
}

/// Expresses `s` in the `{Ŝ}` basis and measures how far it is from the
/// block-diagonal form required by time-translation symmetry.
pub fn verify_block_structure(s: &Superoperator, basis: &EigenoperatorBasis) -> Result<BlockResiduals> {
    let n = basis.dim();
    if s.dim() != n {
        return Err(SymError::DimensionMismatch(format!(
            "superoperator dim {} vs basis dim {n}",
            s.dim()
        )));
    }
    let m = basis.to_s_frame(s);
    let nf = n * (n - 1);
    let mut offdiag: f64 = 0.0;
    let mut coupling: f64 = 0.0;
    for r in 0..n * n {
        for c in 0..n * n {
            let v = m[(r, c)].norm();
            match (r < nf, c < nf) {
                (true, true) if r != c => offdiag = offdiag.max(v),
                (true, false) | (false, true) => coupling = coupling.max(v),
                _ => {}
            }
        }
    }
    Ok(BlockResiduals {
        transition_offdiag: offdiag,
        transition_projector: coupling,
        transition_eigenvalues: (0..nf).map(|a| m[(a, a)]).collect(),
        invariant_block: m.view((nf, nf), (n, n)).into_owned(),
    })
}
