//! Physicality and symmetry checks on maps, generators and populations.
//!
//! Every check returns a report carrying the quantity it measured (so a
//! failure is quantified, not just flagged) and a three-valued [`Verdict`].
//! `Inconclusive` is returned when the input carries singular flags or does
//! not have the structure a check presupposes.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SymError};
use crate::generator_core::JointPropagator;
use crate::operator_algebra::{
    choi_matrix, cplx, eigh, hermitian_part, hermiticity_residual, max_abs, trace, CMatrix, DensityOperator,
    Superoperator, TimeGrid, C64,
};
use crate::symmetry_basis::{verify_block_structure, EigenoperatorBasis};

/// Default slack of the running asymmetry integrals.
pub const ASYMMETRY_TOL: f64 = 1e-8;
/// Default slack on `|λ_α| ≤ 1`.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Default lower bound on the damping-matrix spectrum.
pub const DAMPING_TOL: f64 = 1e-8;
/// Default CPTP tolerance.
pub const CPTP_TOL: f64 = 1e-10;
/// Default thermomajorization tolerance.
pub const MAJORIZATION_TOL: f64 = 1e-10;
/// Block-structure residual above which map eigen-data is meaningless.
pub const STRUCTURE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// The worse of two verdicts (`Fail` > `Inconclusive` > `Pass`).
    pub fn and(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    pub fn all(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        verdicts.into_iter().fold(Verdict::Pass, Verdict::and)
    }

    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// asymmetry monotones

#[derive(Clone, Debug, PartialEq)]
pub struct AsymmetryReport {
    pub verdict: Verdict,
    /// Verdict per transition.
    pub per_transition: Vec<Verdict>,
    /// Running trapezoid integrals `∫₀ᵗ a_α`, `[α][time]`.
    pub integrals: Vec<Vec<f64>>,
    /// Largest running integral over all α and times.
    pub worst_margin: f64,
}

/// `∫₀ᵗ a_α(s) ds ≤ tol` for every transition rate `a_α` and every `t`.
///
/// `singular[k]` marks times where the rates are undefined; an integral that
/// has to cross such a time cannot be evaluated, so the affected transitions
/// are `Inconclusive` unless they already failed earlier.
pub fn asymmetry_integral_check(
    rates: &[Vec<f64>],
    grid: &TimeGrid,
    singular: Option<&[bool]>,
    tol: f64,
) -> Result<AsymmetryReport> {
    let nt = grid.len();
    if rates.iter().any(|a| a.len() != nt) || singular.is_some_and(|s| s.len() != nt) {
        return Err(SymError::DimensionMismatch("rate series vs grid".into()));
    }
    let pts = grid.points();
    let mut per = Vec::with_capacity(rates.len());
    let mut integrals = Vec::with_capacity(rates.len());
    let mut worst = f64::NEG_INFINITY;
    for a in rates {
        let mut acc = 0.0;
        let mut run = vec![f64::NAN; nt];
        let mut verdict = Verdict::Pass;
        for k in 0..nt {
            let bad = singular.is_some_and(|s| s[k]) || !a[k].is_finite();
            if bad {
                verdict = verdict.and(Verdict::Inconclusive);
                break;
            }
            if k > 0 {
                acc += 0.5 * (a[k] + a[k - 1]) * (pts[k] - pts[k - 1]);
            }
            run[k] = acc;
            worst = worst.max(acc);
            if acc > tol {
                verdict = Verdict::Fail;
                break;
            }
        }
        per.push(verdict);
        integrals.push(run);
    }
    Ok(AsymmetryReport { verdict: Verdict::all(per.iter().copied()), per_transition: per, integrals, worst_margin: worst })
}

/// Real parts of the transition eigenvalues `a_α(t) = Re⟨F_α, 𝓛(t)[F_α]⟩`.
pub fn transition_rates(generators: &[Superoperator], basis: &EigenoperatorBasis) -> Result<Vec<Vec<f64>>> {
    let nf = basis.transitions().len();
    let mut out = vec![Vec::with_capacity(generators.len()); nf];
    for l in generators {
        let b = verify_block_structure(l, basis)?;
        for (alpha, ev) in b.transition_eigenvalues.iter().enumerate() {
            out[alpha].push(ev.re);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// trace-norm monotone

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneReport {
    pub verdict: Verdict,
    /// `max_α |λ_α(t)|` per map.
    pub max_abs_eigenvalue: Vec<f64>,
    /// Largest block-structure residual seen.
    pub structure_residual: f64,
}

/// `|λ_α(t)| ≤ 1 + tol` for every transition eigenvalue of every map, i.e.
/// every asymmetry mode shrinks in trace norm.
pub fn trace_norm_monotone_check(
    maps: &[Superoperator],
    basis: &EigenoperatorBasis,
    tol: f64,
) -> Result<MonotoneReport> {
    let mut maxes = Vec::with_capacity(maps.len());
    let mut structure = 0.0f64;
    for m in maps {
        let b = verify_block_structure(m, basis)?;
        structure = structure.max(b.transition_offdiag.max(b.transition_projector));
        maxes.push(b.transition_eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let verdict = if structure > STRUCTURE_TOL {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(maxes.iter().all(|&x| x <= 1.0 + tol))
    };
    Ok(MonotoneReport { verdict, max_abs_eigenvalue: maxes, structure_residual: structure })
}

// ---------------------------------------------------------------------------
// damping matrix

#[derive(Clone, Debug, PartialEq)]
pub struct DampingReport {
    pub verdict: Verdict,
    /// `𝓜_nn = ⟨Π_n, Λ[Π_n]⟩`, `𝓜_nm = ⟨F_nm, Λ[F_nm]⟩`.
    pub matrix: CMatrix,
    pub min_eigenvalue: f64,
    pub hermiticity_residual: f64,
}

/// Damping matrix of a symmetric map. It is the principal submatrix of the
/// Choi matrix on `span{|n⟩|n⟩}`, so complete positivity requires it to be
/// positive semidefinite.
pub fn damping_matrix(map: &Superoperator, basis: &EigenoperatorBasis) -> Result<CMatrix> {
    let b = verify_block_structure(map, basis)?;
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = b.invariant_block[(i, i)];
    }
    for (t, ev) in basis.transitions().iter().zip(&b.transition_eigenvalues) {
        m[(t.n, t.m)] = *ev;
    }
    Ok(m)
}

pub fn damping_matrix_check(map: &Superoperator, basis: &EigenoperatorBasis, tol: f64) -> Result<DampingReport> {
    let m = damping_matrix(map, basis)?;
    let herm = hermiticity_residual(&m);
    let (vals, _) = eigh(&hermitian_part(&m))?;
    let min = vals[0];
    let verdict = if herm > STRUCTURE_TOL.max(1e-6 * max_abs(&m)) {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(min >= -tol)
    };
    Ok(DampingReport { verdict, matrix: m, min_eigenvalue: min, hermiticity_residual: herm })
}

// ---------------------------------------------------------------------------
// CPTP

#[derive(Clone, Debug, PartialEq)]
pub struct CptpReport {
    pub verdict: Verdict,
    pub choi_min_eigenvalue: f64,
    /// `max |tr Λ[E_ij] − δ_ij|`.
    pub trace_preservation_residual: f64,
    /// Hermiticity defect of the Choi matrix.
    pub hermiticity_preservation_residual: f64,
}

pub fn cptp_check(map: &Superoperator, tol: f64) -> Result<CptpReport> {
    let n = map.dim();
    let s = map.matrix();
    let mut tp: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let tr: C64 = (0..n).map(|a| s[(a + a * n, i + j * n)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            tp = tp.max((tr - cplx(target, 0.0)).norm());
        }
    }
    let choi = choi_matrix(map);
    let herm = hermiticity_residual(&choi);
    let (vals, _) = eigh(&hermitian_part(&choi))?;
    let min = vals[0];
    let verdict = Verdict::from_bool(min >= -tol && tp <= tol && herm <= tol);
    Ok(CptpReport {
        verdict,
        choi_min_eigenvalue: min,
        trace_preservation_residual: tp,
        hermiticity_preservation_residual: herm,
    })
}

// ---------------------------------------------------------------------------
// thermomajorization

/// Piecewise-linear Lorenz curve through `(0, 0)` and its breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct LorenzCurve {
    pub points: Vec<(f64, f64)>,
}

impl LorenzCurve {
    /// Curve of `p` relative to Gibbs weights `e^{−βE}`: levels sorted by
    /// `p_i e^{βE_i}` in decreasing order, x accumulating `e^{−βE_i}` and y
    /// accumulating `p_i`.
    pub fn new(p: &[f64], energies: &[f64], beta: f64) -> Result<Self> {
        if p.len() != energies.len() {
            return Err(SymError::DimensionMismatch(format!(
                "{} populations for {} energies",
                p.len(),
                energies.len()
            )));
        }
        // shift energies for numerical range; the order is shift invariant
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| (p[b] / weights[b]).total_cmp(&(p[a] / weights[a])).then(a.cmp(&b)));
        let mut points = vec![(0.0, 0.0)];
        let (mut x, mut y) = (0.0, 0.0);
        for i in idx {
            x += weights[i];
            y += p[i];
            points.push((x, y));
        }
        Ok(LorenzCurve { points })
    }

    /// Linear interpolation; constant beyond the last breakpoint.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= 0.0 {
            return 0.0;
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x <= x1 {
                return if x1 > x0 { y0 + (y1 - y0) * (x - x0) / (x1 - x0) } else { y1 };
            }
        }
        pts.last().unwrap().1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermomajorizationReport {
    pub verdict: Verdict,
    pub initial: LorenzCurve,
    pub final_curve: LorenzCurve,
    /// `min (L_init − L_final)` over all breakpoints of both curves.
    pub worst_margin: f64,
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let total: f64 = p.iter().sum();
    if p.iter().any(|x| !x.is_finite() || *x < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(SymError::InvalidState(format!("not a probability vector (sum {total})")));
    }
    Ok(())
}

/// Whether `p_init` thermomajorizes `p_final` at inverse temperature `β`.
pub fn thermomajorization_check(
    p_init: &[f64],
    p_final: &[f64],
    energies: &[f64],
    beta: f64,
    tol: f64,
) -> Result<ThermomajorizationReport> {
    if p_init.len() != p_final.len() {
        return Err(SymError::DimensionMismatch("initial and final distributions differ in length".into()));
    }
    if !(beta >= 0.0) {
        return Err(SymError::InvalidInput("β must be non-negative".into()));
    }
    check_distribution(p_init)?;
    check_distribution(p_final)?;
    let a = LorenzCurve::new(p_init, energies, beta)?;
    let b = LorenzCurve::new(p_final, energies, beta)?;
    let worst = a
        .points
        .iter()
        .chain(&b.points)
        .map(|&(x, _)| a.eval(x) - b.eval(x))
        .fold(f64::INFINITY, f64::min);
    Ok(ThermomajorizationReport {
        verdict: Verdict::from_bool(worst >= -tol),
        initial: a,
        final_curve: b,
        worst_margin: worst,
    })
}

/// Classical majorization `a ≻ b` by sorted partial sums.
pub fn majorizes(a: &[f64], b: &[f64], tol: f64) -> bool {
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|x, y| y.total_cmp(x));
        s
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let (mut ca, mut cb) = (0.0, 0.0);
    sa.len() == sb.len()
        && sa.iter().zip(&sb).all(|(x, y)| {
            ca += x;
            cb += y;
            ca >= cb - tol
        })
}

// ---------------------------------------------------------------------------
// degeneracy lifting

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyBoundReport {
    pub verdict: Verdict,
    /// `|tr((Λ_deg − Λ_ε)[ρ₀] M_k)|`, `[time][k]`.
    pub differences: Vec<Vec<f64>>,
    pub max_difference: f64,
    /// `max diff / (εt + Cε²)` over all samples.
    pub worst_ratio: f64,
}

/// Slack constant `C` of the `εt + Cε²` bound.
pub const DEGENERACY_SLACK: f64 = 10.0;

/// Evolves `ρ₀ ⊗ ρ_E` under both joint Hamiltonians and compares the outcome
/// probabilities of the effects `povm` against `εt + Cε²`.
#[allow(clippy::too_many_arguments)]
pub fn degeneracy_bound_check(
    h_degenerate: &CMatrix,
    h_lifted: &CMatrix,
    rho_e: &DensityOperator,
    rho0: &DensityOperator,
    povm: &[CMatrix],
    grid: &TimeGrid,
    epsilon: f64,
    slack: f64,
) -> Result<DegeneracyBoundReport> {
    let n = rho0.dim();
    if povm.iter().any(|m| m.shape() != (n, n)) {
        return Err(SymError::DimensionMismatch("POVM element dimension".into()));
    }
    let pa = JointPropagator::new(h_degenerate, rho_e, n)?;
    let pb = JointPropagator::new(h_lifted, rho_e, n)?;
    let mut diffs = Vec::with_capacity(grid.len());
    let mut worst_ratio: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    let mut ok = true;
    for &t in grid.points() {
        let ra = pa.map_at(t).apply(rho0.matrix())?;
        let rb = pb.map_at(t).apply(rho0.matrix())?;
        let delta = ra - rb;
        let bound = epsilon * t + slack * epsilon * epsilon;
        let row: Vec<f64> = povm.iter().map(|m| trace(&(&delta * m)).norm()).collect();
        for &d in &row {
            max_diff = max_diff.max(d);
            if bound > 0.0 {
                worst_ratio = worst_ratio.max(d / bound);
            }
            ok &= d <= bound || d == 0.0;
        }
        diffs.push(row);
    }
    Ok(DegeneracyBoundReport { verdict: Verdict::from_bool(ok), differences: diffs, max_difference: max_diff, worst_ratio })
}

/// `count` random effects `0 ≤ M ≤ I` (each one outcome of a two-outcome
/// POVM `{M, I − M}`): a Haar-like unitary from the QR decomposition of a
/// complex Gaussian matrix with uniform eigenvalues in `[0, 1]`.
pub fn random_povm_effects(n: usize, count: usize, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = move || -> f64 {
        // Box–Muller
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    (0..count)
        .map(|_| {
            let z = CMatrix::from_fn(n, n, |_, _| cplx(gauss(), gauss()));
            let q = z.qr().q();
            let eig: Vec<f64> = (0..n).map(|_| 0.5 * (1.0 + gauss().tanh())).collect();
            let d = CMatrix::from_diagonal(&DVector::from_iterator(n, eig.iter().map(|&x| cplx(x, 0.0))));
            hermitian_part(&(&q * d * q.adjoint()))
        })
        .collect()
}
