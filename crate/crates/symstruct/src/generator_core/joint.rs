use rayon::prelude::*;

use crate::error::{Result, SymError};
use crate::operator_algebra::{
    check_square, cplx, eigh, hermiticity_residual, max_abs, superop_sandwich, CMatrix, DensityOperator,
    Superoperator, TimeGrid, C64, ZERO,
};
use crate::symmetry_basis::FreeHamiltonian;

/// Condition number above which Λ(t) is treated as non-invertible.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Joint Hamiltonian diagonalized once, reusable for many times.
#[derive(Clone, Debug)]
pub struct JointPropagator {
    energies: Vec<f64>,
    vectors: CMatrix,
    n: usize,
    rho_e: CMatrix,
}

impl JointPropagator {
    pub fn new(h_joint: &CMatrix, rho_e: &DensityOperator, n: usize) -> Result<Self> {
        let d = check_square(h_joint)?;
        let ne = rho_e.dim();
        if d != n * ne {
            return Err(SymError::DimensionMismatch(format!(
                "joint dimension {d} ≠ {n}·{ne}"
            )));
        }
        let herm = hermiticity_residual(h_joint);
        if herm > 1e-12 * max_abs(h_joint).max(1.0) {
            return Err(SymError::NotHermitian { residual: herm });
        }
        let (energies, vectors) = eigh(h_joint)?;
        Ok(JointPropagator { energies, vectors, n, rho_e: rho_e.matrix().clone() })
    }

    /// e^{−iHt}
    pub fn unitary(&self, t: f64) -> CMatrix {
        let mut vd = self.vectors.clone();
        for (j, &e) in self.energies.iter().enumerate() {
            let p = cplx(0.0, -e * t).exp();
            vd.column_mut(j).iter_mut().for_each(|z| *z *= p);
        }
        vd * self.vectors.adjoint()
    }

    /// Λ(t)[X] = tr_E(U (X ⊗ ρ_E) U†), built column by column on matrix units.
    pub fn map_at(&self, t: f64) -> Superoperator {
        let n = self.n;
        let ne = self.rho_e.nrows();
        let u = self.unitary(t);
        // A_i = U[:, i-block],  C_i = A_i ρ_E
        let a: Vec<CMatrix> = (0..n).map(|i| u.columns(i * ne, ne).into_owned()).collect();
        let c: Vec<CMatrix> = a.iter().map(|ai| ai * &self.rho_e).collect();
        let mut m = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let col = i + j * n;
                for x in 0..n {
                    for y in 0..n {
                        let mut s = ZERO;
                        for e in 0..ne {
                            let r1 = x * ne + e;
                            let r2 = y * ne + e;
                            for f in 0..ne {
                                s += c[i][(r1, f)] * a[j][(r2, f)].conj();
                            }
                        }
                        m[(x + y * n, col)] = s;
                    }
                }
            }
        }
        Superoperator::new(m).expect("square by construction")
    }
}

/// Exact reduced dynamical maps on `grid` from a joint unitary evolution.
/// Grid points are evaluated in parallel and returned in grid order.
pub fn map_from_joint_unitary(
    h_joint: &CMatrix,
    rho_e: &DensityOperator,
    n: usize,
    grid: &TimeGrid,
) -> Result<Vec<Superoperator>> {
    let prop = JointPropagator::new(h_joint, rho_e, n)?;
    Ok(grid.points().par_iter().map(|&t| prop.map_at(t)).collect())
}

/// Removes the free evolution: Λ̃(t) = 𝓤_S(−t) ∘ Λ(t).
pub fn to_interaction_picture(maps: &[Superoperator], h_s: &FreeHamiltonian, grid: &TimeGrid) -> Result<Vec<Superoperator>> {
    if maps.len() != grid.len() {
        return Err(SymError::DimensionMismatch("maps vs grid".into()));
    }
    maps.iter()
        .zip(grid.points())
        .map(|(m, &t)| {
            let ud = h_s.propagator(t).adjoint();
            superop_sandwich(&ud, &ud)?.compose(m)
        })
        .collect()
}

/// Fornberg's weights for the first derivative at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = 1usize;
    // c[j][k]: weight of node j for the k-th derivative
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Generator estimate at one grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedGenerator {
    pub t: f64,
    /// `None` where Λ(t) is too ill-conditioned to invert.
    pub generator: Option<Superoperator>,
    /// 2-norm condition number of Λ(t).
    pub condition: f64,
    pub singular: bool,
}

/// Time-local generator 𝓛(t) = Λ̇(t) Λ(t)⁻¹.
///
/// Λ̇ uses finite-difference weights on the five grid nodes nearest each
/// time (a fourth-order central stencil on uniform interior points,
/// one-sided near the ends, and valid on non-uniform grids). Times where the
/// condition number of Λ exceeds [`SINGULAR_CONDITION`] are flagged and no
/// generator is produced.
pub fn extract_generator(maps: &[Superoperator], grid: &TimeGrid) -> Result<Vec<ExtractedGenerator>> {
    let nt = grid.len();
    if maps.len() != nt {
        return Err(SymError::DimensionMismatch(format!("{} maps for {nt} times", maps.len())));
    }
    if nt < 3 {
        return Err(SymError::InvalidInput("generator extraction needs at least 3 grid points".into()));
    }
    let width = nt.min(5);
    let pts = grid.points();
    (0..nt)
        .into_par_iter()
        .map(|k| {
            let start = k.saturating_sub(width / 2).min(nt - width);
            let nodes = &pts[start..start + width];
            let w = fd_weights(pts[k], nodes);
            let mut deriv = CMatrix::zeros(maps[k].matrix().nrows(), maps[k].matrix().ncols());
            for (j, wj) in w.iter().enumerate() {
                deriv += maps[start + j].matrix() * C64::new(*wj, 0.0);
            }
            let lam = maps[k].matrix();
            let sv = lam.clone().svd(false, false).singular_values;
            let smin = sv.min();
            let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
            if !(condition <= SINGULAR_CONDITION) {
                return Ok(ExtractedGenerator { t: pts[k], generator: None, condition, singular: true });
            }
            // 𝓛 = Λ̇ Λ⁻¹  ⇔  Λᵀ 𝓛ᵀ = Λ̇ᵀ
            let lt = lam
                .transpose()
                .lu()
                .solve(&deriv.transpose())
                .ok_or_else(|| SymError::Numerical(format!("Λ({}) not invertible", pts[k])))?;
            Ok(ExtractedGenerator {
                t: pts[k],
                generator: Some(Superoperator::new(lt.transpose())?),
                condition,
                singular: false,
            })
        })
        .collect()
}
