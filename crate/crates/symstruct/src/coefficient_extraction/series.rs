use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sectors::Sectors;
use super::JointSystem;
use crate::error::{Result, SymError};
use crate::operator_algebra::{
    cplx, eigh, vec_op, CMatrix, SparseMatrix, Superoperator, C64, I, ONE, ZERO,
};
use crate::special::{bessel_j_all, bessel_j_prime_all};
use crate::symmetry_basis::EigenoperatorBasis;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Maclaurin,
    Chebyshev,
}

/// Which truncated object is handed to the coefficient fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GeneratorForm {
    /// The term-by-term time derivative of the truncated map,
    /// `Σ_{n=1..M} (−i)ⁿ tⁿ⁻¹/(n−1)! tr_E(adⁿ[• ⊗ ρ_E])`.
    #[default]
    MapDerivative,
    /// `Λ̇^(M)(t) · (Λ^(M)(t))⁻¹` from the same truncated series.
    TimeLocal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSpec {
    pub kind: SeriesKind,
    pub order: usize,
    /// Upper end `T` of the Chebyshev window `[0, T]` (unused by Maclaurin).
    pub interval: f64,
    pub form: GeneratorForm,
}

impl SeriesSpec {
    pub const DEFAULT_MACLAURIN_ORDER: usize = 10;

    pub fn maclaurin(order: usize) -> Self {
        SeriesSpec { kind: SeriesKind::Maclaurin, order, interval: 0.0, form: GeneratorForm::default() }
    }

    pub fn chebyshev(order: usize, interval: f64) -> Self {
        SeriesSpec { kind: SeriesKind::Chebyshev, order, interval, form: GeneratorForm::default() }
    }

    /// Chebyshev spec with the default order `⌈λ_B T⌉ + 20`.
    pub fn default_chebyshev(js: &JointSystem, interval: f64) -> Self {
        let r = spectral_bound(js.h_se()) * interval;
        Self::chebyshev(r.ceil() as usize + 20, interval)
    }

    pub fn with_form(mut self, form: GeneratorForm) -> Self {
        self.form = form;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(SymError::InvalidInput("series order must be at least 1".into()));
        }
        if self.kind == SeriesKind::Chebyshev && !(self.interval > 0.0) {
            return Err(SymError::InvalidInput("Chebyshev interval T must be positive".into()));
        }
        Ok(())
    }
}

/// Bound `λ_B = 2·max|eig(H_SE)|` (times a 1e−3 safety margin) on the
/// spectral radius of the commutator superoperator `[H_SE, •]`.
///
/// Small matrices are diagonalized; larger ones use power iteration on
/// `H_SE²` from a fixed pseudo-random start vector, so the result is
/// deterministic.
pub fn spectral_bound(h_se: &SparseMatrix) -> f64 {
    let d = h_se.nrows();
    let max_eig = if d <= 256 {
        let (vals, _) = eigh(&h_se.to_dense()).expect("square");
        vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
        let mut v: Vec<C64> = (0..d).map(|_| cplx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = |x: &[C64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        let mut rq_prev = 0.0;
        let mut rq = 0.0;
        for _ in 0..20_000 {
            let hv = h_se.mul_vec(&v);
            rq = hv.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let w = h_se.mul_vec(&hv);
            let nw = norm(&w);
            if nw == 0.0 {
                break;
            }
            v = w.into_iter().map(|z| z / nw).collect();
            if (rq - rq_prev).abs() <= 1e-13 * rq {
                break;
            }
            rq_prev = rq;
        }
        rq.sqrt()
    };
    2.0 * max_eig * (1.0 + 1e-3)
}

fn i_pow(m: usize) -> C64 {
    [ONE, I, -ONE, -I][m % 4]
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Time-independent system-space terms of a truncated expansion of the
/// interaction-picture map, one list per `{Ŝ}` basis element.
#[derive(Clone, Debug)]
pub struct SeriesExpansion {
    kind: SeriesKind,
    order: usize,
    interval: f64,
    lambda_b: Option<f64>,
    basis_ops: Vec<CMatrix>,
    terms: Vec<Vec<CMatrix>>,
    warnings: Vec<String>,
}

/// `tr_E(adⁿ_{H_SE}[x ⊗ ρ_E])` for n = 0..=order.
fn maclaurin_terms(js: &JointSystem, sec: &Sectors, x: &CMatrix, order: usize) -> Result<Vec<CMatrix>> {
    let mut y = sec.lift(x, js.rho_e().matrix());
    let mut out = Vec::with_capacity(order + 1);
    out.push(sec.partial_trace(&y));
    for _ in 0..order {
        y = sec.ad(&y)?;
        out.push(sec.partial_trace(&y));
    }
    Ok(out)
}

/// `tr_E(T_m(O)[x ⊗ ρ_E])` for m = 0..=order with `O = −[H_SE, •]/λ_B`.
fn chebyshev_terms(js: &JointSystem, sec: &Sectors, x: &CMatrix, order: usize, lambda: f64) -> Result<Vec<CMatrix>> {
    let mut prev = sec.lift(x, js.rho_e().matrix());
    let mut out = Vec::with_capacity(order + 1);
    out.push(sec.partial_trace(&prev));
    let mut cur = sec.ad(&prev)?.scale(cplx(-1.0 / lambda, 0.0));
    out.push(sec.partial_trace(&cur));
    for _ in 2..=order {
        let next = sec.ad(&cur)?.scale(cplx(-2.0 / lambda, 0.0)).axpy(-ONE, &prev);
        out.push(sec.partial_trace(&next));
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// Terms of every `{Ŝ}` basis element. Of each adjoint pair `F_nm`,
/// `F_mn = F_nm†` only the first is expanded; the second follows from
/// `p_k(C)[Y†] = (−1)^k (p_k(C)[Y])†`, valid for the monomials `C^k` and
/// for the Chebyshev polynomials `T_k` alike (both have parity `k`).
fn basis_terms(
    basis: &EigenoperatorBasis,
    terms_of: impl Fn(&CMatrix) -> Result<Vec<CMatrix>>,
) -> Result<Vec<Vec<CMatrix>>> {
    let mut out: Vec<Vec<CMatrix>> = Vec::with_capacity(basis.dim() * basis.dim());
    for t in basis.transitions() {
        if t.n < t.m {
            out.push(terms_of(&t.op)?);
        } else {
            let partner = basis.transition_index(t.m, t.n).expect("adjoint transition exists");
            let terms = out[partner]
                .iter()
                .enumerate()
                .map(|(k, x)| if k % 2 == 0 { x.adjoint() } else { -x.adjoint() })
                .collect();
            out.push(terms);
        }
    }
    for p in basis.projectors() {
        out.push(terms_of(p)?);
    }
    Ok(out)
}

fn convergence_warning(lambda: f64, interval: f64, order: usize) -> Option<String> {
    let r = lambda * interval;
    if (order as f64) < r + 10.0 {
        let msg = format!("CONVERGENCE: Chebyshev order {order} < r(T) + 10 = {:.2}", r + 10.0);
        warn!("{msg}");
        Some(msg)
    } else {
        None
    }
}

impl SeriesExpansion {
    pub fn new(js: &JointSystem, spec: &SeriesSpec, basis: &EigenoperatorBasis) -> Result<Self> {
        spec.validate()?;
        if basis.dim() != js.n() {
            return Err(SymError::DimensionMismatch("basis vs joint system".into()));
        }
        let basis_ops: Vec<CMatrix> = basis.s_basis().into_iter().cloned().collect();
        let mut warnings = Vec::new();
        let (lambda_b, terms) = match spec.kind {
            SeriesKind::Maclaurin => {
                let sec = Sectors::new(js.h_se(), js.n(), js.ne());
                let terms = basis_terms(basis, |x| maclaurin_terms(js, &sec, x, spec.order))?;
                (None, terms)
            }
            SeriesKind::Chebyshev => {
                let bound = spectral_bound(js.h_se());
                // a vanishing coupling makes every λ valid; pick 1
                let lambda = if bound > 0.0 { bound } else { 1.0 };
                warnings.extend(convergence_warning(lambda, spec.interval, spec.order));
                let sec = Sectors::new(js.h_se(), js.n(), js.ne());
                let terms = basis_terms(basis, |x| chebyshev_terms(js, &sec, x, spec.order, lambda))?;
                (Some(lambda), terms)
            }
        };
        Ok(SeriesExpansion {
            kind: spec.kind,
            order: spec.order,
            interval: spec.interval,
            lambda_b,
            basis_ops,
            terms,
            warnings,
        })
    }

    pub fn lambda_b(&self) -> Option<f64> {
        self.lambda_b
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || (self.kind == SeriesKind::Chebyshev && t > self.interval * (1.0 + 1e-12)) {
            return Err(SymError::InvalidInput(format!(
                "time {t} outside the expansion window [0, {}]",
                self.interval
            )));
        }
        Ok(())
    }

    fn map_coefficients(&self, t: f64) -> Vec<C64> {
        match self.kind {
            SeriesKind::Maclaurin => (0..=self.order)
                .map(|k| (-I * t).powu(k as u32) / factorial(k))
                .collect(),
            SeriesKind::Chebyshev => {
                let lam = self.lambda_b.unwrap();
                let j = bessel_j_all(self.order, lam * t);
                (0..=self.order)
                    .map(|m| (i_pow(m) * 2.0 - if m == 0 { ONE } else { ZERO }) * j[m])
                    .collect()
            }
        }
    }

    fn derivative_coefficients(&self, t: f64) -> Vec<C64> {
        match self.kind {
            SeriesKind::Maclaurin => (0..=self.order)
                .map(|k| {
                    if k == 0 {
                        ZERO
                    } else {
                        (-I).powu(k as u32) * t.powi(k as i32 - 1) / factorial(k - 1)
                    }
                })
                .collect(),
            SeriesKind::Chebyshev => {
                let lam = self.lambda_b.unwrap();
                let jp = bessel_j_prime_all(self.order, lam * t);
                (0..=self.order)
                    .map(|m| (i_pow(m) * 2.0 - if m == 0 { ONE } else { ZERO }) * (lam * jp[m]))
                    .collect()
            }
        }
    }

    /// Superoperator `Σ_β |Σ_k w_k term_{β,k}⟩⟨Ŝ_β|`.
    fn combine(&self, w: &[C64]) -> Superoperator {
        let n = self.basis_ops[0].nrows();
        let mut m = CMatrix::zeros(n * n, n * n);
        for (s, terms) in self.basis_ops.iter().zip(&self.terms) {
            let mut img = CMatrix::zeros(n, n);
            for (wk, tk) in w.iter().zip(terms) {
                if *wk != ZERO {
                    img += tk * *wk;
                }
            }
            m += vec_op(&img) * vec_op(s).adjoint();
        }
        Superoperator::new(m).expect("N²×N²")
    }

    /// Truncated interaction-picture map Λ̃^(M)(t).
    pub fn map(&self, t: f64) -> Result<Superoperator> {
        self.check_time(t)?;
        Ok(self.combine(&self.map_coefficients(t)))
    }

    /// Time derivative of the truncated map.
    pub fn derivative(&self, t: f64) -> Result<Superoperator> {
        self.check_time(t)?;
        Ok(self.combine(&self.derivative_coefficients(t)))
    }

    /// Truncated generator in the requested form.
    pub fn generator(&self, t: f64, form: GeneratorForm) -> Result<Superoperator> {
        match form {
            GeneratorForm::MapDerivative => self.derivative(t),
            GeneratorForm::TimeLocal => {
                let d = self.derivative(t)?;
                let m = self.map(t)?;
                let lt = m
                    .matrix()
                    .transpose()
                    .lu()
                    .solve(&d.matrix().transpose())
                    .ok_or_else(|| SymError::Numerical(format!("truncated map singular at t={t}")))?;
                Superoperator::new(lt.transpose())
            }
        }
    }
}

/// Maclaurin-truncated generator applied to a single system operator `x`.
pub fn maclaurin_generator_action(js: &JointSystem, order: usize, t: f64, x: &CMatrix) -> Result<CMatrix> {
    let terms = maclaurin_terms(js, &Sectors::new(js.h_se(), js.n(), js.ne()), x, order)?;
    let n = js.n();
    let mut out = CMatrix::zeros(n, n);
    for (k, term) in terms.iter().enumerate().skip(1) {
        out += term * ((-I).powu(k as u32) * t.powi(k as i32 - 1) / factorial(k - 1));
    }
    Ok(out)
}

/// Chebyshev-truncated generator (map derivative) applied to `x`, for
/// `t ∈ [0, T]`.
pub fn chebyshev_generator_action(
    js: &JointSystem,
    order: usize,
    interval: f64,
    t: f64,
    x: &CMatrix,
) -> Result<CMatrix> {
    if !(interval > 0.0) || t < 0.0 || t > interval * (1.0 + 1e-12) {
        return Err(SymError::InvalidInput(format!("t={t} outside [0, {interval}]")));
    }
    let bound = spectral_bound(js.h_se());
    let lambda = if bound > 0.0 { bound } else { 1.0 };
    let _ = convergence_warning(lambda, interval, order);
    let terms = chebyshev_terms(js, &Sectors::new(js.h_se(), js.n(), js.ne()), x, order.max(1), lambda)?;
    let jp = bessel_j_prime_all(order, lambda * t);
    let n = js.n();
    let mut out = CMatrix::zeros(n, n);
    for (m, term) in terms.iter().enumerate().take(order + 1) {
        let w = (i_pow(m) * 2.0 - if m == 0 { ONE } else { ZERO }) * (lambda * jp[m]);
        out += term * w;
    }
    Ok(out)
}
