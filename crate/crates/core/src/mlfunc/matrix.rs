//! Matrix Mittag-Leffler functions.
//!
//! A [`MatrixFunctionPlan`] inspects the generator once and picks a
//! realization: diagonal, symmetric eigendecomposition, general complex
//! eigendecomposition (when the eigenvector basis is well conditioned), or a
//! truncated Taylor series with a certified remainder bound for defective
//! and near-defective generators. Evaluating `E_{α,β}(τ M)` for many scales
//! `τ` then reuses the decomposition.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;

use super::scalar::{ml_complex, ml_scalar};
use super::FracOrder;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::{ln_gamma, recip_gamma};

const TAYLOR_TERM_CAP: usize = 10_000;
const MAX_EIGEN_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
enum Realization<T: Scalar> {
    Diagonal(Vec<T>),
    Symmetric {
        basis: DMatrix<T>,
        eigenvalues: Vec<T>,
    },
    Eigen {
        basis: DMatrix<Complex<T>>,
        inverse: DMatrix<Complex<T>>,
        eigenvalues: Vec<Complex<T>>,
    },
    Taylor,
}

/// Reusable evaluator of `τ ↦ E_{α,β}(τ M)` for a fixed square `M`.
#[derive(Debug, Clone)]
pub struct MatrixFunctionPlan<T: Scalar> {
    generator: DMatrix<T>,
    norm_bound: T,
    realization: Realization<T>,
}

impl<T: Scalar> MatrixFunctionPlan<T> {
    pub fn new(m: &DMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "matrix function needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let realization = choose_realization(m);
        Ok(Self {
            generator: m.clone(),
            norm_bound: m.norm(),
            realization,
        })
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    /// True when evaluation goes through an eigendecomposition.
    pub fn is_spectral(&self) -> bool {
        !matches!(self.realization, Realization::Taylor)
    }

    /// `E_{α,β}(scale · M)`.
    pub fn evaluate(&self, alpha: T, beta: T, scale: T) -> Result<DMatrix<T>> {
        let n = self.dim();
        if scale == T::zero() {
            // scalar parameter checks still apply
            let c = ml_scalar(alpha, beta, T::zero())?;
            return Ok(DMatrix::identity(n, n) * c);
        }
        match &self.realization {
            Realization::Diagonal(d) => {
                let mut out = DMatrix::zeros(n, n);
                for (i, &x) in d.iter().enumerate() {
                    out[(i, i)] = ml_scalar(alpha, beta, x * scale)?;
                }
                Ok(out)
            }
            Realization::Symmetric { basis, eigenvalues } => {
                let mut scaled = basis.clone();
                for (j, &lam) in eigenvalues.iter().enumerate() {
                    let f = ml_scalar(alpha, beta, lam * scale)?;
                    scaled.column_mut(j).scale_mut(f);
                }
                Ok(&scaled * basis.transpose())
            }
            Realization::Eigen {
                basis,
                inverse,
                eigenvalues,
            } => {
                let mut scaled = basis.clone();
                for (j, &lam) in eigenvalues.iter().enumerate() {
                    let f = ml_complex(alpha, beta, lam * Complex::new(scale, T::zero()))?;
                    for x in scaled.column_mut(j).iter_mut() {
                        *x *= f;
                    }
                }
                let full = &scaled * inverse;
                Ok(full.map(|c| c.re))
            }
            Realization::Taylor => {
                let m = &self.generator * scale;
                let norm = self.norm_bound * scale.abs();
                if alpha == T::one() && beta == T::one() {
                    exp_scaling_squaring(&m, norm)
                } else {
                    certified_taylor(alpha, beta, &m, norm)
                }
            }
        }
    }
}

fn choose_realization<T: Scalar>(m: &DMatrix<T>) -> Realization<T> {
    let n = m.nrows();
    let off_diagonal_zero = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == T::zero()));
    if off_diagonal_zero {
        return Realization::Diagonal(m.diagonal().iter().copied().collect());
    }
    if m == &m.transpose() {
        let eig = m.clone().symmetric_eigen();
        return Realization::Symmetric {
            basis: eig.eigenvectors,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        };
    }
    match complex_eigenbasis(m) {
        Some((basis, inverse, eigenvalues)) => Realization::Eigen {
            basis,
            inverse,
            eigenvalues,
        },
        None => Realization::Taylor,
    }
}

type Eigenbasis<T> = (DMatrix<Complex<T>>, DMatrix<Complex<T>>, Vec<Complex<T>>);

/// Eigenvectors by null spaces of `M - λI`, clustering numerically equal
/// eigenvalues. Returns `None` for defective or badly conditioned bases.
fn complex_eigenbasis<T: Scalar>(m: &DMatrix<T>) -> Option<Eigenbasis<T>> {
    let n = m.nrows();
    let eigs: Vec<Complex<T>> = m.clone().complex_eigenvalues().iter().copied().collect();
    if eigs.len() != n || eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    let scale = T::one() + m.norm();
    let tol = T::eps().sqrt() * scale;
    let mc: DMatrix<Complex<T>> = m.map(|x| Complex::new(x, T::zero()));

    let mut assigned = vec![false; n];
    let mut columns: Vec<nalgebra::DVector<Complex<T>>> = Vec::with_capacity(n);
    let mut values: Vec<Complex<T>> = Vec::with_capacity(n);
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && ComplexField::abs(eigs[j] - eigs[i]) <= tol)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        let mult = members.len();
        let mut center = Complex::new(T::zero(), T::zero());
        for &j in &members {
            center += eigs[j];
        }
        center /= Complex::new(T::from_usize_lossy(mult), T::zero());

        let shifted = &mc - DMatrix::<Complex<T>>::identity(n, n) * center;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[a]
                .partial_cmp(&svd.singular_values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if svd.singular_values[order[mult - 1]] > tol {
            return None;
        }
        for &r in order.iter().take(mult) {
            let col = v_t.row(r).transpose().map(|c| c.conj());
            columns.push(col);
            values.push(center);
        }
    }
    let basis = DMatrix::from_columns(&columns);
    let sv = basis.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let smin = sv.iter().copied().fold(T::max_finite(), |a, b| a.min(b));
    if !(smin > T::zero()) || smax / smin > T::lit(MAX_EIGEN_CONDITION) {
        return None;
    }
    let inverse = basis.clone().try_inverse()?;
    Some((basis, inverse, values))
}

fn remainder_target<T: Scalar>() -> T {
    T::lit(1e-8).max(T::eps() * T::lit(1e3))
}

/// Truncated Taylor series `Σ M^k / Γ(αk+β)` with a certified bound on the
/// spectral-norm error (truncation tail plus a rounding estimate).
fn certified_taylor<T: Scalar>(alpha: T, beta: T, m: &DMatrix<T>, norm: T) -> Result<DMatrix<T>> {
    let (sum, bound) = taylor_with_bound(alpha, beta, m, norm)?;
    let target = remainder_target::<T>();
    if bound > target {
        return Err(Error::Accuracy {
            achieved: bound.to_f64_lossy(),
            target: target.to_f64_lossy(),
        });
    }
    Ok(sum)
}

fn taylor_with_bound<T: Scalar>(alpha: T, beta: T, m: &DMatrix<T>, norm: T) -> Result<(DMatrix<T>, T)> {
    let n = m.nrows();
    let target = remainder_target::<T>();
    let mut term = DMatrix::<T>::identity(n, n) * recip_gamma(beta);
    let mut sum = term.clone();
    let mut abs_sum = term.norm();
    let ln_norm = if norm > T::zero() { norm.ln() } else { -T::max_finite() };
    // scalar majorant t_k = norm^k / Γ(αk+β)
    let majorant = |k: usize| -> T {
        if norm == T::zero() {
            return T::zero();
        }
        let kk = T::from_usize_lossy(k);
        (kk * ln_norm - ln_gamma(alpha * kk + beta)).exp()
    };
    for k in 1..TAYLOR_TERM_CAP {
        let kk = T::from_usize_lossy(k);
        let ratio = (ln_gamma(alpha * (kk - T::one()) + beta) - ln_gamma(alpha * kk + beta)).exp();
        term = (&term * m) * ratio;
        if term.iter().any(|x| !x.is_finite()) {
            break;
        }
        sum += &term;
        let tn = term.norm();
        abs_sum += tn;
        let rounding = T::eps() * T::from_usize_lossy(n + k) * abs_sum;
        if tn == T::zero() && term.iter().all(|x| *x == T::zero()) {
            // nilpotent: every later term vanishes identically
            return Ok((sum, rounding));
        }
        let next = majorant(k + 1);
        let rho = norm
            * (ln_gamma(alpha * (kk + T::one()) + beta) - ln_gamma(alpha * (kk + T::lit(2.0)) + beta)).exp();
        if rho < T::one() {
            let tail = next / (T::one() - rho);
            if tail <= target * T::lit(0.01) || tail + rounding <= T::eps() * abs_sum {
                return Ok((sum, tail + rounding));
            }
        }
    }
    Err(Error::Accuracy {
        achieved: T::max_finite().to_f64_lossy(),
        target: target.to_f64_lossy(),
    })
}

/// Matrix exponential by scaling and squaring around the certified series.
fn exp_scaling_squaring<T: Scalar>(m: &DMatrix<T>, norm: T) -> Result<DMatrix<T>> {
    let half = T::lit(0.5);
    let mut squarings = 0usize;
    let mut scaled_norm = norm;
    while scaled_norm > half && squarings < 64 {
        scaled_norm *= half;
        squarings += 1;
    }
    let factor = T::lit(2.0).powi(squarings as i32);
    let (mut x, mut err) = taylor_with_bound(T::one(), T::one(), &(m / factor), scaled_norm)?;
    let n = T::from_usize_lossy(m.nrows());
    let mut level_norm = scaled_norm;
    for _ in 0..squarings {
        let growth = level_norm.exp();
        x = &x * &x;
        level_norm *= T::lit(2.0);
        err = T::lit(2.0) * growth * err + err * err + T::eps() * n * level_norm.exp();
    }
    let target = remainder_target::<T>().max(T::eps() * T::lit(1e3) * norm.exp());
    if !(err <= target) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Accuracy {
            achieved: err.to_f64_lossy(),
            target: target.to_f64_lossy(),
        });
    }
    Ok(x)
}

/// `E_{α,β}(M)` for a square matrix.
pub fn ml_matrix<T: Scalar>(alpha: T, beta: T, m: &DMatrix<T>) -> Result<DMatrix<T>> {
    MatrixFunctionPlan::new(m)?.evaluate(alpha, beta, T::one())
}

/// The solution-operator pair generated by `A` at order `q`.
#[derive(Debug, Clone)]
pub struct OperatorPair<T: Scalar> {
    order: FracOrder<T>,
    plan: MatrixFunctionPlan<T>,
}

impl<T: Scalar> OperatorPair<T> {
    pub fn new(generator: &DMatrix<T>, order: FracOrder<T>) -> Result<Self> {
        Ok(Self {
            order,
            plan: MatrixFunctionPlan::new(generator)?,
        })
    }

    pub fn order(&self) -> FracOrder<T> {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.plan.dim()
    }

    /// `S_q(t) = E_{q,1}(A t^q)`; exactly the identity at `t = 0`.
    pub fn s(&self, t: T) -> Result<DMatrix<T>> {
        if !(t >= T::zero()) {
            return Err(Error::Domain(format!("S_q(t) needs t >= 0, got {t}")));
        }
        if t == T::zero() {
            return Ok(DMatrix::identity(self.dim(), self.dim()));
        }
        let q = self.order.value();
        self.plan.evaluate(q, T::one(), t.powf(q))
    }

    /// `T_q(t) = t^(q-1) E_{q,q}(A t^q)` for `t > 0`.
    pub fn t(&self, t: T) -> Result<DMatrix<T>> {
        if !(t > T::zero()) {
            return Err(Error::Domain(format!(
                "T_q(t) is singular at t = 0 and undefined for t < 0, got {t}"
            )));
        }
        let q = self.order.value();
        Ok(self.smooth_kernel(t)? * t.powf(q - T::one()))
    }

    /// The bounded factor `E_{q,q}(A t^q)` of `T_q(t)`, defined for `t >= 0`.
    pub fn smooth_kernel(&self, t: T) -> Result<DMatrix<T>> {
        if !(t >= T::zero()) {
            return Err(Error::Domain(format!("kernel needs t >= 0, got {t}")));
        }
        let q = self.order.value();
        self.plan.evaluate(q, q, t.powf(q))
    }
}

pub fn solution_op_s<T: Scalar>(a: &DMatrix<T>, q: FracOrder<T>, t: T) -> Result<DMatrix<T>> {
    OperatorPair::new(a, q)?.s(t)
}

pub fn solution_op_t<T: Scalar>(a: &DMatrix<T>, q: FracOrder<T>, t: T) -> Result<DMatrix<T>> {
    OperatorPair::new(a, q)?.t(t)
}
