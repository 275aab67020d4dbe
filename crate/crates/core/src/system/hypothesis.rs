//! Runnable diagnostics for the standing hypotheses of the existence theory.

use std::fmt;
use std::sync::Arc;

use super::SystemSpec;
use crate::error::Result;
use crate::mlfunc::OperatorPair;
use crate::scalar::Scalar;

/// Scalar kernel bound `m(t, s)` with `‖h(t, s, x)‖ <= m(t, s) ‖x‖`.
pub type KernelBound<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Constants the user asserts for `f`, `g`, `h` and the impulse maps.
/// None of them is inferred from the black-box functions.
#[derive(Clone)]
pub struct DeclaredConstants<T: Scalar> {
    /// Lipschitz constant of `g`.
    pub beta: T,
    /// Lipschitz constants `d_i` of the impulse maps.
    pub d: Vec<T>,
    /// Linear-growth constants `e_i` of the impulse maps.
    pub e: Vec<T>,
    /// `‖μ₁‖∞, ‖μ₂‖∞, ‖μ₃‖∞` of the growth bound on `f`.
    pub mu_bounds: [T; 3],
    /// Lipschitz constants of `f` in `x` and in `Hx`.
    pub alpha1: T,
    pub alpha2: T,
    pub kernel_bound: Option<KernelBound<T>>,
}

impl<T: Scalar> Default for DeclaredConstants<T> {
    fn default() -> Self {
        Self {
            beta: T::zero(),
            d: Vec::new(),
            e: Vec::new(),
            mu_bounds: [T::zero(); 3],
            alpha1: T::zero(),
            alpha2: T::zero(),
            kernel_bound: None,
        }
    }
}

impl<T: Scalar> fmt::Debug for DeclaredConstants<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeclaredConstants")
            .field("beta", &self.beta)
            .field("d", &self.d)
            .field("e", &self.e)
            .field("mu_bounds", &self.mu_bounds)
            .field("alpha1", &self.alpha1)
            .field("alpha2", &self.alpha2)
            .field("kernel_bound", &self.kernel_bound.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionFlags {
    /// `M β < 1`.
    pub nonlocal: bool,
    /// `M (1 + d_i) < 1` per impulse.
    pub impulses: Vec<bool>,
}

impl ContractionFlags {
    pub fn all(&self) -> bool {
        self.nonlocal && self.impulses.iter().all(|&b| b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport<T: Scalar> {
    /// `max ‖S_q(t)‖, ‖T_q(t)‖` over sampled `t ∈ [δ, b]` (spectral norm).
    pub m_est: T,
    pub delta: T,
    pub beta: T,
    pub d: Vec<T>,
    pub e: Vec<T>,
    pub mu_bounds: [T; 3],
    pub alpha1: T,
    pub alpha2: T,
    /// `K*_i = sup_t ∫_{t_{i-1}}^{min(t_i, t)} m(t, s) ds`, `i = 1..m+1`;
    /// empty without a declared kernel bound.
    pub k_star: Vec<T>,
    pub m_beta: T,
    pub contraction: ContractionFlags,
    pub contraction_ok: bool,
    /// Declared constants that were negative (reported, not rejected).
    pub negative_constants: Vec<String>,
}

const OPERATOR_SAMPLES: usize = 200;
const KERNEL_T_SAMPLES: usize = 200;
const KERNEL_S_CELLS: usize = 1000;

fn spectral_norm<T: Scalar>(m: &nalgebra::DMatrix<T>) -> T {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |a, b| a.max(b))
}

/// Advisory report on the contraction conditions `Mβ < 1` and `M(1+d_i) < 1`.
///
/// `delta` defaults to `b / 1000`; `T_q` is singular at `0` for `q < 1`, so
/// the operator bound is only ever estimated on `[δ, b]`.
pub fn hypothesis_check<T: Scalar>(
    spec: &SystemSpec<T>,
    declared: &DeclaredConstants<T>,
    delta: Option<T>,
) -> Result<HypothesisReport<T>> {
    let b = spec.horizon;
    let delta = delta.unwrap_or(b / T::lit(1000.0));
    let pair = OperatorPair::new(&spec.a, spec.order()?)?;

    // linear and logarithmic samples so both ends of [δ, b] are resolved
    let mut m_est = T::zero();
    let ratio = b / delta;
    for k in 0..=OPERATOR_SAMPLES {
        let frac = T::from_usize_lossy(k) / T::from_usize_lossy(OPERATOR_SAMPLES);
        for t in [delta + (b - delta) * frac, delta * ratio.powf(frac)] {
            let t = t.min(b).max(delta);
            m_est = m_est.max(spectral_norm(&pair.s(t)?));
            m_est = m_est.max(spectral_norm(&pair.t(t)?));
        }
    }

    let k_star = match &declared.kernel_bound {
        None => Vec::new(),
        Some(m) => {
            let bounds = spec.boundaries();
            bounds
                .windows(2)
                .map(|w| {
                    let (lo, hi) = (w[0], w[1]);
                    let mut best = T::zero();
                    for k in 0..=KERNEL_T_SAMPLES {
                        let t = b * T::from_usize_lossy(k) / T::from_usize_lossy(KERNEL_T_SAMPLES);
                        let upper = hi.min(t);
                        if upper <= lo {
                            continue;
                        }
                        let h = (upper - lo) / T::from_usize_lossy(KERNEL_S_CELLS);
                        let mut acc = (m(t, lo) + m(t, upper)) * T::lit(0.5);
                        for j in 1..KERNEL_S_CELLS {
                            acc += m(t, lo + h * T::from_usize_lossy(j));
                        }
                        best = best.max(acc * h);
                    }
                    best
                })
                .collect()
        }
    };

    let mut negative_constants = Vec::new();
    let mut flag = |name: &str, v: T| {
        if v < T::zero() {
            negative_constants.push(format!("{name} = {v}"));
        }
    };
    flag("beta", declared.beta);
    flag("alpha1", declared.alpha1);
    flag("alpha2", declared.alpha2);
    for (i, &v) in declared.d.iter().enumerate() {
        flag(&format!("d_{}", i + 1), v);
    }
    for (i, &v) in declared.e.iter().enumerate() {
        flag(&format!("e_{}", i + 1), v);
    }
    for (i, &v) in declared.mu_bounds.iter().enumerate() {
        flag(&format!("mu_{}", i + 1), v);
    }

    let m_beta = m_est * declared.beta;
    let contraction = ContractionFlags {
        nonlocal: m_beta < T::one(),
        impulses: declared.d.iter().map(|&d| m_est * (T::one() + d) < T::one()).collect(),
    };
    let contraction_ok = contraction.all();
    Ok(HypothesisReport {
        m_est,
        delta,
        beta: declared.beta,
        d: declared.d.clone(),
        e: declared.e.clone(),
        mu_bounds: declared.mu_bounds,
        alpha1: declared.alpha1,
        alpha2: declared.alpha2,
        k_star,
        m_beta,
        contraction,
        contraction_ok,
        negative_constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn scalar(a: f64, q: f64) -> SystemSpec<f64> {
        SystemSpec::linear(q, dmatrix![a], dmatrix![1.0], dmatrix![0.0], dvector![1.0], 1.0)
    }

    #[test]
    fn free_classical_flow_has_unit_bound() {
        let declared = DeclaredConstants {
            beta: 0.5,
            ..Default::default()
        };
        let r = hypothesis_check(&scalar(0.0, 1.0), &declared, None).unwrap();
        assert!((r.m_est - 1.0).abs() < 1e-15);
        assert_eq!(r.m_beta, 0.5);
        assert!(r.contraction_ok);
        let r2 = hypothesis_check(&scalar(0.0, 1.0), &DeclaredConstants { beta: 2.0, ..declared }, None).unwrap();
        assert!(!r2.contraction_ok);
    }

    #[test]
    fn kernel_bound_integral() {
        let declared = DeclaredConstants {
            kernel_bound: Some(Arc::new(|_, _| 1.0)),
            ..Default::default()
        };
        let r = hypothesis_check(&scalar(-1.0, 0.75), &declared, None).unwrap();
        assert_eq!(r.k_star.len(), 1);
        assert!((r.k_star[0] - 1.0).abs() < 1e-8);
    }
}
