//! Named nonlinearities a scenario file may reference. Each entry is a JSON
//! object whose `kind` selects the formula; the remaining fields are its
//! parameters.

use std::sync::Arc;

use fracctrl_core::bolza::{RunningCost, TerminalCost};
use fracctrl_core::system::{Forcing, ImpulseMap, KernelBound, NonlocalMap, VolterraKernel};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const FORCING_KINDS: &[&str] = &["bilinear", "affine", "tanh", "sine"];
pub const KERNEL_KINDS: &[&str] = &["exponential"];
pub const NONLOCAL_KINDS: &[&str] = &["multipoint"];
pub const IMPULSE_KINDS: &[&str] = &["affine", "scale"];
pub const TERMINAL_KINDS: &[&str] = &["quadratic", "zero"];
pub const RUNNING_KINDS: &[&str] = &["quadratic"];

/// One additive term of `f(t, x, w)`, `w = (Hx)(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingTerm {
    /// `c · x ⊙ w`.
    Bilinear { c: f64 },
    /// `F x + e`.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `c ⊙ tanh(W x)`.
    Tanh { c: Vec<f64>, w: Vec<Vec<f64>> },
    /// `amplitude · sin(omega t)`.
    Sine { amplitude: Vec<f64>, omega: f64 },
}

/// `h(t, s, x) = gain · e^{-rate (t - s)} x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelEntry {
    Exponential { rate: f64, gain: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipointTerm {
    pub time: f64,
    pub weight: f64,
}

/// `g(x) = Σ_j c_j x(s_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlocalEntry {
    Multipoint { terms: Vec<MultipointTerm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImpulseEntry {
    /// `I(x) = A x + d`.
    Affine { a: Vec<Vec<f64>>, d: Vec<f64> },
    /// `I(x) = factor · x`.
    Scale { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminalEntry {
    /// `Φ(x) = weight ‖x - target‖²`.
    Quadratic { target: Vec<f64>, weight: f64 },
    Zero,
}

/// `L = state_weight ‖x‖² + u_weight ‖u‖² + v_weight ‖v‖² + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunningEntry {
    Quadratic {
        #[serde(default)]
        state_weight: f64,
        u_weight: f64,
        v_weight: f64,
        #[serde(default)]
        constant: f64,
    },
}

/// Row-major nested arrays to a matrix; `None` if ragged.
pub fn matrix(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn shape(rows: &[Vec<f64>]) -> Option<(usize, usize)> {
    matrix(rows).map(|m| m.shape())
}

impl ForcingTerm {
    /// Parameter shape problems for an `n`-state system.
    pub fn problems(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Self::Bilinear { .. } => {}
            Self::Affine { matrix, offset } => {
                if shape(matrix) != Some((n, n)) {
                    out.push(format!("affine matrix must be {n}x{n}"));
                }
                if offset.len() != n {
                    out.push(format!("affine offset has length {}, expected {n}", offset.len()));
                }
            }
            Self::Tanh { c, w } => {
                if shape(w) != Some((n, n)) {
                    out.push(format!("tanh weight matrix must be {n}x{n}"));
                }
                if c.len() != n {
                    out.push(format!("tanh gain has length {}, expected {n}", c.len()));
                }
            }
            Self::Sine { amplitude, .. } => {
                if amplitude.len() != n {
                    out.push(format!("sine amplitude has length {}, expected {n}", amplitude.len()));
                }
            }
        }
        out
    }

    fn eval(&self, t: f64, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Bilinear { c } => x.component_mul(w) * *c,
            Self::Affine { matrix: m, offset } => {
                matrix(m).expect("validated") * x + DVector::from_column_slice(offset)
            }
            Self::Tanh { c, w: wm } => {
                let z = (matrix(wm).expect("validated") * x).map(f64::tanh);
                DVector::from_column_slice(c).component_mul(&z)
            }
            Self::Sine { amplitude, omega } => DVector::from_column_slice(amplitude) * (omega * t).sin(),
        }
    }
}

pub fn forcing(terms: &[ForcingTerm]) -> Option<Forcing<f64>> {
    if terms.is_empty() {
        return None;
    }
    let terms = terms.to_vec();
    Some(Arc::new(move |t, x: &DVector<f64>, w: &DVector<f64>| {
        terms.iter().fold(DVector::zeros(x.len()), |acc, f| acc + f.eval(t, x, w))
    }))
}

impl KernelEntry {
    pub fn build(&self) -> VolterraKernel<f64> {
        let Self::Exponential { rate, gain } = *self;
        Arc::new(move |t, s, x: &DVector<f64>| x * (gain * (-rate * (t - s)).exp()))
    }

    /// `|gain| e^{-rate (t - s)}`, a pointwise bound on the kernel factor.
    pub fn bound(&self) -> KernelBound<f64> {
        let Self::Exponential { rate, gain } = *self;
        Arc::new(move |t, s| gain.abs() * (-rate * (t - s)).exp())
    }
}

impl NonlocalEntry {
    pub fn problems(&self, horizon: f64) -> Vec<String> {
        let Self::Multipoint { terms } = self;
        terms
            .iter()
            .filter(|p| !(p.time >= 0.0 && p.time <= horizon))
            .map(|p| format!("multipoint time {} lies outside [0, {horizon}]", p.time))
            .collect()
    }

    pub fn build(&self) -> NonlocalMap<f64> {
        let Self::Multipoint { terms } = self.clone();
        Arc::new(move |traj| {
            terms.iter().fold(DVector::zeros(traj.dim()), |acc, p| {
                acc + traj.eval(p.time).expect("multipoint time inside the horizon") * p.weight
            })
        })
    }

    /// `Σ |c_j|`, the Lipschitz constant of `g` in the sup norm.
    pub fn lipschitz(&self) -> f64 {
        let Self::Multipoint { terms } = self;
        terms.iter().map(|p| p.weight.abs()).sum()
    }
}

impl ImpulseEntry {
    pub fn problems(&self, n: usize) -> Vec<String> {
        match self {
            Self::Affine { a, d } => {
                let mut out = Vec::new();
                if shape(a) != Some((n, n)) {
                    out.push(format!("affine impulse matrix must be {n}x{n}"));
                }
                if d.len() != n {
                    out.push(format!("affine impulse offset has length {}, expected {n}", d.len()));
                }
                out
            }
            Self::Scale { .. } => Vec::new(),
        }
    }

    pub fn build(&self) -> ImpulseMap<f64> {
        match self {
            Self::Affine { a, d } => {
                let (a, d) = (matrix(a).expect("validated"), DVector::from_column_slice(d));
                Arc::new(move |x: &DVector<f64>| &a * x + &d)
            }
            Self::Scale { factor } => {
                let f = *factor;
                Arc::new(move |x: &DVector<f64>| x * f)
            }
        }
    }

    /// Spectral norm of the linear part.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Affine { a, .. } => matrix(a).map_or(f64::NAN, |m| m.singular_values().max()),
            Self::Scale { factor } => factor.abs(),
        }
    }
}

impl TerminalEntry {
    pub fn build(&self) -> TerminalCost<f64> {
        match self {
            Self::Quadratic { target, weight } => {
                let (target, w) = (DVector::from_column_slice(target), *weight);
                Arc::new(move |x: &DVector<f64>| (x - &target).norm_squared() * w)
            }
            Self::Zero => Arc::new(|_: &DVector<f64>| 0.0),
        }
    }
}

impl RunningEntry {
    pub fn build(&self) -> RunningCost<f64> {
        let Self::Quadratic { state_weight, u_weight, v_weight, constant } = *self;
        Arc::new(move |_, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
            state_weight * x.norm_squared() + u_weight * u.norm_squared() + v_weight * v.norm_squared() + constant
        })
    }
}
