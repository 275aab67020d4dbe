use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{DeclaredConstants, Trajectory};
use crate::error::{Error, Result};
use crate::mlfunc::FracOrder;
use crate::scalar::Scalar;

/// `f(t, x, (Hx)(t))`.
pub type Forcing<T> = Arc<dyn Fn(T, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync>;
/// Volterra integrand `h(t, s, x(s))`.
pub type VolterraKernel<T> = Arc<dyn Fn(T, T, &DVector<T>) -> DVector<T> + Send + Sync>;
/// Non-local map `g` acting on a whole trajectory.
pub type NonlocalMap<T> = Arc<dyn Fn(&Trajectory<T>) -> DVector<T> + Send + Sync>;
/// Impulse map `I_i` acting on the left limit `x(t_i^-)`.
pub type ImpulseMap<T> = Arc<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;

/// Problem datum of
///
/// ```text
/// ᶜDᵠ x(t) = A x(t) + f(t, x(t), (Hx)(t)) + B u(t),   t ∈ (t_i, t_{i+1}]
/// Δx(t_i)  = I_i(x(t_i⁻)) + D v(t_i⁻),                i = 1..m
/// x(0) + g(x) = x0
/// ```
///
/// Absent `forcing`, `kernel` or `nonlocal` mean the zero function.
#[derive(Clone)]
pub struct SystemSpec<T: Scalar> {
    pub q: T,
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub d: DMatrix<T>,
    pub x0: DVector<T>,
    pub horizon: T,
    pub impulse_times: Vec<T>,
    pub impulse_maps: Vec<ImpulseMap<T>>,
    pub forcing: Option<Forcing<T>>,
    pub kernel: Option<VolterraKernel<T>>,
    pub nonlocal: Option<NonlocalMap<T>>,
    /// User-asserted bounds used by the hypothesis diagnostics.
    pub declared: DeclaredConstants<T>,
}

impl<T: Scalar> fmt::Debug for SystemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("q", &self.q)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("d", &self.d)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("impulse_times", &self.impulse_times)
            .field("impulse_maps", &self.impulse_maps.len())
            .field("forcing", &self.forcing.is_some())
            .field("kernel", &self.kernel.is_some())
            .field("nonlocal", &self.nonlocal.is_some())
            .field("declared", &self.declared)
            .finish()
    }
}

impl<T: Scalar> SystemSpec<T> {
    /// Linear system without impulses, forcing or non-local term.
    pub fn linear(q: T, a: DMatrix<T>, b: DMatrix<T>, d: DMatrix<T>, x0: DVector<T>, horizon: T) -> Self {
        Self {
            q,
            a,
            b,
            d,
            x0,
            horizon,
            impulse_times: Vec::new(),
            impulse_maps: Vec::new(),
            forcing: None,
            kernel: None,
            nonlocal: None,
            declared: DeclaredConstants::default(),
        }
    }

    pub fn with_impulses(mut self, times: Vec<T>, maps: Vec<ImpulseMap<T>>) -> Self {
        self.impulse_times = times;
        self.impulse_maps = maps;
        self
    }

    pub fn with_forcing(mut self, f: Forcing<T>) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn with_kernel(mut self, h: VolterraKernel<T>) -> Self {
        self.kernel = Some(h);
        self
    }

    pub fn with_declared(mut self, declared: DeclaredConstants<T>) -> Self {
        self.declared = declared;
        self
    }

    pub fn with_nonlocal(mut self, g: NonlocalMap<T>) -> Self {
        self.nonlocal = Some(g);
        self
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> usize {
        self.b.ncols()
    }

    /// Number of impulse instants `m`.
    pub fn m(&self) -> usize {
        self.impulse_times.len()
    }

    pub fn segment_count(&self) -> usize {
        self.m() + 1
    }

    pub fn order(&self) -> Result<FracOrder<T>> {
        FracOrder::new(self.q)
    }

    /// `0 = t_0 < t_1 < … < t_m < t_{m+1} = b`.
    pub fn boundaries(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.m() + 2);
        out.push(T::zero());
        out.extend(self.impulse_times.iter().copied());
        out.push(self.horizon);
        out
    }

    /// `(t_i, t_{i+1})` for the 0-based segment `i`.
    pub fn segment_bounds(&self, i: usize) -> Result<(T, T)> {
        let bounds = self.boundaries();
        if i + 1 >= bounds.len() {
            return Err(Error::Index {
                index: i,
                valid: format!("0..={}", self.m()),
            });
        }
        Ok((bounds[i], bounds[i + 1]))
    }

    pub fn eval_forcing(&self, t: T, x: &DVector<T>, w: &DVector<T>) -> DVector<T> {
        match &self.forcing {
            Some(f) => f(t, x, w),
            None => DVector::zeros(self.n()),
        }
    }

    pub fn eval_nonlocal(&self, traj: &Trajectory<T>) -> DVector<T> {
        match &self.nonlocal {
            Some(g) => g(traj),
            None => DVector::zeros(self.n()),
        }
    }

    /// Every invariant violation, in a fixed order.
    pub fn validation_errors(&self) -> Vec<Error> {
        let mut errors = Vec::new();
        if let Err(e) = FracOrder::new(self.q) {
            errors.push(e);
        }
        let n = self.a.nrows();
        if n == 0 || !self.a.is_square() {
            errors.push(Error::Dimension(format!(
                "A must be square and non-empty, got {}x{}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.b.nrows() != n {
            errors.push(Error::Dimension(format!("B has {} rows, expected {n}", self.b.nrows())));
        }
        if self.d.nrows() != n {
            errors.push(Error::Dimension(format!("D has {} rows, expected {n}", self.d.nrows())));
        }
        if self.d.ncols() != self.b.ncols() {
            errors.push(Error::Dimension(format!(
                "D has {} columns but B has {}",
                self.d.ncols(),
                self.b.ncols()
            )));
        }
        if self.x0.len() != n {
            errors.push(Error::Dimension(format!("x0 has length {}, expected {n}", self.x0.len())));
        }
        let all_finite = self.a.iter().chain(self.b.iter()).chain(self.d.iter()).chain(self.x0.iter());
        if all_finite.into_iter().any(|v| !v.is_finite()) {
            errors.push(Error::Domain("system matrices and x0 must be finite".into()));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            errors.push(Error::Schedule(format!("horizon must be positive and finite, got {}", self.horizon)));
        }
        let mut prev = T::zero();
        for (i, &t) in self.impulse_times.iter().enumerate() {
            if !(t > prev) {
                errors.push(Error::Schedule(format!(
                    "impulse times must be strictly increasing and positive: t_{} = {t} after {prev}",
                    i + 1
                )));
            }
            if !(t < self.horizon) {
                errors.push(Error::Schedule(format!(
                    "impulse time must be interior: t_{} = {t} is not below the horizon {}",
                    i + 1,
                    self.horizon
                )));
            }
            prev = t;
        }
        if self.impulse_maps.len() != self.impulse_times.len() {
            errors.push(Error::Schedule(format!(
                "{} impulse times but {} impulse maps",
                self.impulse_times.len(),
                self.impulse_maps.len()
            )));
        }
        errors
    }

    pub fn validate(self) -> Result<Self> {
        match self.validation_errors().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Returns the spec iff every invariant holds; otherwise the first violation.
pub fn validate_spec<T: Scalar>(raw: SystemSpec<T>) -> Result<SystemSpec<T>> {
    raw.validate()
}
