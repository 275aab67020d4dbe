//! Randomized scenarios: classical (q = 1) ones with a matching ODE
//! right-hand side for the Runge–Kutta oracle, and impulsive fractional ones.

use std::sync::Arc;

use fracctrl_core::system::{ControlLaw, Forcing, ImpulseMap, SystemSpec, VolterraKernel};
use nalgebra::{dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `x' = A x + c ⊙ tanh(W x) + κ w + sin(ω t) e + B u`, with the optional
/// Volterra term `w(t) = ∫_0^t e^{-(t-s)} x(s) ds`, i.e. `w' = x - w`.
#[derive(Debug, Clone)]
pub struct Lipschitz {
    pub a: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub c: DVector<f64>,
    pub kappa: f64,
    pub omega: f64,
    pub e: DVector<f64>,
    pub b: DMatrix<f64>,
    pub u: DVector<f64>,
    pub x0: DVector<f64>,
    pub horizon: f64,
    pub volterra: bool,
}

fn spectral(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

impl Lipschitz {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let p = rng.gen_range(1..=2);
        let mut mat = |r: usize, c: usize, s: f64| DMatrix::from_fn(r, c, |_, _| rng.gen_range(-s..s));
        let a = mat(n, n, 1.0);
        let mut w = mat(n, n, 1.0);
        let b = mat(n, p, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let mut vec = |len: usize, s: f64| DVector::from_fn(len, |_, _| rng.gen_range(-s..s));
        let c = vec(n, 1.0);
        let e = vec(n, 0.5);
        let u = vec(p, 1.0);
        let x0 = vec(n, 1.0);
        // Lipschitz constant of f in x: max|c| ‖W‖ <= 1.5; in w: κ <= 0.5.
        let cw = c.amax() * spectral(&w);
        if cw > 1.5 {
            w *= 1.5 / cw;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31) + 7);
        let volterra = seed.is_multiple_of(2);
        Self {
            a,
            w,
            c,
            kappa: if volterra { rng.gen_range(0.0..0.5) } else { 0.0 },
            omega: rng.gen_range(0.5..3.0),
            e,
            b,
            u,
            x0,
            horizon: rng.gen_range(0.5..=2.0),
            volterra,
        }
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn lipschitz_x(&self) -> f64 {
        self.c.amax() * spectral(&self.w)
    }

    fn forcing(&self, t: f64, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let tanh = (&self.w * x).map(f64::tanh);
        self.c.component_mul(&tanh) + w * self.kappa + &self.e * (self.omega * t).sin()
    }

    pub fn spec(&self) -> SystemSpec<f64> {
        let me = self.clone();
        let f: Forcing<f64> = Arc::new(move |t, x: &DVector<f64>, w: &DVector<f64>| me.forcing(t, x, w));
        let d = DMatrix::zeros(self.n(), self.b.ncols());
        let mut spec = SystemSpec::linear(1.0, self.a.clone(), self.b.clone(), d, self.x0.clone(), self.horizon)
            .with_forcing(f);
        if self.volterra {
            let h: VolterraKernel<f64> = Arc::new(|t, s, x: &DVector<f64>| x * (s - t).exp());
            spec = spec.with_kernel(h);
        }
        spec
    }

    pub fn controls(&self, spec: &SystemSpec<f64>) -> ControlLaw<f64> {
        ControlLaw::constant(spec, self.u.clone())
    }

    /// Right-hand side on `[x; w]`.
    pub fn rhs(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let n = self.n();
        let x = DVector::from_column_slice(&y[..n]);
        let w = DVector::from_column_slice(&y[n..]);
        let dx = &self.a * &x + self.forcing(t, &x, &w) + &self.b * &self.u;
        let dw = &x - &w;
        dx.iter().chain(dw.iter()).copied().collect()
    }

    pub fn initial(&self) -> Vec<f64> {
        self.x0.iter().copied().chain(std::iter::repeat_n(0.0, self.n())).collect()
    }
}

/// Scalar-input fractional system with 1 to 3 impulses, nonlinear impulse
/// maps and forcing, and constant random controls.
pub fn impulsive(seed: u64) -> (SystemSpec<f64>, ControlLaw<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=2);
    let q = rng.gen_range(0.55..1.0);
    let m = rng.gen_range(1..=3);
    let horizon = 1.0 + m as f64 * 0.5;
    let mut times: Vec<f64> = (1..=m).map(|i| i as f64 * horizon / (m + 1) as f64 + rng.gen_range(-0.1..0.1)).collect();
    times.sort_by(f64::total_cmp);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..0.5));
    let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
    let d = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let maps: Vec<ImpulseMap<f64>> = (0..m)
        .map(|_| {
            let s: f64 = rng.gen_range(-0.5..0.5);
            Arc::new(move |x: &DVector<f64>| x.map(|v| s * v.sin())) as ImpulseMap<f64>
        })
        .collect();
    let c: f64 = rng.gen_range(-0.5..0.5);
    let f: Forcing<f64> = Arc::new(move |t, x: &DVector<f64>, _| x.map(|v| c * v.cos()) + DVector::from_element(x.len(), 0.2 * t));
    let spec = SystemSpec::linear(q, a, b, d, x0, horizon).with_impulses(times, maps).with_forcing(f);
    let mut law = ControlLaw::constant(&spec, dvector![rng.gen_range(-1.0..1.0)]);
    law.v_impulses = (0..m).map(|_| dvector![rng.gen_range(-1.0..1.0)]).collect();
    (spec, law)
}
