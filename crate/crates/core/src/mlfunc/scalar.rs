//! Scalar two-parameter Mittag-Leffler function E_{α,β}(z).
//!
//! Two evaluation routes:
//!
//! * `|z| <= 1`: the defining power series with Neumaier-compensated
//!   summation;
//! * otherwise: numerical inversion of the Laplace transform
//!   `s^(α-β) / (s^α - z)` along an optimal parabolic contour, with the
//!   residues of the poles that lie to the right of the contour added
//!   explicitly (Garrappa's algorithm).
//!
//! The contour route is needed because the series suffers catastrophic
//! cancellation for moderately large negative arguments when α is small
//! (for α = 0.3 and z = -10 the largest term is around 1e936).

use nalgebra::ComplexField;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::recip_gamma;

/// Arguments with modulus up to this radius are summed as a series.
pub const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERM_CAP: usize = 10_000;

fn check_parameters<T: Scalar>(alpha: T, beta: T) -> Result<()> {
    if !(alpha > T::zero() && alpha <= T::lit(2.0)) {
        return Err(Error::Domain(format!(
            "Mittag-Leffler order alpha = {alpha} must lie in (0, 2]"
        )));
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "Mittag-Leffler parameter beta = {beta} must be positive"
        )));
    }
    Ok(())
}

/// E_{α,β}(z) for real `z`.
pub fn ml_scalar<T: Scalar>(alpha: T, beta: T, z: T) -> Result<T> {
    let value = ml_complex(alpha, beta, Complex::new(z, T::zero()))?;
    Ok(value.re)
}

/// E_{α,β}(z) for complex `z`.
pub fn ml_complex<T: Scalar>(alpha: T, beta: T, z: Complex<T>) -> Result<Complex<T>> {
    check_parameters(alpha, beta)?;
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain("Mittag-Leffler argument is not finite".into()));
    }
    let zero = T::zero();
    if z.re == zero && z.im == zero {
        return Ok(Complex::new(recip_gamma(beta), zero));
    }
    if alpha == T::one() && beta == T::one() {
        let e = ComplexField::exp(z);
        return finite_or_overflow(e, alpha, beta, z);
    }
    let value = if ComplexField::abs(z) <= T::lit(SERIES_RADIUS) {
        series(alpha, beta, z)
    } else {
        let mut v = laplace_inversion(alpha, beta, z);
        if z.im == zero {
            v.im = zero;
        }
        v
    };
    finite_or_overflow(value, alpha, beta, z)
}

fn finite_or_overflow<T: Scalar>(
    v: Complex<T>,
    alpha: T,
    beta: T,
    z: Complex<T>,
) -> Result<Complex<T>> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!(
            "E_({alpha},{beta})({} + {}i) exceeds the representable range",
            z.re, z.im
        )))
    }
}

/// Neumaier running sum for one real component.
#[derive(Clone, Copy)]
struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> Compensated<T> {
    fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

fn series<T: Scalar>(alpha: T, beta: T, z: Complex<T>) -> Complex<T> {
    let mut re = Compensated::new();
    let mut im = Compensated::new();
    let mut power = Complex::new(T::one(), T::zero());
    let mut small_run = 0;
    for k in 0..SERIES_TERM_CAP {
        let term = power * recip_gamma(alpha * T::from_usize_lossy(k) + beta);
        re.add(term.re);
        im.add(term.im);
        let total = Complex::new(re.value(), im.value());
        if ComplexField::abs(term) <= T::eps() * ComplexField::abs(total) * T::lit(0.25) {
            small_run += 1;
            // 1/Γ is not monotone for small arguments, so require a run of
            // negligible terms before stopping
            if small_run >= 4 && alpha * T::from_usize_lossy(k) + beta > T::lit(2.0) {
                break;
            }
        } else {
            small_run = 0;
        }
        power *= z;
    }
    Complex::new(re.value(), im.value())
}

struct ContourParams<T> {
    mu: T,
    h: T,
    n: T,
}

fn infinite_params<T: Scalar>() -> ContourParams<T> {
    ContourParams {
        mu: T::zero(),
        h: T::zero(),
        n: T::max_finite(),
    }
}

/// Laplace-transform inversion for E_{α,β}(z) at t = 1.
fn laplace_inversion<T: Scalar>(alpha: T, beta: T, lambda: Complex<T>) -> Complex<T> {
    let two = T::lit(2.0);
    let pi = T::pi();
    let log_eps_machine = T::eps().ln();
    let mut log_epsilon = T::lit(1e-15).max(T::eps() * T::lit(10.0)).ln();

    // poles s^α = λ on the principal sheet
    let theta = lambda.im.atan2(lambda.re);
    let kmin = (-alpha / two - theta / (two * pi)).ceil();
    let kmax = (alpha / two - theta / (two * pi)).floor();
    let modulus = ComplexField::abs(lambda).powf(T::one() / alpha);
    let mut poles: Vec<(T, Complex<T>)> = Vec::new();
    let mut k = kmin;
    while k <= kmax {
        let angle = (theta + two * k * pi) / alpha;
        let s = Complex::new(modulus * angle.cos(), modulus * angle.sin());
        let phi = (s.re + ComplexField::abs(s)) / two;
        if phi > T::lit(1e-15) {
            poles.push((phi, s));
        }
        k += T::one();
    }
    poles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut singular: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero())];
    let mut phi: Vec<T> = vec![T::zero()];
    for (p, s) in &poles {
        singular.push(*s);
        phi.push(*p);
    }
    let j1 = singular.len();
    let j = j1 - 1;
    let mut p_strength = vec![T::one(); j1];
    p_strength[0] = T::zero().max(-two * (alpha - beta + T::one()));
    let mut q_strength = vec![T::one(); j1];
    q_strength[j1 - 1] = T::max_finite();
    let _ = j;
    phi.push(T::max_finite());

    let threshold = log_epsilon - log_eps_machine;
    let admissible: Vec<usize> = (0..j1)
        .filter(|&i| phi[i] < threshold && phi[i] < phi[i + 1])
        .collect();

    let mut params: Vec<ContourParams<T>> = (0..j1).map(|_| infinite_params()).collect();
    let mut attempts = 0;
    loop {
        for &i in &admissible {
            params[i] = if i < j1 - 1 {
                optimal_params_bounded(
                    phi[i],
                    phi[i + 1],
                    p_strength[i],
                    q_strength[i],
                    log_epsilon,
                    log_eps_machine,
                )
            } else {
                optimal_params_unbounded(phi[i], p_strength[i], log_epsilon, log_eps_machine)
            };
        }
        let min_n = params
            .iter()
            .map(|p| p.n)
            .fold(T::max_finite(), |a, b| a.min(b));
        attempts += 1;
        if min_n > T::lit(200.0) && attempts < 16 {
            log_epsilon += T::lit(10.0).ln();
        } else {
            break;
        }
    }

    let (best, _) = params
        .iter()
        .enumerate()
        .fold((0usize, T::max_finite()), |(bi, bn), (i, p)| {
            if p.n < bn {
                (i, p.n)
            } else {
                (bi, bn)
            }
        });
    let ContourParams { mu, h, n } = params.swap_remove(best);
    let nodes = n.to_f64_lossy().min(1.0e6) as i64;

    let i_unit = Complex::new(T::zero(), T::one());
    let mut acc_re = Compensated::new();
    let mut acc_im = Compensated::new();
    for kk in -nodes..=nodes {
        let u = h * T::lit(kk as f64);
        let w = Complex::new(T::one(), u);
        let s = w * w * mu;
        let ds = Complex::new(-two * mu * u, two * mu);
        let num = ComplexField::powc(s, Complex::new(alpha - beta, T::zero()));
        let den = ComplexField::powc(s, Complex::new(alpha, T::zero())) - lambda;
        let term = ComplexField::exp(s) * num / den * ds;
        acc_re.add(term.re);
        acc_im.add(term.im);
    }
    let integral =
        Complex::new(acc_re.value(), acc_im.value()) * h / (i_unit * two * pi);

    // residues of poles to the right of the chosen contour
    let mut residues = Complex::new(T::zero(), T::zero());
    for s in singular.iter().skip(best + 1) {
        let r = ComplexField::powc(*s, Complex::new(T::one() - beta, T::zero()))
            * ComplexField::exp(*s)
            / alpha;
        residues += r;
    }
    integral + residues
}

fn optimal_params_bounded<T: Scalar>(
    phi_j: T,
    phi_j1: T,
    p: T,
    q: T,
    log_epsilon: T,
    log_eps_machine: T,
) -> ContourParams<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let fac = T::lit(1.01);
    let tiny = T::lit(1e-14);
    let f_max = (log_epsilon - log_eps_machine).exp();
    let sq_phi_j = phi_j.sqrt();
    let threshold = two * (log_epsilon - log_eps_machine).sqrt();
    let sq_phi_j1 = phi_j1.sqrt().min(threshold - sq_phi_j);

    let mut f_bar = one;
    let (sq_bar_j, sq_bar_j1) = if p < tiny && q < tiny {
        (sq_phi_j, sq_phi_j1)
    } else if p < tiny {
        let f_min = if sq_phi_j > T::zero() {
            fac * (sq_phi_j / (sq_phi_j1 - sq_phi_j)).powf(q)
        } else {
            fac
        };
        if f_min >= f_max {
            return infinite_params();
        }
        f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fq = f_bar.powf(-one / q);
        (sq_phi_j, (two * sq_phi_j1 - fq * sq_phi_j) / (two + fq))
    } else if q < tiny {
        let f_min = fac * (sq_phi_j1 / (sq_phi_j1 - sq_phi_j)).powf(p);
        if f_min >= f_max {
            return infinite_params();
        }
        f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-one / p);
        ((two * sq_phi_j + fp * sq_phi_j1) / (two - fp), sq_phi_j1)
    } else {
        let mut f_min = fac * (sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j).powf(p.max(q));
        if f_min >= f_max {
            return infinite_params();
        }
        f_min = f_min.max(T::lit(1.5));
        f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-one / p);
        let fq = f_bar.powf(-one / q);
        let w = -phi_j1 / log_epsilon;
        let den = two + w - (one + w) * fp + fq;
        (
            ((two + w + fq) * sq_phi_j + fp * sq_phi_j1) / den,
            (-(one + w) * fq * sq_phi_j + (two + w - (one + w) * fp) * sq_phi_j1) / den,
        )
    };

    let log_epsilon = log_epsilon - f_bar.ln();
    let w = -sq_bar_j1 * sq_bar_j1 / log_epsilon;
    let mu = (((one + w) * sq_bar_j + sq_bar_j1) / (two + w)).powi(2);
    let h = -T::two_pi() / log_epsilon * (sq_bar_j1 - sq_bar_j)
        / ((one + w) * sq_bar_j + sq_bar_j1);
    let n = ((one - log_epsilon / mu).sqrt() / h).ceil();
    if !(h > T::zero()) || !n.is_finite() {
        return infinite_params();
    }
    ContourParams { mu, h, n }
}

fn optimal_params_unbounded<T: Scalar>(
    phi_j: T,
    p: T,
    log_epsilon: T,
    log_eps_machine: T,
) -> ContourParams<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let pi = T::pi();
    let tiny = T::lit(1e-14);
    let sq_phi_j = phi_j.sqrt();
    let mut phibar = if phi_j > T::zero() {
        phi_j * T::lit(1.01)
    } else {
        T::lit(0.01)
    };
    let mut sq_phibar = phibar.sqrt();
    let (f_min, f_max, f_tar) = (one, T::lit(10.0), T::lit(5.0));

    let mut n;
    let mut a;
    let mut sq_mu;
    let mut guard = 0;
    loop {
        let phi_t = phibar;
        let log_eps_phi_t = log_epsilon / phi_t;
        n = (phi_t / pi * (one - T::lit(1.5) * log_eps_phi_t + (one - two * log_eps_phi_t).sqrt()))
            .ceil();
        a = pi * n / phi_t;
        sq_mu = sq_phibar * (T::lit(4.0) - a).abs()
            / (T::lit(7.0) - (one + T::lit(12.0) * a).sqrt()).abs();
        let f_bar = ((sq_phibar - sq_phi_j) / sq_mu).powf(-p);
        guard += 1;
        let stop = p < tiny || (f_min < f_bar && f_bar < f_max) || guard > 100;
        if stop {
            break;
        }
        sq_phibar = f_tar.powf(-one / p) * sq_mu + sq_phi_j;
        phibar = sq_phibar * sq_phibar;
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-T::lit(3.0) * a - two + two * (one + T::lit(12.0) * a).sqrt()) / (T::lit(4.0) - a) / n;

    let threshold = log_epsilon - log_eps_machine;
    if mu > threshold {
        let q = if p.abs() < tiny {
            T::zero()
        } else {
            f_tar.powf(-one / p) * mu.sqrt()
        };
        let phibar = (q + phi_j.sqrt()).powi(2);
        if phibar < threshold {
            let w = (log_eps_machine / (log_eps_machine - log_epsilon)).sqrt();
            let u = (-phibar / log_eps_machine).sqrt();
            mu = threshold;
            n = (w * log_epsilon / two / pi / (u * w - one)).ceil();
            h = (log_eps_machine / (log_eps_machine - log_epsilon)).sqrt() / n;
        } else {
            return infinite_params();
        }
    }
    if !(h > T::zero()) || !n.is_finite() {
        return infinite_params();
    }
    ContourParams { mu, h, n }
}
