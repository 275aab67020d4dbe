//! Spectrum diagnostic for the sectorial-operator hypothesis.
//!
//! The q-resolvent `(w I - A)^{-1}` must exist for `w` outside the sector
//! `μ + S_θ`, where `S_θ = { w : |Arg(-w)| < θ }` opens around the negative
//! real axis. In finite dimensions that amounts to every eigenvalue lying
//! inside the sector (or at its vertex). The report is advisory and never
//! gates other computations.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::Scalar;
use super::FracOrder;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorParams<T> {
    pub mu: T,
    pub theta: T,
}

impl<T: Scalar> Default for SectorParams<T> {
    fn default() -> Self {
        Self {
            mu: T::zero(),
            theta: T::frac_pi_4(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSectorCheck<T> {
    pub eigenvalue: Complex<T>,
    /// `|Arg(-(λ - μ))|`, zero on the ray pointing left from the vertex.
    pub sector_angle: T,
    pub pass: bool,
}

/// Suggested `(M, θ, μ)` under which the spectrum is sectorial.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorEstimate<T> {
    pub m: T,
    pub theta: T,
    pub mu: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorialReport<T> {
    pub order: T,
    pub params: SectorParams<T>,
    pub eigenvalues: Vec<EigenSectorCheck<T>>,
    pub all_pass: bool,
    pub suggested: SectorEstimate<T>,
}

fn sector_angle<T: Scalar>(lambda: Complex<T>, mu: T) -> T {
    let d = lambda - Complex::new(mu, T::zero());
    if d.re == T::zero() && d.im == T::zero() {
        return T::zero();
    }
    (-d.im).atan2(-d.re).abs()
}

pub fn sectorial_diagnostic<T: Scalar>(
    a: &DMatrix<T>,
    q: FracOrder<T>,
    params: SectorParams<T>,
) -> SectorialReport<T> {
    let eigenvalues: Vec<Complex<T>> = if a.is_square() && a.nrows() > 0 {
        a.clone().complex_eigenvalues().iter().copied().collect()
    } else {
        Vec::new()
    };
    let checks: Vec<EigenSectorCheck<T>> = eigenvalues
        .iter()
        .map(|&lambda| {
            let angle = sector_angle(lambda, params.mu);
            let vertex = lambda.re == params.mu && lambda.im == T::zero();
            EigenSectorCheck {
                eigenvalue: lambda,
                sector_angle: angle,
                pass: vertex || angle < params.theta,
            }
        })
        .collect();
    let all_pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
    let suggested = suggest(a, &eigenvalues);
    SectorialReport {
        order: q.value(),
        params,
        eigenvalues: checks,
        all_pass,
        suggested,
    }
}

fn suggest<T: Scalar>(a: &DMatrix<T>, eigenvalues: &[Complex<T>]) -> SectorEstimate<T> {
    if eigenvalues.is_empty() {
        return SectorEstimate {
            m: T::zero(),
            theta: T::frac_pi_4(),
            mu: T::zero(),
        };
    }
    let max_re = eigenvalues.iter().map(|z| z.re).fold(-T::max_finite(), |x, y| x.max(y));
    let max_im = eigenvalues.iter().map(|z| z.im.abs()).fold(T::zero(), |x, y| x.max(y));
    let mu = max_re + max_im + T::one();
    let max_angle = eigenvalues
        .iter()
        .map(|&z| sector_angle(z, mu))
        .fold(T::zero(), |x, y| x.max(y));
    let theta = (max_angle + T::frac_pi_2()) * T::lit(0.5);

    // sup of |w - μ| ‖(wI - A)^{-1}‖ over sampled points outside the sector
    let n = a.nrows();
    let ac: DMatrix<Complex<T>> = a.map(|x| Complex::new(x, T::zero()));
    let reach = T::one() + a.norm();
    let mut m_est = T::zero();
    let angle_span = T::pi() - theta;
    for ia in 0..=32 {
        let psi = -angle_span + angle_span * T::lit(2.0) * T::from_usize_lossy(ia) / T::lit(32.0);
        for ir in 0..=24 {
            let rho = reach * T::lit(10.0).powf(T::lit(-3.0) + T::lit(6.0) * T::from_usize_lossy(ir) / T::lit(24.0));
            let w = Complex::new(mu + rho * psi.cos(), rho * psi.sin());
            let shifted = DMatrix::<Complex<T>>::identity(n, n) * w - &ac;
            let sv = shifted.svd(false, false).singular_values;
            let smin = sv.iter().copied().fold(T::max_finite(), |x, y| x.min(y));
            if smin > T::zero() {
                m_est = m_est.max(rho / smin);
            }
        }
    }
    SectorEstimate { m: m_est, theta, mu }
}
