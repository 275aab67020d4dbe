//! Euler gamma function for generic scalars.
//!
//! Lanczos approximation (g = 7, nine coefficients) with the reflection
//! formula below one half. Relative accuracy is close to `1e-15` in `f64`.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Scalar>(x: T) -> T {
    let mut acc = T::lit(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(*c) / (x + T::from_usize_lossy(i));
    }
    acc
}

/// Γ(x) for real `x`. Poles return infinity; overflow returns infinity.
pub fn gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        if x == x.floor() {
            return T::max_finite() * T::lit(2.0);
        }
        let pi = T::pi();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    if x == x.floor() && x <= T::lit(171.0) {
        return factorial_of(x);
    }
    if x > T::lit(140.0) {
        return ln_gamma(x).exp();
    }
    let xm = x - T::one();
    let t = xm + T::lit(LANCZOS_G) + half;
    let sqrt_two_pi = (T::two_pi()).sqrt();
    // split the power so t^(x-1/2) does not overflow before e^-t compensates
    let p = t.powf((xm + half) * half);
    sqrt_two_pi * p * (-t).exp() * p * lanczos_sum(xm)
}

/// Γ(n) = (n-1)! by direct product, exact while the factorial fits the mantissa.
fn factorial_of<T: Scalar>(n: T) -> T {
    let mut acc = T::one();
    let mut k = T::lit(2.0);
    while k < n {
        acc *= k;
        k += T::one();
    }
    acc
}

/// ln Γ(x) for `x > 0`.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::pi();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    if x == T::one() || x == T::lit(2.0) {
        return T::zero();
    }
    let xm = x - T::one();
    let t = xm + T::lit(LANCZOS_G) + half;
    half * T::two_pi().ln() + (xm + half) * t.ln() - t + lanczos_sum(xm).ln()
}

/// 1/Γ(x), which is entire: zero at the non-positive integers.
pub fn recip_gamma<T: Scalar>(x: T) -> T {
    if x <= T::zero() && x == x.floor() {
        return T::zero();
    }
    if x > T::lit(170.0) {
        return (-ln_gamma(x)).exp();
    }
    T::one() / gamma(x)
}
