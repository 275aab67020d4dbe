//! Arbitrary-precision series oracle for `E_{q,β}(z) = Σ z^k / Γ(qk + β)`
//! with rational `q`, `β` and a real `z` taken exactly from its `f64` bits.
//!
//! With `L = den(q)·den(β)` every argument `qk + β` is `r/L + j` for some
//! `r ∈ 1..=L`, so `Γ(qk + β) = Γ(r/L) Π_{i<j} (r + iL)/L`. The series is
//! summed per residue class in fixed point, exact up to truncation of one
//! unit in the last place per term, and the base values `1/Γ(r/L)` are
//! carried to as many digits as the cancellation between classes needs.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Finite(f64),
    /// The value exceeds `f64::MAX`.
    Overflow,
}

fn pow10(d: u32) -> BigInt {
    BigInt::from(10u32).pow(d)
}

/// `Γ(m/l)` for `1 <= m <= l`, scaled by `10^digits`, from the lower
/// incomplete gamma series `γ(y, N) = N^y e^{-N} Σ N^k / (y)_{k+1}` at
/// `y = m/l + 1` with the upper tail `Γ(y, N) < 10^{-digits-30}`.
pub fn gamma_fixed(m: i64, l: i64, digits: u32) -> BigInt {
    assert!(1 <= m && m <= l);
    let work = digits + 30;
    let n = (f64::from(work) * std::f64::consts::LN_10 + 40.0).ceil() as i64;
    let one = pow10(work);
    let big_n = BigInt::from(n);

    let mut term = &one * l / (m + l);
    let mut s = BigInt::zero();
    let mut k = 0i64;
    while !term.is_zero() {
        s += &term;
        k += 1;
        term = term * &big_n * l / (m + l + k * l);
    }
    let mut term = one;
    let mut e = BigInt::zero();
    let mut k = 0i64;
    while !term.is_zero() {
        e += &term;
        k += 1;
        term = term * &big_n / k;
    }
    let root = (big_n.pow(m as u32) * pow10(work * l as u32)).nth_root(l as u32);
    let gamma_y = big_n * root * s / e;
    gamma_y * l / m / pow10(30)
}

/// Caches `1/Γ(r/L)` per `(r, L)` at the largest precision requested.
#[derive(Default)]
pub struct GammaTable {
    inv: HashMap<(i64, i64), (u32, BigInt)>,
}

impl GammaTable {
    /// `10^digits / Γ(r/l)`, truncated.
    pub fn inverse(&mut self, r: i64, l: i64, digits: u32) -> BigInt {
        if let Some((d, v)) = self.inv.get(&(r, l)) {
            if *d >= digits {
                return v / pow10(d - digits);
            }
        }
        let d = digits + 5;
        let v = pow10(2 * d) / gamma_fixed(r, l, d);
        let out = &v / pow10(5);
        self.inv.insert((r, l), (d, v));
        out
    }
}

/// `E_{q,β}(z)` for `q = qn/qd`, `β = bn/bd`.
pub fn ml_series(q: (i64, i64), beta: (i64, i64), z: f64, table: &mut GammaTable) -> Reference {
    let (qn, qd) = q;
    let (bn, bd) = beta;
    let l = qd * bd;
    let qf = qn as f64 / qd as f64;
    let bf = bn as f64 / bd as f64;

    // The largest term is about exp(|z|^{1/q}) = 10^head. Truncation errors
    // of early terms are carried through the recurrence up to that size,
    // and the class sums cancel down from it, so both the fixed-point
    // terms and 1/Γ need `head` digits beyond the 40 kept in the result.
    let head = (z.abs().powf(1.0 / qf) / std::f64::consts::LN_10).ceil() as u32 + 20;
    let frac = head + 45;
    let gdigits = head + 45;
    let zr = BigRational::from_float(z).expect("finite z");
    let (zn, zd) = (zr.numer().clone(), zr.denom().clone());
    let unit = pow10(frac);
    let big_l = BigInt::from(l);
    let max = BigRational::from_float(f64::MAX).unwrap();

    // Per class r: (k, j, current term z^k L^j / Π_{i<j}(r + iL), running sum).
    let mut classes: HashMap<i64, (i64, i64, BigInt, BigInt)> = HashMap::new();
    let mut zeros_in_row = 0i64;
    let mut k = 0i64;
    loop {
        let nk = qn * bd * k + bn * qd;
        let r = (nk - 1).rem_euclid(l) + 1;
        let j = (nk - r) / l;
        let (term, sum) = match classes.get(&r) {
            None => {
                let mut v = BigRational::new(zn.pow(k as u32) * &unit, zd.pow(k as u32));
                for i in 0..j {
                    v *= BigRational::new(big_l.clone(), BigInt::from(r + i * l));
                }
                let t = v.to_integer();
                (t.clone(), t)
            }
            Some((k0, j0, t0, s0)) => {
                let dk = (k - k0) as u32;
                let mut den = zd.pow(dk);
                for i in *j0..j {
                    den *= r + i * l;
                }
                let t = t0 * zn.pow(dk) * big_l.pow((j - j0) as u32) / den;
                let s = s0 + &t;
                (t, s)
            }
        };
        // All terms are positive for z > 0: one oversized term settles it.
        if z > 0.0 {
            let approx = BigRational::new(&term * table.inverse(r, l, 20), pow10(frac + 20));
            if approx > max {
                return Reference::Overflow;
            }
        }
        zeros_in_row = if term.is_zero() { zeros_in_row + 1 } else { 0 };
        classes.insert(r, (k, j, term, sum));
        let x = qf * k as f64 + bf;
        if x > 1.0 && x.powf(qf) > 2.0 * z.abs() && zeros_in_row >= l {
            break;
        }
        k += 1;
    }

    let mut keys: Vec<i64> = classes.keys().copied().collect();
    keys.sort_unstable();
    let mut total = BigInt::zero();
    for r in keys {
        total += &classes[&r].3 * table.inverse(r, l, gdigits);
    }
    let value = BigRational::new(total, pow10(frac + gdigits));
    if value.abs() > max {
        return Reference::Overflow;
    }
    Reference::Finite(value.to_f64().unwrap())
}
