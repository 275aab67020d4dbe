//! Power-series references for the scalar Grammian and propagator.

fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `∫_0^t (s^{q-1} E_{q,q}(a s^q))^2 ds` as the double power series
/// `Σ_{j,k} a^{j+k} t^{q(j+k)+2q-1} / (Γ(qj+q) Γ(qk+q) (q(j+k)+2q-1))`.
pub fn psi_series(q: f64, a: f64, t: f64) -> f64 {
    let terms = 60;
    let c: Vec<f64> = (0..terms).map(|k| a.powi(k as i32) / gamma(q * k as f64 + q)).collect();
    let mut sum = 0.0;
    for j in 0..terms {
        for k in 0..terms {
            let e = q * (j + k) as f64 + 2.0 * q - 1.0;
            sum += c[j] * c[k] * t.powf(e) / e;
        }
    }
    sum
}

/// `E_q(a t^q)` by its plain power series; fine for `|a t^q| <= 1`.
pub fn s_series(q: f64, a: f64, t: f64) -> f64 {
    (0..80).map(|k| (a * t.powf(q)).powi(k) / gamma(q * k as f64 + 1.0)).sum()
}
