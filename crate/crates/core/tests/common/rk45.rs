//! Dormand–Prince 5(4) with step-size control, for `y' = F(t, y)`.

pub struct Rk45 {
    pub rtol: f64,
    pub atol: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Rk45 {
    pub fn tight() -> Self {
        Self { rtol: 1e-12, atol: 1e-14 }
    }

    /// State at each of `outputs` (non-decreasing, starting at or after `t0`).
    pub fn solve(
        &self,
        f: impl Fn(f64, &[f64]) -> Vec<f64>,
        t0: f64,
        y0: &[f64],
        outputs: &[f64],
    ) -> Vec<Vec<f64>> {
        let n = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h: f64 = 1e-3;
        let mut out = Vec::with_capacity(outputs.len());
        for &target in outputs {
            while t < target {
                let step: f64 = h.min(target - t);
                let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
                for s in 0..7 {
                    let mut ys = y.clone();
                    for (r, kr) in k.iter().enumerate() {
                        for i in 0..n {
                            ys[i] += step * A[s][r] * kr[i];
                        }
                    }
                    k.push(f(t + C[s] * step, &ys));
                }
                let mut err = 0.0f64;
                let mut y5 = y.clone();
                for i in 0..n {
                    let mut d5 = 0.0;
                    let mut d4 = 0.0;
                    for s in 0..7 {
                        d5 += B5[s] * k[s][i];
                        d4 += B4[s] * k[s][i];
                    }
                    y5[i] += step * d5;
                    let scale = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                    err = err.max((step * (d5 - d4)).abs() / scale);
                }
                if err <= 1.0 {
                    t += step;
                    y = y5;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = step * factor;
            }
            out.push(y.clone());
        }
        out
    }
}
