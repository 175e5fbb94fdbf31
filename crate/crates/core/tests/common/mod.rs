//! Test-only reference solvers.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// Adaptive Dormand-Prince 5(4) for the linear system `ẋ = A x`, `x ∈ ℂ³`.
/// Returns the state at each requested time (ascending, starting at or after 0).
pub fn dopri_linear(a: &[[C64; 3]; 3], x0: [C64; 3], times: &[f64], rtol: f64) -> Vec<[C64; 3]> {
    let f = |x: &[C64; 3]| -> [C64; 3] {
        let mut y = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            for j in 0..3 {
                y[i] += a[i][j] * x[j];
            }
        }
        y
    };
    let b: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    let w5 = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    let w4 = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    // max modulus: squares would underflow once the state falls below 1e-154
    let norm = |x: &[C64; 3]| x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut x = x0;
    let mut h = 1e-3;
    for &target in times {
        while t < target {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            let mut k = [[C64::new(0.0, 0.0); 3]; 7];
            for s in 0..7 {
                let mut xs = x;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let bj = b[s][j];
                    if bj != 0.0 {
                        for i in 0..3 {
                            xs[i] += kj[i] * (step * bj);
                        }
                    }
                }
                k[s] = f(&xs);
            }
            let mut x5 = x;
            let mut e = [C64::new(0.0, 0.0); 3];
            for s in 0..7 {
                for i in 0..3 {
                    x5[i] += k[s][i] * (step * w5[s]);
                    e[i] += k[s][i] * (step * (w5[s] - w4[s]));
                }
            }
            // error relative to the state size: the system is linear, so this
            // keeps relative accuracy through strong decay
            let scale = rtol * norm(&x).max(norm(&x5)) + f64::MIN_POSITIVE;
            let err = norm(&e) / scale;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                x = x5;
                t = if last { target } else { t + step };
                // a step shortened to hit the output time says nothing about h
                if !last {
                    h = step * fac;
                }
            } else {
                h = step * fac;
            }
        }
        out.push(x);
    }
    out
}

/// `ẋ = -M x` for one Fourier mode of the linearised system, written from the
/// equations in Cartesian components `(â, v̂₁, v̂₂)`:
/// `∂ₜâ + (i/ε) ξ·v̂ = 0`,
/// `∂ₜv̂ + μ|ξ|²v̂ + (μ+λ)ξ(ξ·v̂) + i ξ (1/ε + κε|ξ|²) â = 0`.
pub fn lin_hat_matrix(xi: [f64; 2], eps: f64, mu: f64, lambda: f64, kappa: f64) -> [[C64; 3]; 3] {
    let i = C64::new(0.0, 1.0);
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    let s = 1.0 / eps + kappa * eps * r2;
    let mut a = [[C64::new(0.0, 0.0); 3]; 3];
    a[0][1] = -i * xi[0] / eps;
    a[0][2] = -i * xi[1] / eps;
    for c in 0..2 {
        a[1 + c][0] = -i * xi[c] * s;
        for d in 0..2 {
            let diag = if c == d { mu * r2 } else { 0.0 };
            a[1 + c][1 + d] = C64::new(-(diag + (mu + lambda) * xi[c] * xi[d]), 0.0);
        }
    }
    a
}
