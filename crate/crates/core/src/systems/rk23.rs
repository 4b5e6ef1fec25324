//! Adaptive Bogacki–Shampine 3(2) integrator sampled on a fixed output grid.
//!
//! Steps are chosen by the embedded second-order error estimate. Output
//! points falling inside an accepted step are filled with the cubic Hermite
//! interpolant built from the step endpoints and their derivatives (both are
//! available for free thanks to FSAL), so the output spacing never constrains
//! the step size.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
        }
    }
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const MAX_STEPS: usize = 50_000_000;
/// Any state component beyond this magnitude is treated as a blow-up.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Integrate `dy/dt = f(t, y)` from `t0` and return the state at
/// `t0 + k * dt` for `k = 0..n_out`.
pub fn integrate<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    dt: f64,
    n_out: usize,
    tol: Tolerances,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut out = Vec::with_capacity(n_out);
    if n_out == 0 {
        return Ok(out);
    }
    out.push(y0.to_vec());
    if n_out == 1 {
        return Ok(out);
    }
    let t_end = t0 + (n_out - 1) as f64 * dt;

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    f(t, &y, &mut k1);
    let mut h = initial_step(&f, t, &y, &k1, tol, t_end - t0);

    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut next_out = 1usize;
    let mut steps = 0usize;

    while next_out < n_out {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::SimulationDiverged {
                t,
                detail: "step budget exhausted".into(),
            });
        }
        let remaining = t_end - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }

        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.75 * h * k2[i];
        }
        f(t + 0.75 * h, &tmp, &mut k3);
        for i in 0..dim {
            y_new[i] = y[i] + h * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i]);
        }
        let t_new = if last { t_end } else { t + h };
        f(t_new, &y_new, &mut k4);

        let mut err_sq = 0.0;
        for i in 0..dim {
            // difference between the 3rd- and embedded 2nd-order solutions
            let e = h
                * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 1.0 / 8.0 * k4[i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / dim as f64).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::SimulationDiverged {
                    t,
                    detail: "non-finite state".into(),
                });
            }
            h *= MIN_FACTOR;
            continue;
        }

        if err <= 1.0 {
            // emit every output point in (t, t_new]
            while next_out < n_out {
                let t_out = t0 + next_out as f64 * dt;
                if t_out > t_new {
                    break;
                }
                let theta = ((t_out - t) / h).clamp(0.0, 1.0);
                out.push(hermite(&y, &y_new, &k1, &k4, h, theta));
                next_out += 1;
            }
            if y_new.iter().any(|v| v.abs() > DIVERGENCE_BOUND) {
                return Err(Error::SimulationDiverged {
                    t: t_new,
                    detail: format!("state left the bound {DIVERGENCE_BOUND:e}"),
                });
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k4);
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-1.0 / 3.0)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            h *= (SAFETY * err.powf(-1.0 / 3.0)).clamp(MIN_FACTOR, 1.0);
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::SimulationDiverged {
                    t,
                    detail: "step size underflow".into(),
                });
            }
        }
    }
    Ok(out)
}

fn hermite(y0: &[f64], y1: &[f64], f0: &[f64], f1: &[f64], h: f64, s: f64) -> Vec<f64> {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Hairer–Wanner starting step estimate for a third-order method.
fn initial_step<F>(f: &F, t: f64, y: &[f64], f0: &[f64], tol: Tolerances, span: f64) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y.len() as f64;
    let scale: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();
    let norm = |v: &[f64]| {
        (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / dim).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 3.0)
    };
    (100.0 * h0).min(h1).min(span)
}
