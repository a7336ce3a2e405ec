//! Dormand–Prince 5(4) with embedded error control, on fixed-size real states.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Disable adaptivity and march with this step (shortened to hit outputs).
    pub fixed_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
            fixed_step: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-2,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = rhs(x, y)` from `(x0, y0)` and return the state at every
/// point of `outputs` (non-decreasing, all `>= x0`). Steps land exactly on
/// the output points.
pub fn integrate<const N: usize, F>(
    mut rhs: F,
    x0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<[f64; N]>, OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let (mut x, mut y) = (x0, y0);
    let mut k1 = rhs(x, &y);
    let span = outputs.last().map_or(0.0, |&e| e - x0).abs().max(1e-300);
    let mut h = opts.fixed_step.unwrap_or(1e-3 * span);
    let mut steps = 0usize;
    for &target in outputs {
        if target < x - 1e-15 * x.abs().max(1.0) {
            return Err(Error::IntegratorFailure(format!(
                "output point {target} precedes current position {x}"
            )));
        }
        while x < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::IntegratorFailure(format!(
                    "step limit {} reached at x = {x}",
                    opts.max_steps
                )));
            }
            let last = target - x <= h * (1.0 + 1e-12);
            let hs = if last { target - x } else { h };
            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    *yi += hs * acc;
                }
                k[s] = rhs(x + C[s] * hs, &ys);
                if s == 6 {
                    // stage 7 is evaluated at the proposed solution
                    let mut err = 0.0;
                    for i in 0..N {
                        let mut e = 0.0;
                        for (j, kj) in k.iter().enumerate() {
                            e += E[j] * kj[i];
                        }
                        let sc = opts.atol + opts.rtol * y[i].abs().max(ys[i].abs());
                        err += (hs * e / sc).powi(2);
                    }
                    let err = (err / N as f64).sqrt();
                    if !err.is_finite() {
                        return Err(Error::IntegratorFailure(format!(
                            "non-finite state near x = {x}"
                        )));
                    }
                    if opts.fixed_step.is_some() || err <= 1.0 {
                        stats.accepted += 1;
                        x = if last { target } else { x + hs };
                        y = ys;
                        k1 = k[6];
                        if opts.fixed_step.is_none() {
                            let fac = if err == 0.0 {
                                5.0
                            } else {
                                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                            };
                            if !last || fac < 1.0 {
                                h = hs * fac;
                            }
                        }
                    } else {
                        stats.rejected += 1;
                        h = hs * (0.9 * err.powf(-0.2)).max(0.2);
                        if h <= 1e-14 * x.abs().max(1.0) {
                            return Err(Error::IntegratorFailure(format!(
                                "step size underflow at x = {x}"
                            )));
                        }
                    }
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifth_order_convergence() {
        let err = |h: f64| {
            let opts = OdeOptions {
                fixed_step: Some(h),
                ..Default::default()
            };
            let (y, _) = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], &[1.0], &opts).unwrap();
            (y[0][0] - 1f64.exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        let order = ratio.log2();
        assert!((order - 5.0).abs() < 0.3, "observed order {order}");
    }

    #[test]
    fn adaptive_harmonic_oscillator() {
        let xs: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
        let (ys, stats) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            &xs,
            &OdeOptions::default(),
        )
        .unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0] - x.cos()).abs() < 1e-11);
            assert!((y[1] + x.sin()).abs() < 1e-11);
        }
        assert!(stats.accepted > 10);
    }

    #[test]
    fn rejects_backward_outputs() {
        let r = integrate(
            |_, y: &[f64; 1]| [y[0]],
            1.0,
            [1.0],
            &[0.5],
            &OdeOptions::default(),
        );
        assert!(r.is_err());
    }
}
