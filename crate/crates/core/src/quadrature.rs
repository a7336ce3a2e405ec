//! Complete integrals over one orbit.
//!
//! With `u = u_- + D sin^2(theta)`, `D = u_+ - u_-`, the radicand factors as
//! `E - V = D^2 sin^2 cos^2 w(u)` and `du / sqrt(E - V) = 2 dtheta / sqrt(w)`,
//! so every integrand is smooth on `[0, pi/2]`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{NonlinearitySpec, PeriodicOrbit, WaveParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub n_nodes: usize,
    /// Width of the endpoint zones, as a fraction of `u_+ - u_-`, inside
    /// which `w` is taken from the Taylor expansion at the turning point.
    pub endpoint_taylor_delta: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            n_nodes: 96,
            endpoint_taylor_delta: 1e-3,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 16 {
            return Err(Error::InvalidQuadrature(format!(
                "n_nodes = {} (need at least 16)",
                self.n_nodes
            )));
        }
        let d = self.endpoint_taylor_delta;
        if !(d > 0.0 && d < 0.1) {
            return Err(Error::InvalidQuadrature(format!(
                "endpoint_taylor_delta = {d} must lie in (0, 0.1)"
            )));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// T, M, P, H, K at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ConservedSet {
    pub T: f64,
    pub M: f64,
    pub P: f64,
    pub H: f64,
    pub K: f64,
}

impl ConservedSet {
    pub fn as_array(&self) -> [f64; 5] {
        [self.T, self.M, self.P, self.H, self.K]
    }
}

/// Evaluator for the reduced weight `w(u) = (E - V) / ((u - u_-)(u_+ - u))`.
pub(crate) struct ReducedWeight {
    u_minus: f64,
    width: f64,
    delta: f64,
    radicand: crate::poly::Poly,
    at_minus: Vec<f64>,
    at_plus: Vec<f64>,
}

impl ReducedWeight {
    pub(crate) fn new(orbit: &PeriodicOrbit, f: &NonlinearitySpec, delta_frac: f64) -> Self {
        let radicand = f.radicand(&orbit.params);
        let at_minus = radicand.taylor_shift(orbit.u_minus);
        let at_plus = radicand.taylor_shift(orbit.u_plus);
        ReducedWeight {
            u_minus: orbit.u_minus,
            width: orbit.width(),
            delta: delta_frac * orbit.width(),
            radicand,
            at_minus,
            at_plus,
        }
    }

    /// `w` at `u = u_- + s`; exact Taylor forms near the ends, the ratio elsewhere.
    pub(crate) fn eval(&self, s: f64) -> f64 {
        let d = self.width;
        if s <= self.delta {
            // E - V = sum_{k>=1} c_k s^k once the root is factored out
            let num = self.at_minus[1..]
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * s + c);
            num / (d - s)
        } else if d - s <= self.delta {
            let t = s - d;
            let num = self.at_plus[1..]
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * t + c);
            -num / s
        } else {
            self.radicand.eval(self.u_minus + s) / (s * (d - s))
        }
    }
}

/// Nodes of the `theta` rule: `(u, weight factor 2/sqrt(w), sin^2 cos^2, sqrt(w))`.
struct Sample {
    u: f64,
    inv_sqrt_w: f64,
    sqrt_w: f64,
    s2c2: f64,
    weight: f64,
}

fn samples(
    orbit: &PeriodicOrbit,
    f: &NonlinearitySpec,
    cfg: &QuadratureConfig,
) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let (xs, ws) = gauss_legendre(cfg.n_nodes);
    let weight = ReducedWeight::new(orbit, f, cfg.endpoint_taylor_delta);
    let d = orbit.width();
    xs.iter()
        .zip(&ws)
        .map(|(&x, &wt)| {
            let theta = FRAC_PI_2 * 0.5 * (x + 1.0);
            let (sn, cs) = theta.sin_cos();
            let s = d * sn * sn;
            let w = weight.eval(s);
            let u = orbit.u_minus + s;
            if w.is_nan() || w <= 0.0 {
                return Err(Error::NonPositiveRadicand {
                    u,
                    value: w * s * (d - s),
                });
            }
            let sw = w.sqrt();
            Ok(Sample {
                u,
                inv_sqrt_w: 1.0 / sw,
                sqrt_w: sw,
                s2c2: sn * sn * cs * cs,
                weight: wt * FRAC_PI_2 * 0.5,
            })
        })
        .collect()
}

pub fn compute_conserved(
    orbit: &PeriodicOrbit,
    f: &NonlinearitySpec,
    cfg: &QuadratureConfig,
) -> Result<ConservedSet> {
    let big_f = f.antiderivative();
    let d = orbit.width();
    let (mut t, mut m, mut p, mut hf, mut k) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for smp in samples(orbit, f, cfg)? {
        let g = smp.weight * smp.inv_sqrt_w;
        t += g;
        m += g * smp.u;
        p += g * smp.u * smp.u;
        hf += g * big_f.eval(smp.u);
        k += smp.weight * smp.sqrt_w * smp.s2c2;
    }
    let pref = 2.0 * SQRT_2;
    let big_k = 4.0 * SQRT_2 * d * d * k;
    Ok(ConservedSet {
        T: pref * t,
        M: pref * m,
        P: pref * p,
        H: 0.5 * big_k - pref * hf,
        K: big_k,
    })
}

/// Period alone.
pub fn period(orbit: &PeriodicOrbit, f: &NonlinearitySpec, cfg: &QuadratureConfig) -> Result<f64> {
    let t: f64 = samples(orbit, f, cfg)?
        .iter()
        .map(|s| s.weight * s.inv_sqrt_w)
        .sum();
    Ok(2.0 * SQRT_2 * t)
}

/// `K - H - aM - (c/2)P - ET`.
pub fn action_identity_residual(set: &ConservedSet, params: &WaveParams) -> f64 {
    set.K - set.H - params.a * set.M - 0.5 * params.c * set.P - params.e * set.T
}
