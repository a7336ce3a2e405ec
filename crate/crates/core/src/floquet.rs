//! Evans-function oracle: monodromy of the linearized first-order system,
//! `D(mu, kappa) = det(M(mu) - e^{i kappa} I)`, and the three small
//! spectral branches near the origin.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jordan::PeriodicGrid;
use crate::modulation::ModulationCubic;
use crate::ode::{integrate, OdeOptions};
use crate::par::{self, Execution};
use crate::potential::{find_turning_points, Kernels, NonlinearitySpec, PeriodicOrbit, WaveParams};

pub type CMat3 = [[Complex64; 3]; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Companion matrix of `v''' = (c - f'(u)) v' - f''(u) u_x v - mu v`.
pub fn coefficient_matrix_at(df: f64, d2f: f64, u_x: f64, c: f64, mu: Complex64) -> CMat3 {
    [
        [ZERO, ONE, ZERO],
        [ZERO, ZERO, ONE],
        [
            Complex64::new(-d2f * u_x, 0.0) - mu,
            Complex64::new(c - df, 0.0),
            ZERO,
        ],
    ]
}

/// Coefficient matrix at `x` (reduced mod `T`) from the trigonometric
/// interpolant of the sampled profile.
pub fn coefficient_matrix(x: f64, mu: Complex64, grid: &PeriodicGrid) -> CMat3 {
    let t = grid.period;
    let xr = x.rem_euclid(t);
    let (iu, iux) = grid.interpolants();
    let (u, ux) = (iu.eval(xr), iux.eval(xr));
    let k = grid.kernels();
    coefficient_matrix_at(k.df.eval(u), k.d2f.eval(u), ux, grid.c, mu)
}

pub fn det3c(m: &CMat3) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub mu: Complex64,
    pub matrix: CMat3,
    pub det: Complex64,
    pub tol: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetOptions {
    pub ode_tol: f64,
    pub exec: Execution,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        FloquetOptions {
            ode_tol: 1e-12,
            exec: Execution::default(),
        }
    }
}

/// Monodromy and Evans evaluations for one orbit, with a per-`mu` cache.
pub struct EvansOracle {
    orbit: PeriodicOrbit,
    kernels: Kernels,
    opts: FloquetOptions,
    cache: Mutex<HashMap<(u64, u64), MonodromyMatrix>>,
}

impl EvansOracle {
    pub fn new(orbit: &PeriodicOrbit, f: &NonlinearitySpec, opts: FloquetOptions) -> Self {
        EvansOracle {
            orbit: *orbit,
            kernels: f.kernels(),
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_params(
        params: &WaveParams,
        f: &NonlinearitySpec,
        opts: FloquetOptions,
    ) -> Result<Self> {
        Ok(Self::new(&find_turning_points(params, f)?, f, opts))
    }

    pub fn orbit(&self) -> &PeriodicOrbit {
        &self.orbit
    }

    /// Integrate the profile together with the fundamental matrix over one period.
    fn integrate(&self, mu: Complex64) -> Result<MonodromyMatrix> {
        let k = &self.kernels;
        let (a, c) = (self.orbit.params.a, self.orbit.params.c);
        let mut y0 = [0.0; 20];
        y0[0] = self.orbit.u_minus;
        for i in 0..3 {
            y0[2 + 2 * (3 * i + i)] = 1.0;
        }
        let rhs = |_: f64, y: &[f64; 20]| -> [f64; 20] {
            let (u, ux) = (y[0], y[1]);
            let mut d = [0.0; 20];
            d[0] = ux;
            d[1] = a + c * u - k.f.eval(u);
            let h20 = Complex64::new(-k.d2f.eval(u) * ux, 0.0) - mu;
            let h21 = c - k.df.eval(u);
            let at =
                |i: usize, j: usize| Complex64::new(y[2 + 2 * (3 * i + j)], y[3 + 2 * (3 * i + j)]);
            for j in 0..3 {
                let rows = [at(1, j), at(2, j), h20 * at(0, j) + at(1, j) * h21];
                for (i, v) in rows.iter().enumerate() {
                    d[2 + 2 * (3 * i + j)] = v.re;
                    d[3 + 2 * (3 * i + j)] = v.im;
                }
            }
            d
        };
        let opts = OdeOptions::with_tol(self.opts.ode_tol);
        let (ys, stats) = integrate(rhs, 0.0, y0, &[self.orbit.period], &opts)?;
        let y = ys[0];
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = Complex64::new(y[2 + 2 * (3 * i + j)], y[3 + 2 * (3 * i + j)]);
            }
        }
        Ok(MonodromyMatrix {
            mu,
            det: det3c(&m),
            matrix: m,
            tol: self.opts.ode_tol,
            steps: stats.accepted,
        })
    }

    pub fn monodromy(&self, mu: Complex64) -> Result<MonodromyMatrix> {
        let key = (mu.re.to_bits(), mu.im.to_bits());
        if let Some(m) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(*m);
        }
        let m = self.integrate(mu)?;
        self.cache.lock().expect("cache poisoned").insert(key, m);
        Ok(m)
    }

    /// `D(mu, kappa)`.
    pub fn evans(&self, mu: Complex64, kappa: f64) -> Result<Complex64> {
        let mut m = self.monodromy(mu)?.matrix;
        let z = Complex64::from_polar(1.0, kappa);
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= z;
        }
        Ok(det3c(&m))
    }

    /// Number of zeros of `D(., kappa)` inside `|mu| < radius`, by the argument
    /// principle with point doubling until the count repeats.
    pub fn winding_count(&self, kappa: f64, radius: f64) -> Result<i64> {
        let mut n = 32usize;
        let mut last: Option<i64> = None;
        loop {
            let pts: Vec<Complex64> = (0..n)
                .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64))
                .collect();
            let vals = par::map(self.opts.exec, &pts, |&mu| self.evans(mu, kappa))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let mut total = 0.0;
            let mut max_step = 0.0f64;
            for k in 0..n {
                let step = (vals[(k + 1) % n] / vals[k]).arg();
                max_step = max_step.max(step.abs());
                total += step;
            }
            let count = (total / (2.0 * PI)).round() as i64;
            if max_step < 0.25 * PI && last == Some(count) {
                return Ok(count);
            }
            if n >= 4096 {
                return Err(Error::IntegratorFailure(format!(
                    "winding number did not settle on |mu| = {radius}"
                )));
            }
            last = Some(count);
            n *= 2;
        }
    }

    /// Newton on `mu -> D(mu, kappa)` from `seed` with a central-difference slope.
    pub fn polish(&self, seed: Complex64, kappa: f64) -> Result<(Complex64, f64, usize)> {
        let mut mu = seed;
        let fail = || Error::NewtonDivergence {
            kappa,
            seed: format!("{seed}"),
        };
        for it in 0..40 {
            let h = 1e-7 * mu.norm().max(kappa);
            let d = self.evans(mu, kappa)?;
            let dp = (self.evans(mu + h, kappa)? - self.evans(mu - h, kappa)?) / (2.0 * h);
            if !(d.is_finite() && dp.is_finite()) || dp.norm() == 0.0 {
                return Err(fail());
            }
            let step = d / dp;
            mu -= step;
            if !mu.is_finite() || (mu - seed).norm() > 0.5 * seed.norm().max(kappa) {
                return Err(fail());
            }
            let scale = dp.norm() * mu.norm().max(kappa);
            if step.norm() <= 1e-10 * mu.norm().max(kappa) {
                let d = self.evans(mu, kappa)?;
                return Ok((mu, d.norm() / scale, it + 1));
            }
        }
        Err(fail())
    }
}

/// Convenience wrapper: monodromy at one `mu` with default options.
pub fn monodromy(
    params: &WaveParams,
    f: &NonlinearitySpec,
    mu: Complex64,
) -> Result<MonodromyMatrix> {
    EvansOracle::from_params(params, f, FloquetOptions::default())?.monodromy(mu)
}

pub fn evans(
    params: &WaveParams,
    f: &NonlinearitySpec,
    mu: Complex64,
    kappa: f64,
) -> Result<Complex64> {
    EvansOracle::from_params(params, f, FloquetOptions::default())?.evans(mu, kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochBranch {
    pub kappa: f64,
    pub eps: Complex64,
    pub mu_values: [Complex64; 3],
    pub predicted: [Complex64; 3],
    pub errors: [f64; 3],
    /// `|D(mu_j)|` relative to `|dD/dmu| max(|mu_j|, kappa)`.
    pub residuals: [f64; 3],
}

pub const COLLISION_TOL: f64 = 1e-3;

/// Polish the three branches at each `kappa` from the seeds `i kappa / y_j`.
pub fn track_branches(
    oracle: &EvansOracle,
    cubic: &ModulationCubic,
    kappas: &[f64],
) -> Result<Vec<BlochBranch>> {
    let t = oracle.orbit.period;
    let jobs: Vec<(usize, usize)> = (0..kappas.len())
        .flat_map(|k| (0..3).map(move |j| (k, j)))
        .collect();
    let i = Complex64::new(0.0, 1.0);
    let seed = |k: usize, j: usize| i * kappas[k] / cubic.roots[j];
    let polished = par::map(oracle.opts.exec, &jobs, |&(k, j)| {
        oracle.polish(seed(k, j), kappas[k])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(kappas.len());
    for (k, &kappa) in kappas.iter().enumerate() {
        let mut mu_values = [ZERO; 3];
        let mut predicted = [ZERO; 3];
        let mut errors = [0.0; 3];
        let mut residuals = [0.0; 3];
        for j in 0..3 {
            let (mu, res, _) = polished[3 * k + j];
            mu_values[j] = mu;
            predicted[j] = seed(k, j);
            errors[j] = (mu - predicted[j]).norm();
            residuals[j] = res;
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let d = (mu_values[a] - mu_values[b]).norm();
                if d < COLLISION_TOL * kappa {
                    return Err(Error::BranchCollision {
                        kappa,
                        first: a,
                        second: b,
                        distance: d,
                    });
                }
            }
        }
        out.push(BlochBranch {
            kappa,
            eps: i * kappa / t,
            mu_values,
            predicted,
            errors,
            residuals,
        });
    }
    Ok(out)
}

/// Least-squares slope of `log error_j` against `log kappa`, per branch.
pub fn error_exponents(branches: &[BlochBranch]) -> [f64; 3] {
    let xs: Vec<f64> = branches.iter().map(|b| b.kappa.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let mut out = [f64::NAN; 3];
    if branches.len() < 2 {
        return out;
    }
    for (j, o) in out.iter_mut().enumerate() {
        let ys: Vec<f64> = branches.iter().map(|b| b.errors[j].ln()).collect();
        let ym = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
        *o = sxy / sxx;
    }
    out
}

/// Radius of the disk used for root counting: five times the largest predicted `|mu|`.
pub fn counting_radius(cubic: &ModulationCubic, kappa: f64) -> f64 {
    5.0 * cubic
        .roots
        .iter()
        .map(|y| kappa / y.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_structure() {
        let mu = Complex64::new(0.3, -0.7);
        let m = coefficient_matrix_at(1.2, -0.4, 0.9, 1.0, mu);
        let trace = m[0][0] + m[1][1] + m[2][2];
        assert_eq!(trace, ZERO);
        // f = 0: characteristic polynomial r^3 - c r + mu
        let m = coefficient_matrix_at(0.0, 0.0, 0.0, 2.0, mu);
        let r = Complex64::new(0.4, 0.1);
        let mut shifted = m;
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] -= r;
        }
        let charpoly = -det3c(&shifted);
        assert!((charpoly - (r * r * r - r * 2.0 + mu)).norm() < 1e-15);
    }

    #[test]
    fn kdv_monodromy_basics() {
        let f = NonlinearitySpec::kdv();
        let p = WaveParams::new(0.0, -0.1, 1.0);
        let oracle = EvansOracle::from_params(&p, &f, FloquetOptions::default()).unwrap();
        let m0 = oracle.monodromy(ZERO).unwrap();
        assert!((m0.det - ONE).norm() < 1e-10);
        assert!(oracle.evans(ZERO, 0.0).unwrap().norm() < 1e-8);
        // u_x is T-periodic: M(0) (0, u_xx(0), 0) = (0, u_xx(0), 0)
        let uxx0 = -oracle.orbit().dv_minus;
        let img: Vec<Complex64> = (0..3).map(|i| m0.matrix[i][1] * uxx0).collect();
        assert!(img[0].norm() < 1e-8 && (img[1] - uxx0).norm() < 1e-8 && img[2].norm() < 1e-8);
        let mu = Complex64::new(0.2, 0.5);
        let a = oracle.monodromy(mu).unwrap();
        let b = oracle.monodromy(mu.conj()).unwrap();
        assert!((a.det - ONE).norm() < 1e-10);
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (a.matrix[i][j] - b.matrix[i][j].conj()).norm()
                        < 1e-12 * (1.0 + a.matrix[i][j].norm())
                );
            }
        }
    }
}
