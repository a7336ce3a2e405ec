//! Fourier tools on a uniform periodic grid `x_j = j L / n`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Spectral {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl Spectral {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n} must be a power of two >= 8"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "period {length} must be positive"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Spectral {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        self.length * j as f64 / self.n as f64
    }

    /// Signed wavenumber index of FFT bin `k`.
    fn index(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.index(k) as f64 / self.length
    }

    fn to_modes(&self, g: &[f64]) -> Vec<Complex64> {
        assert_eq!(g.len(), self.n, "grid function has wrong length");
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn synthesize(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.into_iter().map(|z| z.re * s).collect()
    }

    /// `d^order g / dx^order`; the Nyquist mode is dropped for odd orders.
    pub fn derivative(&self, g: &[f64], order: u32) -> Vec<f64> {
        let mut modes = self.to_modes(g);
        let nyq = self.n / 2;
        for (k, z) in modes.iter_mut().enumerate() {
            if k == nyq && order % 2 == 1 {
                *z = Complex64::new(0.0, 0.0);
                continue;
            }
            *z *= Complex64::new(0.0, self.wavenumber(k)).powu(order);
        }
        self.synthesize(modes)
    }

    /// Periodic antiderivative vanishing at `x = 0`, and the mean that had to
    /// be removed from `g` to make it periodic.
    pub fn antiderivative(&self, g: &[f64]) -> (Vec<f64>, f64) {
        let mut modes = self.to_modes(g);
        let mean = modes[0].re / self.n as f64;
        let nyq = self.n / 2;
        for (k, z) in modes.iter_mut().enumerate() {
            if k == 0 || k == nyq {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z /= Complex64::new(0.0, self.wavenumber(k));
            }
        }
        let mut out = self.synthesize(modes);
        let shift = out[0];
        out.iter_mut().for_each(|v| *v -= shift);
        (out, mean)
    }

    pub fn mean(&self, g: &[f64]) -> f64 {
        g.iter().sum::<f64>() / self.n as f64
    }

    /// `int_0^L f g dx` by the periodic trapezoid rule.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.length / self.n as f64 * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, g: &[f64]) -> f64 {
        self.inner(g, g).sqrt()
    }

    /// Trigonometric interpolant of `g` evaluated at arbitrary `x`.
    pub fn interpolant(&self, g: &[f64]) -> Interpolant {
        let n = self.n as f64;
        let modes = self
            .to_modes(g)
            .into_iter()
            .enumerate()
            .map(|(k, z)| (self.wavenumber(k), z / n))
            .collect();
        Interpolant { modes }
    }
}

/// Fourier series of a periodic grid function.
#[derive(Debug, Clone)]
pub struct Interpolant {
    modes: Vec<(f64, Complex64)>,
}

impl Interpolant {
    /// Real part of the series; for real data the Nyquist bin is real and
    /// contributes its cosine.
    pub fn eval(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for &(k, z) in &self.modes {
            let (sn, cs) = (k * x).sin_cos();
            s += z.re * cs - z.im * sn;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_sines_is_exact() {
        let n = 64;
        let l = 3.7;
        let sp = Spectral::new(n, l).unwrap();
        let w_nyq = PI * n as f64 / l;
        for k in 1..=n / 4 {
            let w = 2.0 * PI * k as f64 / l;
            let g: Vec<f64> = (0..n).map(|j| (w * sp.x(j)).sin()).collect();
            let d = sp.derivative(&g, 1);
            let d3 = sp.derivative(&g, 3);
            for j in 0..n {
                assert!((d[j] - w * (w * sp.x(j)).cos()).abs() < 1e-12 * w);
                assert!((d3[j] + w.powi(3) * (w * sp.x(j)).cos()).abs() < 1e-13 * w_nyq.powi(3));
            }
        }
    }

    #[test]
    fn antiderivative_reports_mean() {
        let n = 32;
        let sp = Spectral::new(n, 2.0 * PI).unwrap();
        let g: Vec<f64> = (0..n).map(|j| 0.25 + sp.x(j).cos()).collect();
        let (a, mean) = sp.antiderivative(&g);
        assert!((mean - 0.25).abs() < 1e-15);
        for j in 0..n {
            assert!((a[j] - sp.x(j).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolant_reproduces_band_limited() {
        let n = 16;
        let sp = Spectral::new(n, 1.0).unwrap();
        let f = |x: f64| 1.0 + (2.0 * PI * x).cos() - 0.5 * (6.0 * PI * x).sin();
        let g: Vec<f64> = (0..n).map(|j| f(sp.x(j))).collect();
        let it = sp.interpolant(&g);
        for x in [0.0, 0.123, 0.5, 0.77] {
            assert!((it.eval(x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Spectral::new(100, 1.0).is_err());
        assert!(Spectral::new(64, -1.0).is_err());
    }
}
