//! Nonlinearity, effective potential and periodic-orbit certification.
//!
//! Profiles satisfy `u_x^2 / 2 = E - V(u; a, c)` with
//! `V(u; a, c) = F(u) - (c/2) u^2 - a u` and `F' = f`, `F(0) = 0`. A periodic
//! orbit is a pair of consecutive simple roots `u_- < u_+` of `E - V` with
//! `E - V > 0` strictly between them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::quadrature::{self, QuadratureConfig};

/// Polynomial nonlinearity `f(u) = sum_k coeffs[k] u^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub coeffs: Vec<f64>,
}

impl NonlinearitySpec {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let spec = NonlinearitySpec {
            preset: None,
            coeffs,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `f(u) = u^2`.
    pub fn kdv() -> Self {
        Self::named("kdv", vec![0.0, 0.0, 1.0])
    }

    /// `f(u) = u^3`.
    pub fn mkdv_focusing() -> Self {
        Self::named("mkdv_focusing", vec![0.0, 0.0, 0.0, 1.0])
    }

    /// `f(u) = -u^3`. Its periodic waves need `c < 0`.
    pub fn mkdv_defocusing() -> Self {
        Self::named("mkdv_defocusing", vec![0.0, 0.0, 0.0, -1.0])
    }

    fn named(name: &str, coeffs: Vec<f64>) -> Self {
        NonlinearitySpec {
            preset: Some(name.to_string()),
            coeffs,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "kdv" => Some(Self::kdv()),
            "mkdv_focusing" | "mkdv" => Some(Self::mkdv_focusing()),
            "mkdv_defocusing" => Some(Self::mkdv_defocusing()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidNonlinearity(
                "coefficients must be finite".into(),
            ));
        }
        if self.coeffs.iter().skip(1).all(|&c| c == 0.0) {
            return Err(Error::InvalidNonlinearity("f must have degree >= 1".into()));
        }
        Ok(())
    }

    pub fn f_poly(&self) -> Poly {
        Poly::new(self.coeffs.clone())
    }

    pub fn f(&self, u: f64) -> f64 {
        self.f_poly().eval(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        self.f_poly().derivative().eval(u)
    }

    pub fn d2f(&self, u: f64) -> f64 {
        self.f_poly().derivative().derivative().eval(u)
    }

    /// Antiderivative with `F(0) = 0`, term by term.
    pub fn antiderivative(&self) -> Poly {
        self.f_poly().antiderivative()
    }

    /// `V(u; a, c)` as a polynomial in `u`.
    pub fn potential(&self, a: f64, c: f64) -> Poly {
        self.antiderivative()
            .add(&Poly::new(vec![0.0, -a, -0.5 * c]))
    }

    /// `E - V(u; a, c)`.
    pub fn radicand(&self, params: &WaveParams) -> Poly {
        self.potential(params.a, params.c)
            .scale(-1.0)
            .add(&Poly::new(vec![params.e]))
    }

    /// Cached evaluators for `f`, `f'`, `f''`, `F`.
    pub fn kernels(&self) -> Kernels {
        let f = self.f_poly();
        let df = f.derivative();
        let d2f = df.derivative();
        Kernels {
            big_f: f.antiderivative(),
            f,
            df,
            d2f,
        }
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.preset {
            Some(name) => write!(out, "{name}"),
            None => {
                let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
                write!(out, "{}", parts.join(","))
            }
        }
    }
}

impl FromStr for NonlinearitySpec {
    type Err = Error;

    /// A preset name, or comma-separated coefficients `c0,c1,c2,...` of `f`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(spec) = Self::preset(s.trim()) {
            return Ok(spec);
        }
        let coeffs = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| {
                Error::InvalidNonlinearity(format!(
                    "`{s}` is neither a preset (kdv, mkdv_focusing, mkdv_defocusing) nor a coefficient list"
                ))
            })?;
        Self::new(coeffs)
    }
}

#[derive(Debug, Clone)]
pub struct Kernels {
    pub f: Poly,
    pub df: Poly,
    pub d2f: Poly,
    pub big_f: Poly,
}

/// The parameter triple selecting a periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub a: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub c: f64,
}

impl WaveParams {
    pub fn new(a: f64, e: f64, c: f64) -> Self {
        WaveParams { a, e, c }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.e.is_finite() && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite parameters {self:?}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.e, self.c]
    }

    pub fn from_array(p: [f64; 3]) -> Self {
        WaveParams::new(p[0], p[1], p[2])
    }

    /// Copy with one coordinate (0 = a, 1 = E, 2 = c) shifted.
    pub fn shifted(&self, axis: usize, delta: f64) -> Self {
        let mut p = self.as_array();
        p[axis] += delta;
        Self::from_array(p)
    }

    /// Notes about parameters outside the classical `c > 0` regime.
    pub fn regime_warnings(&self) -> Vec<String> {
        if self.c > 0.0 {
            Vec::new()
        } else {
            vec![format!(
                "wave speed c = {} is not positive; results extend the c > 0 theory formally",
                self.c
            )]
        }
    }
}

pub const AXIS_NAMES: [&str; 3] = ["a", "E", "c"];

/// A potential well: a local minimum of `V` and the lower of its two
/// neighbouring maxima (`+inf` when `V` grows without bound on that side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Well {
    pub u_min: f64,
    pub e_min: f64,
    pub e_barrier: f64,
    pub curvature: f64,
}

impl Well {
    /// Energy a fraction `frac` of the way from the well bottom to its barrier.
    pub fn energy_at(&self, frac: f64) -> Option<f64> {
        self.e_barrier
            .is_finite()
            .then_some(self.e_min + frac * (self.e_barrier - self.e_min))
    }

    pub fn harmonic_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.curvature.sqrt()
    }
}

/// Local minima of `V(.; a, c)` in increasing `u`.
pub fn wells(a: f64, c: f64, f: &NonlinearitySpec) -> Vec<Well> {
    let v = f.potential(a, c);
    let dv = v.derivative();
    let d2v = dv.derivative();
    let crit = dv.real_roots();
    let is_max = |u: f64| d2v.eval(u) < 0.0;
    let mut out = Vec::new();
    for (i, &u) in crit.iter().enumerate() {
        let curv = d2v.eval(u);
        if curv <= 0.0 {
            continue;
        }
        let left = crit[..i]
            .iter()
            .rev()
            .find(|&&x| is_max(x))
            .map(|&x| v.eval(x));
        let right = crit[i + 1..]
            .iter()
            .find(|&&x| is_max(x))
            .map(|&x| v.eval(x));
        let barrier = left
            .unwrap_or(f64::INFINITY)
            .min(right.unwrap_or(f64::INFINITY));
        out.push(Well {
            u_min: u,
            e_min: v.eval(u),
            e_barrier: barrier,
            curvature: curv,
        });
    }
    out
}

/// How to pick among several admissible orbits, and when a turning point counts as simple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitOptions {
    /// Initial guess for `u_-`; the admissible orbit with the nearest `u_-` wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<f64>,
    /// Minimum `|V'(u_pm)|` relative to the magnitude of the terms of `V'`.
    pub simple_root_tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            hint: None,
            simple_root_tol: 1e-8,
        }
    }
}

/// A certified periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub params: WaveParams,
    pub u_minus: f64,
    pub u_plus: f64,
    /// Location of the lowest point of `V` on `(u_-, u_+)`.
    pub u_min: f64,
    pub dv_minus: f64,
    pub dv_plus: f64,
    #[serde(rename = "period_T")]
    pub period: f64,
}

impl PeriodicOrbit {
    pub fn width(&self) -> f64 {
        self.u_plus - self.u_minus
    }

    /// `d u_pm / d(a, E, c)` from differentiating `E = V(u_pm; a, c)`.
    pub fn turning_point_gradients(&self) -> ([f64; 3], [f64; 3]) {
        let grad = |u: f64, dv: f64| [u / dv, 1.0 / dv, 0.5 * u * u / dv];
        (
            grad(self.u_minus, self.dv_minus),
            grad(self.u_plus, self.dv_plus),
        )
    }
}

pub fn eval_potential(u: f64, params: &WaveParams, f: &NonlinearitySpec) -> f64 {
    f.potential(params.a, params.c).eval(u)
}

struct Candidate {
    lo: f64,
    hi: f64,
}

fn candidates(radicand: &Poly) -> Vec<Candidate> {
    let roots = radicand.real_roots();
    roots
        .windows(2)
        .filter(|w| radicand.eval(0.5 * (w[0] + w[1])) > 0.0)
        .map(|w| Candidate { lo: w[0], hi: w[1] })
        .collect()
}

fn no_orbit_reason(params: &WaveParams, f: &NonlinearitySpec) -> String {
    let ws = wells(params.a, params.c, f);
    if ws.is_empty() {
        return format!("V(u; a={}, c={}) has no local minimum", params.a, params.c);
    }
    let lowest = ws.iter().map(|w| w.e_min).fold(f64::INFINITY, f64::min);
    if params.e <= lowest {
        return format!(
            "E = {} is not above the lowest well bottom V = {lowest}",
            params.e
        );
    }
    let parts: Vec<String> = ws
        .iter()
        .map(|w| format!("({}, {})", w.e_min, w.e_barrier))
        .collect();
    format!(
        "E = {} lies in no well energy range {}",
        params.e,
        parts.join(", ")
    )
}

/// Locate the turning points of an admissible orbit and certify them.
pub fn find_turning_points(params: &WaveParams, f: &NonlinearitySpec) -> Result<PeriodicOrbit> {
    find_turning_points_with(params, f, &OrbitOptions::default())
}

pub fn find_turning_points_with(
    params: &WaveParams,
    f: &NonlinearitySpec,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    let mut orbit = locate_orbit(params, f, opts)?;
    orbit.period = quadrature::period(&orbit, f, &QuadratureConfig::default())?;
    Ok(orbit)
}

/// Turning points only; `period` is left at zero.
pub(crate) fn locate_orbit(
    params: &WaveParams,
    f: &NonlinearitySpec,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    params.validate()?;
    f.validate()?;
    let radicand = f.radicand(params);
    let cands = candidates(&radicand);
    let chosen = match opts.hint {
        Some(h) => cands
            .iter()
            .min_by(|x, y| (x.lo - h).abs().total_cmp(&(y.lo - h).abs())),
        None => cands.first(),
    }
    .ok_or_else(|| Error::NoPeriodicOrbit(no_orbit_reason(params, f)))?;

    let v = f.potential(params.a, params.c);
    let dv = v.derivative();
    let (lo, hi) = (chosen.lo, chosen.hi);
    for u in [lo, hi] {
        let slope = dv.eval(u);
        let tol = opts.simple_root_tol * dv.term_scale(u).max(f64::MIN_POSITIVE);
        if slope.abs() < tol {
            return Err(Error::DegenerateRoot {
                u,
                slope: slope.abs(),
                tol,
            });
        }
    }
    let dv_minus = dv.eval(lo);
    let dv_plus = dv.eval(hi);
    if !(dv_minus < 0.0 && dv_plus > 0.0) {
        return Err(Error::DegenerateRoot {
            u: lo,
            slope: dv_minus,
            tol: 0.0,
        });
    }
    let u_min = dv
        .real_roots()
        .into_iter()
        .filter(|&u| u > lo && u < hi)
        .min_by(|x, y| v.eval(*x).total_cmp(&v.eval(*y)))
        .unwrap_or(0.5 * (lo + hi));
    Ok(PeriodicOrbit {
        params: *params,
        u_minus: lo,
        u_plus: hi,
        u_min,
        dv_minus,
        dv_plus,
        period: 0.0,
    })
}

/// Outcome of [`check_domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub in_domain: bool,
    pub diagnostic: String,
}

pub fn check_domain(params: &WaveParams, f: &NonlinearitySpec) -> DomainCheck {
    check_domain_with(params, f, &OrbitOptions::default())
}

pub fn check_domain_with(
    params: &WaveParams,
    f: &NonlinearitySpec,
    opts: &OrbitOptions,
) -> DomainCheck {
    match locate_orbit(params, f, opts) {
        Ok(o) => DomainCheck {
            in_domain: true,
            diagnostic: format!("periodic orbit on [{}, {}]", o.u_minus, o.u_plus),
        },
        Err(e) => DomainCheck {
            in_domain: false,
            diagnostic: e.to_string(),
        },
    }
}
