//! Stability cubic `R(y) = -y^3 + p y + q`, its classification, and the
//! 3x3 pencil whose leading characteristic polynomial reproduces it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{BracketTable, DegeneracyFlags};
use crate::error::{Error, Result};
use crate::potential::WaveParams;
use crate::quadrature::ConservedSet;

/// Relative size of `|disc|` against `max(4|p|^3, 27 q^2)` treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationCubic {
    pub p: f64,
    pub q: f64,
    pub roots: [Complex64; 3],
    pub discriminant: f64,
}

impl ModulationCubic {
    pub fn new(p: f64, q: f64) -> Self {
        ModulationCubic {
            p,
            q,
            roots: cubic_roots(p, q),
            discriminant: 4.0 * p * p * p - 27.0 * q * q,
        }
    }

    /// `R(y)`
    pub fn eval(&self, y: Complex64) -> Complex64 {
        -y * y * y + y * self.p + self.q
    }

    pub fn residual_bound(&self) -> f64 {
        1e-12 * 1f64.max(self.p.abs()).max(self.q.abs()).powf(1.5)
    }

    /// Normalized discriminant in `[-1, 1]`.
    pub fn normalized_discriminant(&self) -> f64 {
        let scale = (4.0 * self.p.abs().powi(3)).max(27.0 * self.q * self.q);
        if scale == 0.0 {
            0.0
        } else {
            self.discriminant / scale
        }
    }
}

/// Roots of `y^3 - p y - q = 0`, sorted by real then imaginary part.
pub fn cubic_roots(p: f64, q: f64) -> [Complex64; 3] {
    let disc = 4.0 * p * p * p - 27.0 * q * q;
    let mut roots = if p == 0.0 && q == 0.0 {
        [Complex64::new(0.0, 0.0); 3]
    } else if disc > 0.0 {
        // three real roots; p > 0 here
        let r = 2.0 * (p / 3.0).sqrt();
        let arg = (1.5 * q / p * (3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        [0.0, 1.0, 2.0].map(|k| Complex64::new(r * (phi - 2.0 * PI * k / 3.0).cos(), 0.0))
    } else {
        let r = if p < 0.0 {
            let s = (-p / 3.0).sqrt();
            2.0 * s * ((1.5 * q / -p * (3.0 / -p).sqrt()).asinh() / 3.0).sinh()
        } else if p > 0.0 {
            let s = (p / 3.0).sqrt();
            let arg = (1.5 * q.abs() / p * (3.0 / p).sqrt()).max(1.0);
            2.0 * q.signum() * s * (arg.acosh() / 3.0).cosh()
        } else {
            q.cbrt()
        };
        let disc2 = 4.0 * p - 3.0 * r * r;
        let sq = Complex64::new(disc2, 0.0).sqrt();
        [
            Complex64::new(r, 0.0),
            (Complex64::new(-r, 0.0) + sq) * 0.5,
            (Complex64::new(-r, 0.0) - sq) * 0.5,
        ]
    };
    for y in roots.iter_mut() {
        let h = *y * *y * *y - *y * p - q;
        let dh = *y * *y * 3.0 - p;
        if dh.norm() > 1e-8 * (p.abs() + 3.0 * y.norm_sqr()) && h.norm() > 0.0 {
            let next = *y - h / dh;
            if (next * next * next - next * p - q).norm() < h.norm() {
                *y = next;
            }
        }
        if disc > 0.0 {
            y.im = 0.0;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// `p = (1/2)({T,P}_{E,c} + 2{M,P}_{a,E})`, `q = -(1/2){T,M,P}_{a,E,c}`.
pub fn build_r(table: &BracketTable) -> ModulationCubic {
    let b = &table.brackets;
    ModulationCubic::new(0.5 * (b.tp_ec + 2.0 * b.mp_ae), -0.5 * b.tmp_aec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    ModulationallyStable,
    ModulationallyUnstable,
    Degenerate,
    Unreliable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ModulationallyStable => "modulationally_stable",
            Classification::ModulationallyUnstable => "modulationally_unstable",
            Classification::Degenerate => "degenerate",
            Classification::Unreliable => "unreliable",
        }
    }
}

pub fn classify(cubic: &ModulationCubic, flags: &DegeneracyFlags) -> Classification {
    if flags.any() {
        return Classification::Unreliable;
    }
    let scale = cubic.p.abs().powi(3).max(cubic.q * cubic.q);
    if cubic.discriminant.abs() <= DEGENERATE_TOL * scale || scale == 0.0 {
        Classification::Degenerate
    } else if cubic.discriminant > 0.0 {
        Classification::ModulationallyStable
    } else {
        Classification::ModulationallyUnstable
    }
}

/// The two typographic readings of the `M1(3,1)` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum M31Reading {
    /// `T_a {T,M}_{a,E}`
    PartialTa,
    /// `T a {T,M}_{a,E}`
    TTimesA,
}

pub type Mat3 = [[f64; 3]; 3];

/// `(matrix index, row, column)` of entries left unspecified; matrix
/// indices are 1 = M1, 2 = M2, 4 = I1. `M1(1,2)` and `M1(3,2)` are zero by
/// the chain relations and are not listed.
pub const STAR_ENTRIES: [(usize, usize, usize); 16] = [
    (1, 1, 0),
    (1, 1, 2),
    (2, 0, 0),
    (2, 0, 2),
    (2, 1, 0),
    (2, 1, 1),
    (2, 1, 2),
    (2, 2, 0),
    (2, 2, 2),
    (4, 0, 0),
    (4, 0, 2),
    (4, 1, 0),
    (4, 1, 1),
    (4, 1, 2),
    (4, 2, 0),
    (4, 2, 2),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhithamPencil {
    pub m0: Mat3,
    pub m1: Mat3,
    pub m2: Mat3,
    pub i0: Mat3,
    pub i1: Mat3,
    /// `M1(3,1)` under each reading.
    pub m1_31_partial_ta: f64,
    pub m1_31_t_times_a: f64,
    pub reading: M31Reading,
}

impl WhithamPencil {
    pub fn with_reading(&self, reading: M31Reading) -> Self {
        let mut out = *self;
        out.reading = reading;
        out.m1[2][0] = match reading {
            M31Reading::PartialTa => self.m1_31_partial_ta,
            M31Reading::TTimesA => self.m1_31_t_times_a,
        };
        out
    }

    /// Copy with the unspecified entries replaced by `values` (in [`STAR_ENTRIES`] order).
    pub fn with_stars(&self, values: &[f64; 16]) -> Self {
        let mut out = *self;
        for (&(m, i, j), &v) in STAR_ENTRIES.iter().zip(values) {
            match m {
                1 => out.m1[i][j] = v,
                2 => out.m2[i][j] = v,
                _ => out.i1[i][j] = v,
            }
        }
        out
    }

    fn matrices(&self) -> [&Mat3; 5] {
        [&self.m0, &self.m1, &self.m2, &self.i0, &self.i1]
    }
}

/// Pencil entries from brackets and conserved values; unspecified entries are 0.
pub fn build_pencil(
    table: &BracketTable,
    set: &ConservedSet,
    params: &WaveParams,
) -> WhithamPencil {
    let [ta, te, _] = table.grad_t;
    let br = &table.brackets;
    let (b, q, tau, kb) = (br.tm_ae, br.tmp_aec, br.tm_ec, br.tk_ae);
    let t = set.T;
    let half = 0.5 * b * q;
    let mut m0 = [[0.0; 3]; 3];
    m0[1][2] = half;
    let mut m1 = [[0.0; 3]; 3];
    m1[0][0] = te * t;
    let partial = t * (te * tau + ta * b);
    let product = t * (te * tau + t * params.a * b);
    m1[2][0] = partial;
    let mut m2 = [[0.0; 3]; 3];
    m2[0][1] = t * kb;
    m2[2][1] = t * tau * kb + t * b / te * (ta * kb - t * b);
    let i0 = [[b, 0.0, 0.0], [0.0, -half, 0.0], [0.0, 0.0, half]];
    let mut i1 = [[0.0; 3]; 3];
    i1[0][1] = -tau * t - b * set.M;
    i1[2][1] = 2.0 * b * br.ktm_aec - tau * tau * t - 2.0 * tau * b * set.M - b * b * set.P;
    WhithamPencil {
        m0,
        m1,
        m2,
        i0,
        i1,
        m1_31_partial_ta: partial,
        m1_31_t_times_a: product,
        reading: M31Reading::PartialTa,
    }
}

/// Grid inner products `<psi_i, L0 phi_j>` and `<psi_i, phi_j>` against the
/// closed-form `M0` and `I0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerProductCheck {
    pub m0_grid: Mat3,
    pub i0_grid: Mat3,
    /// Largest entry error; nonzero entries are measured against themselves,
    /// zero entries against the largest closed-form entry of their matrix.
    pub m0_max_rel: f64,
    pub i0_max_rel: f64,
}

impl InnerProductCheck {
    pub fn max_rel(&self) -> f64 {
        self.m0_max_rel.max(self.i0_max_rel)
    }
}

fn entrywise_rel(grid: &Mat3, closed: &Mat3) -> f64 {
    let scale = closed.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (g, c) in grid.iter().flatten().zip(closed.iter().flatten()) {
        let denom = if *c != 0.0 { c.abs() } else { scale };
        worst = worst.max((g - c).abs() / denom.max(f64::MIN_POSITIVE));
    }
    worst
}

pub fn inner_product_check(
    pencil: &WhithamPencil,
    m0_grid: &Mat3,
    i0_grid: &Mat3,
) -> InnerProductCheck {
    InnerProductCheck {
        m0_grid: *m0_grid,
        i0_grid: *i0_grid,
        m0_max_rel: entrywise_rel(m0_grid, &pencil.m0),
        i0_max_rel: entrywise_rel(i0_grid, &pencil.i0),
    }
}

/// Dense polynomial in `(mu, eps)`: `c[i][j]` multiplies `mu^i eps^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiPoly {
    pub c: [[f64; 7]; 4],
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly { c: [[0.0; 7]; 4] }
    }

    pub fn mul(&self, o: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for i in 0..4 {
            for j in 0..7 {
                if self.c[i][j] == 0.0 {
                    continue;
                }
                for k in 0..4 - i {
                    for l in 0..7 - j {
                        out.c[i + k][j + l] += self.c[i][j] * o.c[k][l];
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &BiPoly, s: f64) -> BiPoly {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..7 {
                out.c[i][j] += s * o.c[i][j];
            }
        }
        out
    }

    pub fn abs(&self) -> BiPoly {
        let mut out = *self;
        out.c.iter_mut().flatten().for_each(|v| *v = v.abs());
        out
    }

    /// Largest coefficient of total degree `d`.
    pub fn degree_max(&self, d: usize) -> f64 {
        (0..=d.min(3))
            .filter(|&i| d - i < 7)
            .map(|i| self.c[i][d - i].abs())
            .fold(0.0, f64::max)
    }
}

/// `3x3` determinant by cofactor expansion; `signed = false` gives the
/// expansion with every term taken in absolute value.
fn det3_poly(m: &[[BiPoly; 3]; 3], signed: bool) -> BiPoly {
    let s = if signed { -1.0 } else { 1.0 };
    let minor = |r1: usize, c1: usize, r2: usize, c2: usize| {
        m[r1][c1].mul(&m[r2][c2]).add(&m[r1][c2].mul(&m[r2][c1]), s)
    };
    m[0][0]
        .mul(&minor(1, 1, 2, 2))
        .add(&m[0][1].mul(&minor(1, 0, 2, 2)), s)
        .add(&m[0][2].mul(&minor(1, 0, 2, 1)), 1.0)
}

/// Homogeneous cubic part of the pencil determinant, ordered as the
/// coefficients of `mu^3, mu^2 eps, mu eps^2, eps^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilCubic {
    pub coeffs: [f64; 4],
    /// Largest degree-0..2 coefficient relative to the absolute expansion.
    pub lower_order: f64,
}

pub const LOWER_ORDER_TOL: f64 = 1e-10;

pub fn pencil_charpoly(pencil: &WhithamPencil) -> Result<PencilCubic> {
    let [m0, m1, m2, i0, i1] = pencil.matrices();
    let mut entries = [[BiPoly::zero(); 3]; 3];
    let mut abs_entries = [[BiPoly::zero(); 3]; 3];
    for r in 0..3 {
        for col in 0..3 {
            let e = &mut entries[r][col];
            e.c[0][0] = m0[r][col];
            e.c[0][1] = m1[r][col];
            e.c[0][2] = m2[r][col];
            e.c[1][0] = -i0[r][col];
            e.c[1][1] = -i1[r][col];
            abs_entries[r][col] = e.abs();
        }
    }
    let det = det3_poly(&entries, true);
    let scale = det3_poly(&abs_entries, false);
    let mut lower_order = 0.0f64;
    for d in 0..3 {
        let s = scale.degree_max(d).max(scale.degree_max(3));
        if s == 0.0 {
            continue;
        }
        let rel = det.degree_max(d) / s;
        lower_order = lower_order.max(rel);
        if rel > LOWER_ORDER_TOL {
            return Err(Error::DegenerateLeadingPart { degree: d });
        }
    }
    let coeffs = [det.c[3][0], det.c[2][1], det.c[1][2], det.c[0][3]];
    if det.degree_max(3) <= 1e-14 * scale.degree_max(3) {
        return Err(Error::DegenerateLeadingPart { degree: 4 });
    }
    Ok(PencilCubic {
        coeffs,
        lower_order,
    })
}

/// `mu^3 R(T eps / mu)` in the same coefficient order.
pub fn evans_side_cubic(cubic: &ModulationCubic, set: &ConservedSet) -> [f64; 4] {
    let t = set.T;
    [cubic.q, cubic.p * t, 0.0, -t * t * t]
}

/// Least-squares constant `C` with `pencil ~ C * evans`, and the relative misfit.
pub fn compare_dispersion(
    charpoly: &PencilCubic,
    cubic: &ModulationCubic,
    set: &ConservedSet,
) -> (f64, f64) {
    let ev = evans_side_cubic(cubic, set);
    let pc = &charpoly.coeffs;
    let dot: f64 = pc.iter().zip(&ev).map(|(a, b)| a * b).sum();
    let ee: f64 = ev.iter().map(|v| v * v).sum();
    let c = dot / ee;
    let misfit: f64 = pc
        .iter()
        .zip(&ev)
        .map(|(a, b)| (a - c * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = pc.iter().map(|v| v * v).sum::<f64>().sqrt();
    (c, if norm == 0.0 { misfit } else { misfit / norm })
}

/// Proportionality fit under one reading of `M1(3,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportionality {
    pub reading: M31Reading,
    pub constant: f64,
    pub residual: f64,
    pub charpoly: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub cubic: ModulationCubic,
    pub classification: Classification,
    pub pencil: WhithamPencil,
    pub proportionality_constant: f64,
    pub proportionality_residual: f64,
    pub chosen_reading: M31Reading,
    pub readings: [Proportionality; 2],
    /// The bracket combination that must cancel in the raw determinant.
    pub cancellation: f64,
}

/// `T^3 B^3 / (2 T_E) * ({T,M}_{E,a} + T_a^2 - 2 T_c T_E)` and its size
/// relative to the magnitudes of its constituents.
pub fn cancellation_term(table: &BracketTable, set: &ConservedSet) -> (f64, f64) {
    let [ta, te, tc] = table.grad_t;
    let b = table.brackets.tm_ae;
    let inner = -b + ta * ta - 2.0 * tc * te;
    let pref = set.T.powi(3) * b.powi(3) / (2.0 * te);
    let scale = b.abs().max(ta * ta).max((2.0 * tc * te).abs());
    (pref * inner, inner / scale)
}

/// Cubic, classification, pencil and the proportionality fit under both readings.
pub fn analyze(table: &BracketTable, params: &WaveParams) -> Result<StabilityReport> {
    let set = table.conserved;
    let cubic = build_r(table);
    let classification = classify(&cubic, &table.flags);
    let pencil = build_pencil(table, &set, params);
    let fit = |reading: M31Reading| -> Result<Proportionality> {
        let cp = pencil_charpoly(&pencil.with_reading(reading))?;
        let (constant, residual) = compare_dispersion(&cp, &cubic, &set);
        Ok(Proportionality {
            reading,
            constant,
            residual,
            charpoly: cp.coeffs,
        })
    };
    let readings = [fit(M31Reading::PartialTa)?, fit(M31Reading::TTimesA)?];
    let best = if readings[1].residual < readings[0].residual {
        1
    } else {
        0
    };
    Ok(StabilityReport {
        cubic,
        classification,
        pencil: pencil.with_reading(readings[best].reading),
        proportionality_constant: readings[best].constant,
        proportionality_residual: readings[best].residual,
        chosen_reading: readings[best].reading,
        readings,
        cancellation: cancellation_term(table, &set).1,
    })
}
