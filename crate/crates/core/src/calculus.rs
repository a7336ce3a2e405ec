//! Parameter gradients of the complete integrals and their Jacobian brackets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::potential::{
    locate_orbit, NonlinearitySpec, OrbitOptions, PeriodicOrbit, WaveParams, AXIS_NAMES,
};
use crate::quadrature::{compute_conserved, ConservedSet, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDConfig {
    pub rel_step: f64,
    pub richardson: bool,
}

impl Default for FDConfig {
    fn default() -> Self {
        FDConfig {
            rel_step: 1e-4,
            richardson: true,
        }
    }
}

impl FDConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_step > 0.0 && self.rel_step < 0.1) {
            return Err(Error::Config(format!(
                "fd rel_step = {} must lie in (0, 0.1)",
                self.rel_step
            )));
        }
        Ok(())
    }
}

/// Tolerance of the step-halving gate.
pub const RICHARDSON_TOL: f64 = 1e-5;
/// Relative size below which a non-degeneracy quantity is flagged.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// `det [[a, b], [c, d]]`
pub fn bracket2(f: (f64, f64), g: (f64, f64)) -> f64 {
    f.0 * g.1 - f.1 * g.0
}

pub fn det3(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> f64 {
    r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
}

/// Sum of the absolute values of the six terms of a 3x3 determinant.
pub fn det3_scale(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> f64 {
    let perms = [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (1, 0, 2, -1.0),
        (2, 1, 0, -1.0),
    ];
    perms
        .iter()
        .map(|&(i, j, k, _)| (r0[i] * r1[j] * r2[k]).abs())
        .sum()
}

/// The brackets consumed by the cubic and the pencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Brackets {
    /// `{T,M}_{a,E}`
    pub tm_ae: f64,
    /// `{T,M}_{E,c}`
    pub tm_ec: f64,
    /// `{T,M}_{a,c}`
    pub tm_ac: f64,
    /// `{T,P}_{E,c}`
    pub tp_ec: f64,
    /// `{M,P}_{a,E}`
    pub mp_ae: f64,
    /// `{T,K}_{a,E}` with `K_a = M`, `K_E = T`
    pub tk_ae: f64,
    /// `{T,M,P}_{a,E,c}`
    pub tmp_aec: f64,
    /// `{K,T,M}_{a,E,c}` with `grad K = (M, T, P/2)`
    pub ktm_aec: f64,
}

/// Non-degeneracy conditions that fail within [`DEGENERACY_TOL`] of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegeneracyFlags {
    pub t_e: bool,
    pub tm_ae: bool,
    pub tmp_aec: bool,
}

impl DegeneracyFlags {
    pub fn any(&self) -> bool {
        self.t_e || self.tm_ae || self.tmp_aec
    }

    pub fn descriptions(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.t_e {
            out.push("T_E is numerically zero".to_string());
        }
        if self.tm_ae {
            out.push("{T,M}_{a,E} is numerically zero".to_string());
        }
        if self.tmp_aec {
            out.push("{T,M,P}_{a,E,c} is numerically zero".to_string());
        }
        out
    }
}

/// Gradients over `(a, E, c)` with the brackets assembled from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketTable {
    pub conserved: ConservedSet,
    #[serde(rename = "grad_T")]
    pub grad_t: [f64; 3],
    #[serde(rename = "grad_M")]
    pub grad_m: [f64; 3],
    #[serde(rename = "grad_P")]
    pub grad_p: [f64; 3],
    #[serde(rename = "grad_H")]
    pub grad_h: [f64; 3],
    pub brackets: Brackets,
    pub flags: DegeneracyFlags,
    /// Finite-difference steps used along `a`, `E`, `c`.
    pub steps: [f64; 3],
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl BracketTable {
    /// Assemble brackets and flags from gradients and the values at the centre.
    pub fn from_gradients(
        conserved: ConservedSet,
        grad_t: [f64; 3],
        grad_m: [f64; 3],
        grad_p: [f64; 3],
        grad_h: [f64; 3],
    ) -> Self {
        let [ta, te, tc] = grad_t;
        let [ma, me, mc] = grad_m;
        let [pa, pe, pc] = grad_p;
        let grad_k = [conserved.M, conserved.T, 0.5 * conserved.P];
        let brackets = Brackets {
            tm_ae: bracket2((ta, te), (ma, me)),
            tm_ec: bracket2((te, tc), (me, mc)),
            tm_ac: bracket2((ta, tc), (ma, mc)),
            tp_ec: bracket2((te, tc), (pe, pc)),
            mp_ae: bracket2((ma, me), (pa, pe)),
            tk_ae: ta * conserved.T - te * conserved.M,
            tmp_aec: det3(grad_t, grad_m, grad_p),
            ktm_aec: det3(grad_k, grad_t, grad_m),
        };
        let tiny = |v: f64, scale: f64| v.abs() <= DEGENERACY_TOL * scale;
        let row_max = grad_t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let flags = DegeneracyFlags {
            t_e: tiny(te, row_max),
            tm_ae: tiny(brackets.tm_ae, (ta * me).abs() + (te * ma).abs()),
            tmp_aec: tiny(brackets.tmp_aec, det3_scale(grad_t, grad_m, grad_p)),
        };
        BracketTable {
            conserved,
            grad_t,
            grad_m,
            grad_p,
            grad_h,
            brackets,
            flags,
            steps: [0.0; 3],
            warnings: Vec::new(),
        }
    }

    pub fn grad_k(&self) -> [f64; 3] {
        [self.conserved.M, self.conserved.T, 0.5 * self.conserved.P]
    }

    /// Hessian of `K` as assembled from the rows `grad M`, `grad T`, `grad P / 2`.
    pub fn k_hessian(&self) -> [[f64; 3]; 3] {
        let half = |v: [f64; 3]| [0.5 * v[0], 0.5 * v[1], 0.5 * v[2]];
        [self.grad_m, self.grad_t, half(self.grad_p)]
    }
}

/// Everything `gradient_table` needs beyond the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GradientOptions {
    pub fd: FDConfig,
    /// Explicit steps along `(a, E, c)`; chosen by [`fd_steps`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<[f64; 3]>,
    pub quad: QuadratureConfig,
    pub orbit: OrbitOptions,
    pub exec: Execution,
}

/// Distance from `E` to the nearest critical value of `V`; the energy
/// range on which the orbit's topology is fixed.
pub fn energy_margin(params: &WaveParams, f: &NonlinearitySpec) -> f64 {
    let v = f.potential(params.a, params.c);
    v.derivative()
        .real_roots()
        .into_iter()
        .map(|u| (params.e - v.eval(u)).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Central-difference steps along `(a, E, c)`, shrunk so that the shifted
/// energy stays well inside the orbit's energy range.
pub fn fd_steps(
    orbit: &PeriodicOrbit,
    f: &NonlinearitySpec,
    fd: &FDConfig,
) -> ([f64; 3], Vec<String>) {
    let p = orbit.params;
    let margin = energy_margin(&p, f);
    let umax = orbit.u_minus.abs().max(orbit.u_plus.abs()).max(1e-12);
    let nominal = p.as_array().map(|x| fd.rel_step * x.abs().max(1.0));
    let caps = [
        0.002 * margin / umax,
        0.002 * margin,
        0.004 * margin / (umax * umax),
    ];
    let mut warnings = Vec::new();
    let mut steps = [0.0; 3];
    for k in 0..3 {
        steps[k] = nominal[k].min(caps[k]);
        if steps[k] < nominal[k] {
            warnings.push(format!(
                "finite-difference step along {} shrunk from {:e} to {:e} (energy close to a critical value of V)",
                AXIS_NAMES[k], nominal[k], steps[k]
            ));
        }
    }
    (steps, warnings)
}

/// Conserved set at a shifted point, keeping the same well.
fn shifted_set(
    base: &PeriodicOrbit,
    f: &NonlinearitySpec,
    opts: &GradientOptions,
    axis: usize,
    delta: f64,
) -> Result<ConservedSet> {
    let p = base.params.shifted(axis, delta);
    let orbit_opts = OrbitOptions {
        hint: Some(base.u_minus),
        ..opts.orbit
    };
    let orbit = locate_orbit(&p, f, &orbit_opts).map_err(|e| Error::StencilOutsideDomain {
        axis: AXIS_NAMES[axis],
        reason: e.to_string(),
    })?;
    let tol = 0.25 * base.width();
    if (orbit.u_minus - base.u_minus).abs() > tol || (orbit.u_plus - base.u_plus).abs() > tol {
        return Err(Error::StencilOutsideDomain {
            axis: AXIS_NAMES[axis],
            reason: format!(
                "shifted orbit [{}, {}] left the well of [{}, {}]",
                orbit.u_minus, orbit.u_plus, base.u_minus, base.u_plus
            ),
        });
    }
    compute_conserved(&orbit, f, &opts.quad)
}

/// Central differences of `T, M, P, H` along all three axes.
pub fn gradient_table(
    params: &WaveParams,
    f: &NonlinearitySpec,
    cfg: &FDConfig,
) -> Result<BracketTable> {
    gradient_table_with(
        params,
        f,
        &GradientOptions {
            fd: *cfg,
            ..Default::default()
        },
    )
}

pub fn gradient_table_with(
    params: &WaveParams,
    f: &NonlinearitySpec,
    opts: &GradientOptions,
) -> Result<BracketTable> {
    opts.fd.validate()?;
    let orbit = locate_orbit(params, f, &opts.orbit)?;
    let center = compute_conserved(&orbit, f, &opts.quad)?;
    let (steps, warnings) = match opts.steps {
        Some(s) => (s, Vec::new()),
        None => fd_steps(&orbit, f, &opts.fd),
    };

    // (axis, multiple of h): +-h always, +-h/2 for the Richardson level
    let mut stencil: Vec<(usize, f64)> = Vec::with_capacity(12);
    for axis in 0..3 {
        stencil.push((axis, 1.0));
        stencil.push((axis, -1.0));
        if opts.fd.richardson {
            stencil.push((axis, 0.5));
            stencil.push((axis, -0.5));
        }
    }
    let values = par::map(opts.exec, &stencil, |&(axis, m)| {
        shifted_set(&orbit, f, opts, axis, m * steps[axis])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let per_axis = if opts.fd.richardson { 4 } else { 2 };

    // grads[q][axis] for q over T, M, P, H; `change` holds |fine - coarse|
    let mut grads = [[0.0; 3]; 4];
    let mut change = [[0.0; 3]; 4];
    for axis in 0..3 {
        let h = steps[axis];
        let v = &values[axis * per_axis..(axis + 1) * per_axis];
        for q in 0..4 {
            let val = |s: &ConservedSet| s.as_array()[q];
            let coarse = (val(&v[0]) - val(&v[1])) / (2.0 * h);
            grads[q][axis] = if opts.fd.richardson {
                let fine = (val(&v[2]) - val(&v[3])) / h;
                change[q][axis] = (fine - coarse).abs();
                (4.0 * fine - coarse) / 3.0
            } else {
                coarse
            };
        }
    }
    if opts.fd.richardson {
        // measured against the whole gradient so symmetry zeros do not trip it
        for q in 0..4 {
            let scale = grads[q].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for axis in 0..3 {
                let rel = change[q][axis] / scale.max(f64::MIN_POSITIVE);
                if rel > RICHARDSON_TOL {
                    return Err(Error::NonConvergedRichardson {
                        quantity: ["T", "M", "P", "H"][q],
                        axis: AXIS_NAMES[axis],
                        change: rel,
                    });
                }
            }
        }
    }
    let mut table = BracketTable::from_gradients(center, grads[0], grads[1], grads[2], grads[3]);
    table.steps = steps;
    table.warnings = warnings;
    table.warnings.extend(table.flags.descriptions());
    Ok(table)
}

/// Normalized residuals of the exact identities among the gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `E grad T + a grad M + (c/2) grad P + grad H`, per component.
    pub gradient_sum: [f64; 3],
    /// `T_a - M_E`
    pub ta_me: f64,
    /// `P_E - 2 T_c`
    pub pe_2tc: f64,
    /// `M_a - P_E`
    pub ma_pe: f64,
    /// `P_a - 2 M_c`
    pub pa_2mc: f64,
    /// `T_a^2 - 2 T_c T_E - {T,M}_{a,E}`
    pub bracket_identity: f64,
    /// `{T,M}_{E,a} + T_a^2 - 2 T_c T_E`, the cancellation in the determinant
    pub cancellation: f64,
    /// `K - H - aM - (c/2)P - ET`
    pub action: f64,
}

impl IdentityReport {
    pub fn max_abs(&self) -> f64 {
        let mut m = self.gradient_sum.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for v in [
            self.ta_me,
            self.pe_2tc,
            self.ma_pe,
            self.pa_2mc,
            self.bracket_identity,
            self.cancellation,
            self.action,
        ] {
            m = m.max(v.abs());
        }
        m
    }
}

fn normalized(residual: f64, parts: &[f64]) -> f64 {
    let scale = parts.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        residual.abs()
    } else {
        residual / scale
    }
}

pub fn identity_suite(
    table: &BracketTable,
    set: &ConservedSet,
    params: &WaveParams,
) -> IdentityReport {
    let (e, a, c) = (params.e, params.a, params.c);
    let [ta, te, tc] = table.grad_t;
    let [ma, me, mc] = table.grad_m;
    let [pa, pe, _] = table.grad_p;
    // Symmetric potentials make single entries vanish exactly, so each
    // residual is measured against the gradient rows it is built from.
    let terms = |k: usize| {
        [
            e * table.grad_t[k],
            a * table.grad_m[k],
            0.5 * c * table.grad_p[k],
            table.grad_h[k],
        ]
    };
    let all_terms: Vec<f64> = (0..3).flat_map(terms).collect();
    let mut gradient_sum = [0.0; 3];
    for (k, g) in gradient_sum.iter_mut().enumerate() {
        *g = normalized(terms(k).iter().sum(), &all_terms);
    }
    let rows = |x: [f64; 3], sx: f64, y: [f64; 3], sy: f64| -> Vec<f64> {
        x.iter()
            .map(|v| sx * v)
            .chain(y.iter().map(|v| sy * v))
            .collect()
    };
    let (gt, gm, gp) = (table.grad_t, table.grad_m, table.grad_p);
    let tm = table.brackets.tm_ae;
    let action_parts = [set.K, set.H, a * set.M, 0.5 * c * set.P, e * set.T];
    IdentityReport {
        gradient_sum,
        ta_me: normalized(ta - me, &rows(gt, 1.0, gm, 1.0)),
        pe_2tc: normalized(pe - 2.0 * tc, &rows(gp, 1.0, gt, 2.0)),
        ma_pe: normalized(ma - pe, &rows(gm, 1.0, gp, 1.0)),
        pa_2mc: normalized(pa - 2.0 * mc, &rows(gp, 1.0, gm, 2.0)),
        bracket_identity: normalized(ta * ta - 2.0 * tc * te - tm, &[ta * ta, 2.0 * tc * te, tm]),
        cancellation: normalized(-tm + ta * ta - 2.0 * tc * te, &[tm, ta * ta, 2.0 * tc * te]),
        action: normalized(
            crate::quadrature::action_identity_residual(set, params),
            &action_parts,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Table of a quadratic action `K = g.x + x.S.x / 2` about the origin,
    /// with `S_aa = 2 S_Ec` so that all identities hold exactly.
    fn synthetic(params: WaveParams) -> (BracketTable, ConservedSet) {
        let s = [[0.5, 0.3, -0.2], [0.3, 1.5, 0.25], [-0.2, 0.25, 0.7]];
        let g = [1.0, 2.0, 0.5];
        let x = params.as_array();
        let grad_k: Vec<f64> = (0..3)
            .map(|i| g[i] + (0..3).map(|j| s[i][j] * x[j]).sum::<f64>())
            .collect();
        let (m, t, p) = (grad_k[0], grad_k[1], 2.0 * grad_k[2]);
        let k = (0..3).map(|i| g[i] * x[i]).sum::<f64>()
            + 0.5
                * (0..3)
                    .map(|i| (0..3).map(|j| x[i] * s[i][j] * x[j]).sum::<f64>())
                    .sum::<f64>();
        let h = k - params.a * m - 0.5 * params.c * p - params.e * t;
        let set = ConservedSet {
            T: t,
            M: m,
            P: p,
            H: h,
            K: k,
        };
        let gt = s[1];
        let gm = s[0];
        let gp = [2.0 * s[2][0], 2.0 * s[2][1], 2.0 * s[2][2]];
        let gh: Vec<f64> = (0..3)
            .map(|i| -(params.e * gt[i] + params.a * gm[i] + 0.5 * params.c * gp[i]))
            .collect();
        let table = BracketTable::from_gradients(set, gt, gm, gp, [gh[0], gh[1], gh[2]]);
        (table, set)
    }

    #[test]
    fn synthetic_quadratic_action_is_exact() {
        let p = WaveParams::new(0.0, 0.0, 0.0);
        let (table, set) = synthetic(p);
        let r = identity_suite(&table, &set, &p);
        assert!(r.max_abs() < 1e-15, "{r:?}");
    }

    #[test]
    fn cofactor_and_direct_determinants_agree() {
        let r0 = [1.3, -0.2, 4.0];
        let r1 = [0.5, 2.5, -1.0];
        let r2 = [-3.0, 0.7, 0.1];
        let direct = r0[0] * r1[1] * r2[2] + r0[1] * r1[2] * r2[0] + r0[2] * r1[0] * r2[1]
            - r0[2] * r1[1] * r2[0]
            - r0[1] * r1[0] * r2[2]
            - r0[0] * r1[2] * r2[1];
        assert!((det3(r0, r1, r2) - direct).abs() < 1e-14 * det3_scale(r0, r1, r2));
    }

    #[test]
    fn kdv_gradient_values() {
        let f = NonlinearitySpec::kdv();
        let p = WaveParams::new(0.0, -0.1, 1.0);
        let t = gradient_table(&p, &f, &FDConfig::default()).unwrap();
        let expect_t = [-1.32864, 9.01306, -0.664321];
        let expect_p = [5.40784, -1.32864, 8.90894];
        for k in 0..3 {
            assert!((t.grad_t[k] - expect_t[k]).abs() < 1e-4, "{:?}", t.grad_t);
            assert!((t.grad_p[k] - expect_p[k]).abs() < 1e-4, "{:?}", t.grad_p);
        }
        let r = identity_suite(&t, &t.conserved, &p);
        assert!(r.max_abs() < 1e-6, "{r:?}");
        assert!(!t.flags.any());
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn flags_trip_on_zero_brackets() {
        let set = ConservedSet {
            T: 1.0,
            M: 0.0,
            P: 0.0,
            H: 0.0,
            K: 0.0,
        };
        let t = BracketTable::from_gradients(
            set,
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.0; 3],
        );
        assert!(t.flags.t_e && t.flags.tm_ae && t.flags.tmp_aec);
    }

    #[test]
    fn near_separatrix_shrinks_step() {
        let f = NonlinearitySpec::kdv();
        let p = WaveParams::new(0.0, -1e-3, 1.0);
        let orbit = locate_orbit(&p, &f, &OrbitOptions::default()).unwrap();
        let (steps, warnings) = fd_steps(&orbit, &f, &FDConfig::default());
        assert!(steps[1] <= 1e-5 + 1e-18);
        assert!(!warnings.is_empty());
    }
}
