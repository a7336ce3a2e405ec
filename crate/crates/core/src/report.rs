//! Run configuration, the per-point report, scans, verification checks and
//! JSON / CSV emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::{
    gradient_table_with, identity_suite, BracketTable, FDConfig, GradientOptions, IdentityReport,
};
use crate::error::{Error, Result};
use crate::floquet::{
    counting_radius, error_exponents, track_branches, BlochBranch, EvansOracle, FloquetOptions,
};
use crate::jordan::{
    build_jordan_basis, sample_profile, verify_jordan, JordanReport, ProfileOptions,
};
use crate::modulation::{
    analyze, inner_product_check, Classification, InnerProductCheck, M31Reading, ModulationCubic,
    Proportionality, WhithamPencil,
};
use crate::par::{self, Execution};
use crate::potential::{
    find_turning_points_with, NonlinearitySpec, OrbitOptions, PeriodicOrbit, WaveParams,
};
use crate::quadrature::{ConservedSet, QuadratureConfig};

pub const SCHEMA: &str = "gkdv-modstab/1";

/// Largest Floquet exponent accepted for branch tracking.
pub const KAPPA_MAX: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Analyze,
    Scan,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "E")]
    E,
    #[serde(rename = "c")]
    C,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::A => 0,
            Axis::E => 1,
            Axis::C => 2,
        }
    }

    pub fn name(self) -> &'static str {
        ["a", "E", "c"][self.index()]
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Axis::A),
            "E" | "e" => Ok(Axis::E),
            "c" => Ok(Axis::C),
            _ => Err(Error::Config(format!(
                "unknown axis `{s}` (expected a, E or c)"
            ))),
        }
    }
}

/// One scanned coordinate: `count` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.min + (self.max - self.min) * k as f64 / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericConfig {
    pub quad_nodes: usize,
    pub taylor_delta: f64,
    pub fd_step: f64,
    pub richardson: bool,
    pub ode_tol: f64,
    pub grid_points: usize,
    pub kappas: Vec<f64>,
}

impl Default for NumericConfig {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        let fd = FDConfig::default();
        NumericConfig {
            quad_nodes: q.n_nodes,
            taylor_delta: q.endpoint_taylor_delta,
            fd_step: fd.rel_step,
            richardson: fd.richardson,
            ode_tol: 1e-12,
            grid_points: ProfileOptions::default().n_points,
            kappas: vec![0.02, 0.04, 0.08],
        }
    }
}

impl NumericConfig {
    pub fn quad(&self) -> QuadratureConfig {
        QuadratureConfig {
            n_nodes: self.quad_nodes,
            endpoint_taylor_delta: self.taylor_delta,
        }
    }

    pub fn fd(&self) -> FDConfig {
        FDConfig {
            rel_step: self.fd_step,
            richardson: self.richardson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Scan-only: `E, discriminant, Re/Im roots`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_csv: Option<PathBuf>,
}

/// Everything needed to reproduce a run; echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub nonlinearity: NonlinearitySpec,
    /// The analyzed point, and the fixed coordinates of a scan.
    pub params: WaveParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<AxisRange>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub exec: Execution,
    /// Preferred `u_-` when the energy level crosses several wells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Analyze,
            nonlinearity: NonlinearitySpec::kdv(),
            params: WaveParams::new(0.0, -0.1, 1.0),
            grid: Vec::new(),
            numeric: NumericConfig::default(),
            output: OutputConfig::default(),
            workers: None,
            exec: Execution::default(),
            hint: None,
        }
    }
}

fn config_err(msg: String) -> Error {
    Error::Config(msg)
}

impl RunConfig {
    /// Reject configurations that cannot run; every failure is [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        self.nonlinearity
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        self.params
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        let n = &self.numeric;
        n.quad().validate().map_err(|e| config_err(e.to_string()))?;
        n.fd().validate()?;
        if !(n.ode_tol > 0.0 && n.ode_tol < 1e-3) {
            return Err(config_err(format!(
                "ode_tol = {} must lie in (0, 1e-3)",
                n.ode_tol
            )));
        }
        if n.grid_points < 8 || !n.grid_points.is_power_of_two() {
            return Err(config_err(format!(
                "grid_points = {} must be a power of two >= 8",
                n.grid_points
            )));
        }
        if let Some(k) = n.kappas.iter().find(|k| !(**k > 0.0 && **k <= KAPPA_MAX)) {
            return Err(config_err(format!(
                "kappa = {k} must lie in (0, {KAPPA_MAX}]"
            )));
        }
        if self.mode == Mode::Verify && n.kappas.len() < 2 {
            return Err(config_err("verify needs at least two kappa values".into()));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers must be at least 1".into()));
        }
        if let Some(h) = self.hint {
            if !h.is_finite() {
                return Err(config_err("hint must be finite".into()));
            }
        }
        if self.mode == Mode::Scan && self.grid.is_empty() {
            return Err(config_err("scan needs at least one axis range".into()));
        }
        for (i, r) in self.grid.iter().enumerate() {
            if r.count < 1 {
                return Err(config_err(format!("axis {} has count 0", r.axis.name())));
            }
            if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
                return Err(config_err(format!(
                    "axis {} range [{}, {}] is not a finite interval",
                    r.axis.name(),
                    r.min,
                    r.max
                )));
            }
            if self.grid[..i].iter().any(|o| o.axis == r.axis) {
                return Err(config_err(format!("axis {} scanned twice", r.axis.name())));
            }
        }
        Ok(())
    }

    /// Cartesian grid of parameter points, first axis slowest.
    pub fn grid_points(&self) -> Vec<WaveParams> {
        let mut pts = vec![self.params];
        for r in &self.grid {
            let vals = r.values();
            pts = pts
                .iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut arr = p.as_array();
                        arr[r.axis.index()] = v;
                        WaveParams::from_array(arr)
                    })
                })
                .collect();
        }
        pts
    }

    fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions {
            hint: self.hint,
            ..Default::default()
        }
    }
}

/// Oracle results for one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub branches: Vec<BlochBranch>,
    /// Fitted `s` in `error_j ~ A kappa^s`; absent with fewer than two kappas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<[f64; 3]>,
    pub winding_kappa: f64,
    pub winding_radius: f64,
    pub winding_count: i64,
    pub det_monodromy_0: Complex64,
    pub evans_00: f64,
    /// Largest `|Re mu| / |mu|` over all polished roots.
    pub max_real_ratio: f64,
    pub max_branch_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionalitySummary {
    pub constant: f64,
    pub residual: f64,
    pub chosen_reading: M31Reading,
    pub readings: [Proportionality; 2],
    /// Cancellation combination relative to its constituents.
    pub cancellation: f64,
}

/// Everything computed at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub params: WaveParams,
    pub orbit: PeriodicOrbit,
    pub conserved: ConservedSet,
    pub table: BracketTable,
    pub identities: IdentityReport,
    pub cubic: ModulationCubic,
    pub classification: Classification,
    pub proportionality: ProportionalitySummary,
    pub pencil: WhithamPencil,
    pub inner_products: InnerProductCheck,
    pub jordan: JordanReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub warnings: Vec<String>,
}

fn run_oracle(
    orbit: &PeriodicOrbit,
    f: &NonlinearitySpec,
    cubic: &ModulationCubic,
    cfg: &RunConfig,
) -> Result<OracleSummary> {
    let oracle = EvansOracle::new(
        orbit,
        f,
        FloquetOptions {
            ode_tol: cfg.numeric.ode_tol,
            exec: cfg.exec,
        },
    );
    let kappas = &cfg.numeric.kappas;
    let branches = track_branches(&oracle, cubic, kappas)?;
    let exponents = (kappas.len() >= 2).then(|| error_exponents(&branches));
    let winding_kappa = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let winding_radius = counting_radius(cubic, winding_kappa);
    let winding_count = oracle.winding_count(winding_kappa, winding_radius)?;
    let zero = Complex64::new(0.0, 0.0);
    let det_monodromy_0 = oracle.monodromy(zero)?.det;
    let evans_00 = oracle.evans(zero, 0.0)?.norm();
    let mut max_real_ratio = 0.0f64;
    let mut max_branch_residual = 0.0f64;
    for b in &branches {
        for (mu, r) in b.mu_values.iter().zip(&b.residuals) {
            max_real_ratio = max_real_ratio.max(mu.re.abs() / mu.norm());
            max_branch_residual = max_branch_residual.max(*r);
        }
    }
    Ok(OracleSummary {
        branches,
        exponents,
        winding_kappa,
        winding_radius,
        winding_count,
        det_monodromy_0,
        evans_00,
        max_real_ratio,
        max_branch_residual,
    })
}

/// Full pipeline at `params`. Oracle failures are recorded as warnings.
pub fn analyze_point(cfg: &RunConfig, params: &WaveParams) -> Result<ReportRecord> {
    let f = &cfg.nonlinearity;
    let quad = cfg.numeric.quad();
    let fd = cfg.numeric.fd();
    let orbit_opts = cfg.orbit_options();
    let mut warnings = params.regime_warnings();

    let orbit = find_turning_points_with(params, f, &orbit_opts)?;
    let table = gradient_table_with(
        params,
        f,
        &GradientOptions {
            fd,
            steps: None,
            quad,
            orbit: orbit_opts,
            exec: cfg.exec,
        },
    )?;
    let conserved = table.conserved;
    let identities = identity_suite(&table, &conserved, params);
    let stability = analyze(&table, params)?;

    let grid = sample_profile(
        &orbit,
        f,
        &ProfileOptions {
            n_points: cfg.numeric.grid_points,
            fd,
            steps: Some(table.steps),
            ode_tol: cfg.numeric.ode_tol,
            exec: cfg.exec,
        },
    )?;
    let basis = build_jordan_basis(&grid, &table)?;
    let jordan = verify_jordan(&basis, &grid);
    let inner_products =
        inner_product_check(&stability.pencil, &jordan.m0, &jordan.biorthogonality);

    let oracle = if cfg.numeric.kappas.is_empty() {
        None
    } else {
        match run_oracle(&orbit, f, &stability.cubic, cfg) {
            Ok(o) => Some(o),
            Err(e) => {
                warnings.push(format!("oracle skipped ({}): {e}", e.stage()));
                None
            }
        }
    };

    warnings.extend(table.warnings.iter().cloned());
    let record = ReportRecord {
        params: *params,
        orbit,
        conserved,
        table,
        identities,
        cubic: stability.cubic,
        classification: stability.classification,
        proportionality: ProportionalitySummary {
            constant: stability.proportionality_constant,
            residual: stability.proportionality_residual,
            chosen_reading: stability.chosen_reading,
            readings: stability.readings,
            cancellation: stability.cancellation,
        },
        pencil: stability.pencil,
        inner_products,
        jordan,
        oracle,
        warnings,
    };
    ensure_finite(&record)?;
    Ok(record)
}

/// Single-point analysis at `cfg.params`.
pub fn run_analyze(cfg: &RunConfig) -> Result<ReportRecord> {
    cfg.validate()?;
    par::with_workers(cfg.workers, || analyze_point(cfg, &cfg.params))
}

/// Why a scan point produced no record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipInfo {
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub index: usize,
    pub params: WaveParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<ReportRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip: Option<SkipInfo>,
}

impl ScanRow {
    fn from_result(index: usize, params: WaveParams, r: Result<ReportRecord>) -> Self {
        match r {
            Ok(record) => ScanRow {
                index,
                params,
                record: Some(record),
                skip: None,
            },
            Err(e) => ScanRow {
                index,
                params,
                record: None,
                skip: Some(SkipInfo {
                    stage: e.stage().to_string(),
                    error: e.to_string(),
                }),
            },
        }
    }
}

/// Scan the grid, handing rows to `sink` in grid order as soon as each
/// leading block is complete. Point failures become skip rows.
pub fn run_scan_streaming<S>(cfg: &RunConfig, mut sink: S) -> Result<Vec<ScanRow>>
where
    S: FnMut(&ScanRow) -> Result<()> + Send,
{
    cfg.validate()?;
    let points = cfg.grid_points();
    par::with_workers(cfg.workers, || {
        let block = if cfg.exec.is_parallel() {
            4 * par::threads()
        } else {
            1
        };
        let mut rows = Vec::with_capacity(points.len());
        for (b, chunk) in points.chunks(block).enumerate() {
            let done = par::map_range(cfg.exec, chunk.len(), |i| {
                ScanRow::from_result(b * block + i, chunk[i], analyze_point(cfg, &chunk[i]))
            });
            for row in done {
                sink(&row)?;
                rows.push(row);
            }
        }
        Ok(rows)
    })
}

pub fn run_scan(cfg: &RunConfig) -> Result<Vec<ScanRow>> {
    run_scan_streaming(cfg, |_| Ok(()))
}

/// One pass/fail gate of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `le`: pass when `value <= threshold`; `ge` and `eq` likewise.
    pub relation: String,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, threshold, "le", value <= threshold)
    }

    fn ge(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, threshold, "ge", value >= threshold)
    }

    fn eq(name: &str, value: f64, expected: f64) -> Self {
        Self::new(name, value, expected, "eq", value == expected)
    }

    fn new(name: &str, value: f64, threshold: f64, relation: &str, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            value,
            threshold,
            relation: relation.to_string(),
            pass,
        }
    }
}

/// The consistency gates applied to one record.
pub fn checks(record: &ReportRecord) -> Vec<Check> {
    let id = &record.identities;
    let grad_sum = id.gradient_sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let exact = [id.ta_me, id.pe_2tc, id.ma_pe, id.pa_2mc]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = vec![
        Check::le("gradient_identities", exact, 1e-6),
        Check::le("gradient_sum", grad_sum, 1e-6),
        Check::le("action_identity", id.action.abs(), 1e-10),
        Check::le("bracket_cancellation", id.cancellation.abs(), 1e-6),
        Check::le("jordan_chain", record.jordan.max_chain_residual(), 1e-4),
        Check::le(
            "pencil_inner_products",
            record.inner_products.max_rel(),
            1e-4,
        ),
        Check::le(
            "proportionality_residual",
            record.proportionality.residual,
            1e-4,
        ),
        Check::ge(
            "proportionality_constant_alignment",
            proportionality_alignment(record),
            1e-8,
        ),
    ];
    match &record.oracle {
        Some(o) => {
            let s_min = o.exponents.map_or(f64::NAN, |s| {
                s.iter().copied().fold(f64::INFINITY, f64::min)
            });
            out.push(Check::ge("branch_error_exponent", s_min, 1.8));
            out.push(Check::eq("winding_count", o.winding_count as f64, 3.0));
            out.push(Check::le(
                "monodromy_det",
                (o.det_monodromy_0 - 1.0).norm(),
                1e-10,
            ));
            out.push(Check::le("evans_origin", o.evans_00, 1e-8));
            out.push(Check::le("branch_residual", o.max_branch_residual, 1e-10));
            if record.classification == Classification::ModulationallyStable {
                out.push(Check::le(
                    "stable_branches_imaginary",
                    o.max_real_ratio,
                    1e-6,
                ));
            }
        }
        None => out.push(Check::new("oracle_available", 0.0, 1.0, "eq", false)),
    }
    out
}

/// `|C| |evans cubic| / |pencil cubic|`: 1 for perfect proportionality, 0
/// when the fitted constant vanishes.
pub fn proportionality_alignment(record: &ReportRecord) -> f64 {
    let ev = crate::modulation::evans_side_cubic(&record.cubic, &record.conserved);
    let chosen = record
        .proportionality
        .readings
        .iter()
        .find(|r| r.reading == record.proportionality.chosen_reading)
        .expect("chosen reading is one of the two");
    let en = ev.iter().map(|v| v * v).sum::<f64>().sqrt();
    let pn = chosen.charpoly.iter().map(|v| v * v).sum::<f64>().sqrt();
    if pn == 0.0 {
        0.0
    } else {
        record.proportionality.constant.abs() * en / pn
    }
}

/// The serialized report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub config_echo: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<ReportRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<ScanRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
}

impl ReportDocument {
    pub fn single(cfg: &RunConfig, record: ReportRecord) -> Self {
        ReportDocument {
            schema: SCHEMA.to_string(),
            config_echo: cfg.clone(),
            record: Some(record),
            records: None,
            checks: None,
        }
    }

    pub fn scan(cfg: &RunConfig, rows: Vec<ScanRow>) -> Self {
        ReportDocument {
            schema: SCHEMA.to_string(),
            config_echo: cfg.clone(),
            record: None,
            records: Some(rows),
            checks: None,
        }
    }

    pub fn verify(cfg: &RunConfig, record: ReportRecord) -> Self {
        let c = checks(&record);
        ReportDocument {
            checks: Some(c),
            ..Self::single(cfg, record)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(s)?;
        if doc.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema `{}` (expected {SCHEMA})",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Parse a configuration file: either a bare [`RunConfig`] or a report
/// document whose `config_echo` is replayed.
pub fn load_config(text: &str) -> Result<RunConfig> {
    let v: Value = serde_json::from_str(text)?;
    let cfg = match v.get("config_echo") {
        Some(echo) => serde_json::from_value(echo.clone())?,
        None => serde_json::from_value(v)?,
    };
    Ok(cfg)
}

/// Fail with the JSON path of the first non-finite number in `value`.
pub fn ensure_finite<T: Serialize>(value: &T) -> Result<()> {
    fn walk(v: &Value, path: &mut String) -> Option<String> {
        match v {
            Value::Null => Some(path.clone()),
            Value::Array(items) => items.iter().enumerate().find_map(|(i, x)| {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                let r = walk(x, path);
                path.truncate(len);
                r
            }),
            Value::Object(map) => map.iter().find_map(|(k, x)| {
                let len = path.len();
                path.push('.');
                path.push_str(k);
                let r = walk(x, path);
                path.truncate(len);
                r
            }),
            _ => None,
        }
    }
    let v = serde_json::to_value(value)?;
    match walk(&v, &mut String::from("record")) {
        Some(p) => Err(Error::NonFinite(p)),
        None => Ok(()),
    }
}

/// Shortest round-trip decimal form, with exponent where it is shorter.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        serde_json::Number::from_f64(v).map_or_else(String::new, |n| n.to_string())
    } else {
        String::new()
    }
}

const ROOT_COLUMNS: [&str; 6] = [
    "root1_re", "root1_im", "root2_re", "root2_im", "root3_re", "root3_im",
];

fn root_cells(roots: &[Complex64; 3]) -> Vec<String> {
    roots
        .iter()
        .flat_map(|r| [fmt_f64(r.re), fmt_f64(r.im)])
        .collect()
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "index",
        "status",
        "stage",
        "error",
        "a",
        "E",
        "c",
        "u_minus",
        "u_plus",
        "T",
        "M",
        "P",
        "H",
        "K",
        "p",
        "q",
        "discriminant",
        "classification",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(ROOT_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(
        [
            "proportionality_constant",
            "proportionality_residual",
            "chosen_reading",
            "max_identity_residual",
            "max_jordan_residual",
            "max_inner_product_error",
            "winding_count",
            "exponent_1",
            "exponent_2",
            "exponent_3",
            "max_branch_error",
            "max_real_ratio",
            "warnings",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

pub fn csv_row(row: &ScanRow) -> Vec<String> {
    let p = &row.params;
    let mut out = vec![row.index.to_string()];
    let Some(r) = &row.record else {
        let skip = row.skip.clone().unwrap_or(SkipInfo {
            stage: String::new(),
            error: String::new(),
        });
        out.extend(["skipped".to_string(), skip.stage, skip.error]);
        out.extend([fmt_f64(p.a), fmt_f64(p.e), fmt_f64(p.c)]);
        out.resize(csv_header().len(), String::new());
        return out;
    };
    let s = &r.conserved;
    out.extend(["ok".to_string(), String::new(), String::new()]);
    out.extend(
        [
            p.a,
            p.e,
            p.c,
            r.orbit.u_minus,
            r.orbit.u_plus,
            s.T,
            s.M,
            s.P,
            s.H,
            s.K,
            r.cubic.p,
            r.cubic.q,
            r.cubic.discriminant,
        ]
        .iter()
        .map(|v| fmt_f64(*v)),
    );
    out.push(r.classification.as_str().to_string());
    out.extend(root_cells(&r.cubic.roots));
    out.push(fmt_f64(r.proportionality.constant));
    out.push(fmt_f64(r.proportionality.residual));
    out.push(
        match r.proportionality.chosen_reading {
            M31Reading::PartialTa => "partial_ta",
            M31Reading::TTimesA => "t_times_a",
        }
        .to_string(),
    );
    out.push(fmt_f64(r.identities.max_abs()));
    out.push(fmt_f64(r.jordan.max_chain_residual()));
    out.push(fmt_f64(r.inner_products.max_rel()));
    match &r.oracle {
        Some(o) => {
            out.push(o.winding_count.to_string());
            match o.exponents {
                Some(s) => out.extend(s.iter().map(|v| fmt_f64(*v))),
                None => out.extend([String::new(), String::new(), String::new()]),
            }
            let max_err = o
                .branches
                .iter()
                .flat_map(|b| b.errors)
                .fold(0.0f64, f64::max);
            out.push(fmt_f64(max_err));
            out.push(fmt_f64(o.max_real_ratio));
        }
        None => out.extend(std::iter::repeat_n(String::new(), 6)),
    }
    out.push(r.warnings.join("; "));
    out
}

/// Flat CSV: a header and one row per scan point.
pub struct CsvSink {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        writer.write_record(csv_header())?;
        Ok(CsvSink { writer })
    }

    pub fn push(&mut self, row: &ScanRow) -> Result<()> {
        self.writer.write_record(csv_row(row))?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn write_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut sink = CsvSink::create(path)?;
    for r in rows {
        sink.push(r)?;
    }
    sink.finish()
}

pub fn csv_string(rows: &[ScanRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header())?;
    for r in rows {
        w.write_record(csv_row(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `E, discriminant, Re/Im roots` for every successful scan row.
pub fn plot_csv_string(rows: &[ScanRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["E".to_string(), "discriminant".to_string()];
    header.extend(ROOT_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for row in rows {
        if let Some(r) = &row.record {
            let mut line = vec![fmt_f64(r.params.e), fmt_f64(r.cubic.discriminant)];
            line.extend(root_cells(&r.cubic.roots));
            w.write_record(&line)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_plot_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(plot_csv_string(rows)?.as_bytes())?;
    Ok(())
}

/// Wrap one record as a scan row, for CSV export of single analyses.
pub fn single_row(record: &ReportRecord) -> ScanRow {
    ScanRow {
        index: 0,
        params: record.params,
        record: Some(record.clone()),
        skip: None,
    }
}
