use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkdv_modstab::par::Execution;
use gkdv_modstab::potential::{NonlinearitySpec, WaveParams};
use gkdv_modstab::report::{
    self, load_config, run_analyze, run_scan_streaming, single_row, Axis, AxisRange, CsvSink, Mode,
    ReportDocument, RunConfig,
};
use gkdv_modstab::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

/// Modulational stability of periodic traveling waves of u_t = u_xxx + f(u)_x.
#[derive(Parser)]
#[command(name = "gkdv-modstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one (a, E, c) point.
    Analyze(Common),
    /// Scan one or more parameter axes.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Axis to scan (a, E or c); repeat for a Cartesian grid.
        #[arg(long)]
        axis: Vec<String>,
        #[arg(long, allow_negative_numbers = true)]
        min: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        max: Vec<f64>,
        #[arg(long)]
        count: Vec<usize>,
        /// Plot-ready CSV: E, discriminant, Re/Im of the roots.
        #[arg(long)]
        plot_csv: Option<PathBuf>,
    },
    /// Analyze one point and check every consistency gate.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration, or a previous report whose config_echo is replayed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset (kdv, mkdv_focusing, mkdv_defocusing) or coefficients c0,c1,... of f.
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long = "E", allow_negative_numbers = true)]
    e: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Floquet exponents for branch tracking, comma separated.
    #[arg(long, value_delimiter = ',')]
    kappa: Option<Vec<f64>>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    ode_tol: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Preferred left turning point when several wells are admissible.
    #[arg(long, allow_negative_numbers = true)]
    hint: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Run the sequential code path.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Common {
    fn build(&self, mode: Mode) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => load_config(
                &std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
            )
            .map_err(|e| Error::Config(e.to_string()))?,
            None => RunConfig::default(),
        };
        cfg.mode = mode;
        if let Some(s) = &self.nonlinearity {
            cfg.nonlinearity = s
                .parse::<NonlinearitySpec>()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        let p = cfg.params;
        cfg.params = WaveParams::new(
            self.a.unwrap_or(p.a),
            self.e.unwrap_or(p.e),
            self.c.unwrap_or(p.c),
        );
        let n = &mut cfg.numeric;
        if let Some(k) = &self.kappa {
            n.kappas = k.clone();
        }
        if let Some(v) = self.quad_nodes {
            n.quad_nodes = v;
        }
        if let Some(v) = self.fd_step {
            n.fd_step = v;
        }
        if let Some(v) = self.ode_tol {
            n.ode_tol = v;
        }
        if let Some(v) = self.grid_points {
            n.grid_points = v;
        }
        if self.hint.is_some() {
            cfg.hint = self.hint;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.sequential {
            cfg.exec = Execution::Sequential;
        }
        if self.json.is_some() {
            cfg.output.json = self.json.clone();
        }
        if self.csv.is_some() {
            cfg.output.csv = self.csv.clone();
        }
        Ok(cfg)
    }
}

fn scan_grid(
    axis: &[String],
    min: &[f64],
    max: &[f64],
    count: &[usize],
) -> Result<Vec<AxisRange>, Error> {
    let n = axis.len();
    if min.len() != n || max.len() != n || count.len() != n {
        return Err(Error::Config(format!(
            "--axis, --min, --max and --count must be given the same number of times ({n}, {}, {}, {})",
            min.len(),
            max.len(),
            count.len()
        )));
    }
    (0..n)
        .map(|i| {
            Ok(AxisRange {
                axis: axis[i].parse::<Axis>()?,
                min: min[i],
                max: max[i],
                count: count[i],
            })
        })
        .collect()
}

fn emit(doc: &ReportDocument) -> Result<(), Error> {
    match &doc.config_echo.output.json {
        Some(path) => doc.write_json(path),
        None if doc.config_echo.output.csv.is_none()
            && doc.config_echo.output.plot_csv.is_none() =>
        {
            print!("{}", doc.to_json()?);
            Ok(())
        }
        None => Ok(()),
    }
}

fn fail(e: &Error, code: u8) -> ExitCode {
    eprintln!("error [{}]: {e}", e.stage());
    ExitCode::from(code)
}

fn analyze(cfg: RunConfig) -> ExitCode {
    if let Err(e) = cfg.validate() {
        return fail(&e, EXIT_CONFIG);
    }
    let record = match run_analyze(&cfg) {
        Ok(r) => r,
        Err(e) if e.is_domain_error() => return fail(&e, EXIT_DOMAIN),
        Err(e) => return fail(&e, EXIT_FAILURE),
    };
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    let verify = cfg.mode == Mode::Verify;
    let row = single_row(&record);
    let doc = if verify {
        ReportDocument::verify(&cfg, record)
    } else {
        ReportDocument::single(&cfg, record)
    };
    let written = emit(&doc).and_then(|_| match &cfg.output.csv {
        Some(p) => report::write_csv(p, std::slice::from_ref(&row)),
        None => Ok(()),
    });
    if let Err(e) = written {
        return fail(&e, EXIT_FAILURE);
    }
    if let Some(checks) = &doc.checks {
        let mut ok = true;
        for c in checks {
            eprintln!(
                "{} {}: {:e} ({} {:e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.relation,
                c.threshold
            );
            ok &= c.pass;
        }
        if !ok {
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    ExitCode::SUCCESS
}

fn scan(cfg: RunConfig) -> ExitCode {
    if let Err(e) = cfg.validate() {
        return fail(&e, EXIT_CONFIG);
    }
    let mut sink = match cfg.output.csv.as_deref().map(CsvSink::create).transpose() {
        Ok(s) => s,
        Err(e) => return fail(&e, EXIT_FAILURE),
    };
    let total = cfg.grid_points().len();
    let rows = run_scan_streaming(&cfg, |row| {
        if let Some(skip) = &row.skip {
            eprintln!(
                "skip {}/{total} [{}]: {}",
                row.index + 1,
                skip.stage,
                skip.error
            );
        }
        match sink.as_mut() {
            Some(s) => s.push(row),
            None => Ok(()),
        }
    });
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return fail(&e, EXIT_FAILURE),
    };
    let result = sink
        .map_or(Ok(()), CsvSink::finish)
        .and_then(|_| match &cfg.output.plot_csv {
            Some(p) => report::write_plot_csv(p, &rows),
            None => Ok(()),
        })
        .and_then(|_| emit(&ReportDocument::scan(&cfg, rows)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, EXIT_FAILURE),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(common) => match common.build(Mode::Analyze) {
            Ok(cfg) => analyze(cfg),
            Err(e) => fail(&e, EXIT_CONFIG),
        },
        Command::Verify(common) => match common.build(Mode::Verify) {
            Ok(cfg) => analyze(cfg),
            Err(e) => fail(&e, EXIT_CONFIG),
        },
        Command::Scan {
            common,
            axis,
            min,
            max,
            count,
            plot_csv,
        } => {
            let cfg = common.build(Mode::Scan).and_then(|mut cfg| {
                if !axis.is_empty() || cfg.grid.is_empty() {
                    cfg.grid = scan_grid(&axis, &min, &max, &count)?;
                }
                if plot_csv.is_some() {
                    cfg.output.plot_csv = plot_csv;
                }
                Ok(cfg)
            });
            match cfg {
                Ok(cfg) => scan(cfg),
                Err(e) => fail(&e, EXIT_CONFIG),
            }
        }
    }
}
