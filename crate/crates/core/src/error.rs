use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the analysis pipeline can report.
///
/// Variants are grouped by the module that raises them; [`Error::stage`]
/// recovers that module name for reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("invalid wave parameters: {0}")]
    InvalidParams(String),
    #[error("no periodic orbit: {0}")]
    NoPeriodicOrbit(String),
    #[error("degenerate turning point at u = {u}: |V'(u)| = {slope:e} below tolerance {tol:e}")]
    DegenerateRoot { u: f64, slope: f64, tol: f64 },

    #[error("non-positive radicand E - V = {value:e} at u = {u} inside the orbit")]
    NonPositiveRadicand { u: f64, value: f64 },
    #[error("invalid quadrature configuration: {0}")]
    InvalidQuadrature(String),

    #[error("finite-difference stencil leaves the existence domain along {axis}: {reason}")]
    StencilOutsideDomain { axis: &'static str, reason: String },
    #[error("Richardson step halving changed d{quantity}/d{axis} by {change:e} (relative)")]
    NonConvergedRichardson {
        quantity: &'static str,
        axis: &'static str,
        change: f64,
    },

    #[error("profile return time {shooting} differs from quadrature period {quadrature} (relative {rel:e})")]
    PeriodMismatch {
        shooting: f64,
        quadrature: f64,
        rel: f64,
    },
    #[error("basis function {name} is not periodic: wrap-around jump {jump:e}")]
    NonPeriodicBasis { name: &'static str, jump: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("pencil determinant has no degree-3 leading part (lowest nonzero degree {degree})")]
    DegenerateLeadingPart { degree: usize },

    #[error("ODE integrator failed: {0}")]
    IntegratorFailure(String),
    #[error("branches {first} and {second} collided at kappa = {kappa} (|dmu| = {distance:e})")]
    BranchCollision {
        kappa: f64,
        first: usize,
        second: usize,
        distance: f64,
    },
    #[error("Newton iteration on D(mu, {kappa}) diverged from seed {seed}")]
    NewtonDivergence { kappa: f64, seed: String },

    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite value in report field {0}")]
    NonFinite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Module that raised the error.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::InvalidNonlinearity(_)
            | Error::InvalidParams(_)
            | Error::NoPeriodicOrbit(_)
            | Error::DegenerateRoot { .. } => "potential_orbit",
            Error::NonPositiveRadicand { .. } | Error::InvalidQuadrature(_) => {
                "quadrature_integrals"
            }
            Error::StencilOutsideDomain { .. } | Error::NonConvergedRichardson { .. } => {
                "parameter_calculus"
            }
            Error::PeriodMismatch { .. }
            | Error::NonPeriodicBasis { .. }
            | Error::InvalidGrid(_) => "jordan_basis",
            Error::DegenerateLeadingPart { .. } => "modulation_analysis",
            Error::IntegratorFailure(_)
            | Error::BranchCollision { .. }
            | Error::NewtonDivergence { .. } => "floquet_oracle",
            Error::Config(_)
            | Error::NonFinite(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => "cli_reporting",
        }
    }

    /// True for failures that mean the parameters lie outside the existence domain.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::NoPeriodicOrbit(_) | Error::DegenerateRoot { .. } | Error::InvalidParams(_)
        )
    }
}
