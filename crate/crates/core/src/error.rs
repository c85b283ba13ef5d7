use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("neck thickness eta={eta} exceeds width delta={delta}")]
    RegimeViolation { delta: f64, eta: f64 },

    #[error("bulk half-extent {extent} too small for neck (need at least {required})")]
    BulkTooSmall { extent: f64, required: f64 },

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("grid would have {cells} active cells, over the budget of {budget}")]
    CellBudgetExceeded { cells: usize, budget: usize },

    #[error("field length {got} does not match grid ({expected} active cells)")]
    SizeMismatch { expected: usize, got: usize },

    #[error("non-finite value in field at cell {0}")]
    NonFiniteField(usize),

    #[error("scaling law {which}: {reason}")]
    InvalidLaw { which: &'static str, reason: String },

    #[error("family cannot be classified: {0}")]
    UnclassifiableFamily(String),

    #[error("regime has no predictions (delta ~ eta is outside the supported regimes)")]
    OutOfScope,

    #[error("critical letter-box report carries no finite ell")]
    MissingEll,

    #[error("logarithmic singularity: eta ({eta}) must be strictly below delta ({delta})")]
    LogSingularity { delta: f64, eta: f64 },

    #[error("shell parameters invalid: {0}")]
    InvalidShell(String),

    #[error("mu={mu} outside shell range [{lo}, {hi}]")]
    OutsideShell { mu: f64, lo: f64, hi: f64 },

    #[error("shell does not fit inside the flat part of the bulk: a*cosh(2M)={reach} >= r0={flat_radius}")]
    ShellDoesNotFit { reach: f64, flat_radius: f64 },

    #[error("invalid well configuration: alpha={alpha} must be below beta={beta}")]
    InvalidWells { alpha: f64, beta: f64 },

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("non-finite energy at iteration {iteration}")]
    NonFiniteEnergy { iteration: usize },

    #[error("line search found no descent at iteration {iteration} (residual {residual:e})")]
    NoDescent { iteration: usize, residual: f64 },

    #[error("profile has an empty neck slab")]
    EmptySlab,

    #[error("no bulk cells in plateau shell [{r1}, {r2}]")]
    EmptyShell { r1: f64, r2: f64 },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("malformed dump: {0}")]
    Format(String),
}

impl Error {
    /// Variant name, for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositive { .. } => "NonPositive",
            Error::RegimeViolation { .. } => "RegimeViolation",
            Error::BulkTooSmall { .. } => "BulkTooSmall",
            Error::InvalidResolution { .. } => "InvalidResolution",
            Error::CellBudgetExceeded { .. } => "CellBudgetExceeded",
            Error::SizeMismatch { .. } => "SizeMismatch",
            Error::NonFiniteField { .. } => "NonFiniteField",
            Error::InvalidLaw { .. } => "InvalidLaw",
            Error::UnclassifiableFamily { .. } => "UnclassifiableFamily",
            Error::OutOfScope => "OutOfScope",
            Error::MissingEll => "MissingEll",
            Error::LogSingularity { .. } => "LogSingularity",
            Error::InvalidShell { .. } => "InvalidShell",
            Error::OutsideShell { .. } => "OutsideShell",
            Error::ShellDoesNotFit { .. } => "ShellDoesNotFit",
            Error::InvalidWells { .. } => "InvalidWells",
            Error::InvalidOptions { .. } => "InvalidOptions",
            Error::NonFiniteEnergy { .. } => "NonFiniteEnergy",
            Error::NoDescent { .. } => "NoDescent",
            Error::EmptySlab => "EmptySlab",
            Error::EmptyShell { .. } => "EmptyShell",
            Error::DegenerateRegression { .. } => "DegenerateRegression",
            Error::Format { .. } => "Format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}
