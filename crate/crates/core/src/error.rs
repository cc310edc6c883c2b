use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("unsupported mode LG(l={l}, p={p}): only p = 0 and |l| <= 2 are supported")]
    UnsupportedMode { l: i32, p: u32 },

    #[error("beam structure of radius {radius:.4} does not fit inside the grid half-extent {half_extent:.4}")]
    BeamTooLarge { radius: f64, half_extent: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no convergence after {steps} steps (last relative residual {residual:.3e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("ladder truncation guard: population {population:.3e} in edge order {order} exceeds {limit:.1e}; raise n_max")]
    EdgePopulation { order: i32, population: f64, limit: f64 },

    #[error("step-size guard: {term} advances phase by {phase:.3} rad per substep (limit {limit})")]
    StepSize { term: &'static str, phase: f64, limit: f64 },

    #[error("density on the sampling loop falls below {floor:.1e} of the peak; phase undefined")]
    DensityFloor { floor: f64 },

    #[error("point ({y:.3}, {z:.3}) lies outside the grid")]
    OutsideGrid { y: f64, z: f64 },

    #[error("no interior maximum in calibration scan over [{lo:.4e}, {hi:.4e}]")]
    NoInteriorMaximum { lo: f64, hi: f64 },

    #[error("angular contrast {contrast:.3} below threshold {threshold}")]
    LowContrast { contrast: f64, threshold: f64 },

    #[error("expanded cloud reaches the grid boundary ({fraction:.2e} of the norm in the border band); use pad factor >= {required_pad}")]
    GridOverflow { fraction: f64, required_pad: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Name of the numerical guard that tripped, if this error is one.
    pub fn guard_name(&self) -> Option<&'static str> {
        match self {
            Error::NonConvergence { .. } => Some("convergence"),
            Error::EdgePopulation { .. } => Some("edge_population"),
            Error::StepSize { .. } => Some("step_size"),
            Error::DensityFloor { .. } => Some("density_floor"),
            Error::NoInteriorMaximum { .. } => Some("calibration_range"),
            Error::LowContrast { .. } => Some("contrast"),
            Error::GridOverflow { .. } => Some("grid_overflow"),
            Error::NonFinite(_) => Some("non_finite"),
            _ => None,
        }
    }
}
