use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("radius of curvature is not positive: rho({theta}) = {rho}")]
    NotConvex { theta: f64, rho: f64 },

    #[error("invalid phase point: {0}")]
    InvalidState(String),

    #[error("lazutkin y = {y} outside admissible range (0, {bound}) at x = {x}")]
    OutOfRange { x: f64, y: f64, bound: f64 },

    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },

    #[error("orbit step {index} failed: {source}")]
    Orbit {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fit failed at x = {x}: {source}")]
    FitAt {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no annihilating combination: coefficient weight vectors have rank {rank} ({detail})")]
    Degenerate { rank: usize, detail: String },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::NotConvex { .. } => "not_convex",
            Error::InvalidState(_) => "invalid_state",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Numerical { .. } => "numerical",
            Error::Orbit { .. } => "orbit",
            Error::Precondition(_) => "precondition",
            Error::FitAt { .. } => "fit",
            Error::Degenerate { .. } => "degenerate",
            Error::Grid(_) => "grid",
            Error::Io(_) => "io",
        }
    }

    /// True for errors caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } | Error::Degenerate { .. } => true,
            Error::Orbit { source, .. } | Error::FitAt { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
