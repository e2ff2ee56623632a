use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric is degenerate at the queried point (det = {det:e})")]
    DegenerateMetric { det: f64 },
    #[error("vector lies on the light cone of a (A = {a:e}); s = B²/A is undefined")]
    SOnLightCone { a: f64 },
    #[error("zero tangent vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Ψ domain error at s = {s}: {constraint}")]
    DomainError { s: f64, constraint: String },
    #[error("operation not supported for the {0} family")]
    UnsupportedFamily(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("finite-difference stencil leaves the domain: {0}")]
    StencilOutOfDomain(String),
    #[error("closed-form inverse refused: {0}")]
    SingularTensor(String),
    #[error("singular base matrix in update formula")]
    SingularBase,
    #[error("singular update: {0}")]
    SingularUpdate(String),
    #[error("matrix is singular")]
    Singular,
    #[error("no cone sample accepted after {draws} draws")]
    EmptyCone { draws: u64 },
    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),
    #[error("parse error at {position}: {message}")]
    ParseError { position: usize, message: String },
    #[error("unbound variable `{0}` in expression")]
    UnboundVariable(String),
    #[error("validation error: {0}")]
    ValidationError(String),
    #[error("config error at `{key}`: {message}")]
    ConfigError { key: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateMetric { .. } => "DegenerateMetric",
            Error::SOnLightCone { .. } => "SOnLightCone",
            Error::ZeroVector => "ZeroVector",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DomainError { .. } => "DomainError",
            Error::UnsupportedFamily(_) => "UnsupportedFamily",
            Error::InvalidParams(_) => "InvalidParams",
            Error::StencilOutOfDomain(_) => "StencilOutOfDomain",
            Error::SingularTensor(_) => "SingularTensor",
            Error::SingularBase => "SingularBase",
            Error::SingularUpdate(_) => "SingularUpdate",
            Error::Singular => "Singular",
            Error::EmptyCone { .. } => "EmptyCone",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::ParseError { .. } => "ParseError",
            Error::UnboundVariable(_) => "UnboundVariable",
            Error::ValidationError(_) => "ValidationError",
            Error::ConfigError { .. } => "ConfigError",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn domain(s: f64, constraint: impl Into<String>) -> Self {
        Error::DomainError { s, constraint: constraint.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
