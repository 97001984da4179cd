//! Error types for the crate, grouped per subsystem.

use thiserror::Error;

/// Errors from the scalar-expression parser and evaluator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

/// Errors from curvature-field construction and operations.
#[derive(Debug, Error)]
pub enum FieldError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("field has no declared asymptotic value h_inf")]
    MissingHInf,
    #[error("field is not radial: values at |u|={radius} spread by {spread:e}")]
    NotRadial { radius: f64, spread: f64 },
    #[error("invalid field definition: {0}")]
    BadDefinition(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Errors from chart and surface-map construction.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("resolution {0} below module minimum: {1}")]
    Resolution(String, String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("chart mismatch: expected {expected}, got {got}")]
    ChartMismatch { expected: String, got: String },
    #[error("non-finite node value at index {0}")]
    NonFinite(usize),
    #[error("boundary ring must vanish on the Dirichlet disk (node {0})")]
    BoundaryNotZero(usize),
    #[error("map has no declared far-field value")]
    MissingFarField,
    #[error("zero curvature is not allowed here")]
    ZeroCurvature,
}

/// Errors from functional evaluation.
#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("alpha must lie in (1, 2), got {0}")]
    AlphaRange(f64),
    #[error("volume vanishes; isoperimetric ratio undefined")]
    ZeroVolume,
    #[error("degenerate map: Dirichlet energy is zero")]
    DegenerateMap,
}

/// Errors from the alpha-regularized solver.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("descent collapsed to the zero map (fell below the local-minimum barrier)")]
    Collapse,
    #[error("no convergence after {0} iterations (gradient norm {1:e})")]
    NoConvergence(usize, f64),
    #[error("isoperimetric constant unknown for this field; supply one")]
    UnknownIsoperimetric,
    #[error("checkpoint i/o: {0}")]
    Checkpoint(String),
}

/// Errors from blow-up rescaling analysis.
#[derive(Debug, Error)]
pub enum BlowupError {
    #[error("map has vanishing gradient; no concentration point")]
    ZeroGradient,
    #[error("rescale window lies entirely outside the chart")]
    WindowOutside,
    #[error("need at least {0} records, got {1}")]
    TooFewRecords(usize, usize),
}

/// Errors from configuration files and CLI specs.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("referenced file not found: {0}")]
    FileNotFound(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("i/o error: {0}")]
    Io(String),
}
