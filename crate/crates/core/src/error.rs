use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeoError>;

/// Everything that can go wrong between parsing a scene and emitting a report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("syntax error at {line}:{column}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unknown identifier `{name}` at {line}:{column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("domain error in `{subexpr}`: {detail}")]
    Domain { subexpr: String, detail: String },

    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },

    #[error("jet order {requested} exceeds the supported maximum of 3")]
    OrderTooHigh { requested: usize },

    #[error("singular metric: Cholesky pivot {pivot} = {value:e} is below {tol:e}")]
    SingularMetric { pivot: usize, value: f64, tol: f64 },

    #[error("degenerate plane section: denominator {denom:e} <= {tol:e}")]
    DegeneratePlane { denom: f64, tol: f64 },

    #[error("operation needs metric jets of order {needed}, have {have}")]
    OrderInsufficient { needed: usize, have: usize },

    #[error("immersion is rank deficient: smallest singular value {sigma_min:e} <= {tol:e}")]
    RankDeficient { sigma_min: f64, tol: f64 },

    #[error("vector is not normal: tangential part has norm {tangential:e}")]
    NotNormal { tangential: f64 },

    #[error("vector field vanishes: |V| = {norm:e}")]
    ZeroField { norm: f64 },

    #[error("normal equations are singular (condition number {condition:e})")]
    SingularNormalEquations { condition: f64 },

    #[error("field changes class across the sample: {detail}")]
    InconsistentSample { detail: String },

    #[error("precondition of {check} violated: {detail}")]
    Precondition { check: String, detail: String },

    #[error("integral curve left the parameter box after {completed} of {requested} steps")]
    DomainExit { completed: usize, requested: usize },

    #[error("tangential part of the axis vanishes along the curve: |V^T| = {norm:e}")]
    VanishingTangent { norm: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("warping model violated at s = {s}: lambda = {lambda} is outside (-1, 1)")]
    ModelViolation { s: f64, lambda: f64 },

    #[error("warping function must be positive, got {value} at s = {s}")]
    NonPositiveWarp { s: f64, value: f64 },

    #[error("schema violation at {path}: {detail}")]
    Schema { path: String, detail: String },

    #[error("dimension mismatch at {path}: expected {expected}, found {found}")]
    DimensionMismatch {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("{0}")]
    Io(String),
}

impl GeoError {
    /// True for errors caused by the input document rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            GeoError::Syntax { .. }
                | GeoError::UnknownIdentifier { .. }
                | GeoError::Schema { .. }
                | GeoError::DimensionMismatch { .. }
                | GeoError::Io(_)
        )
    }
}
