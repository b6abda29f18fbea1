use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("metric not symmetric: g[{i}][{j}] differs from g[{j}][{i}]")]
    MetricNotSymmetric { i: usize, j: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid spacetime document: {0}")]
    InvalidSpec(String),

    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("metric signature at {point:?} is {found:?}, expected {expected:?}")]
    SignatureMismatch {
        point: Vec<f64>,
        expected: Vec<i8>,
        found: Vec<i8>,
    },

    #[error("point {point:?} lies outside the chart domain (coordinate `{coordinate}`)")]
    OutOfDomain { point: Vec<f64>, coordinate: String },

    #[error("non-finite value while evaluating {what} at {point:?}")]
    NonFinite { what: String, point: Vec<f64> },

    #[error("spacetime `{0}` has no torsion field")]
    MissingTorsion(String),

    #[error("spacetime `{0}` has no frame field")]
    MissingFrame(String),

    #[error("frame matrix is singular at {point:?}")]
    SingularFrame { point: Vec<f64> },

    #[error("frame is not orthonormal (max |g(e_a, e_b) - eta_ab| = {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("zero vector")]
    ZeroVector,

    #[error("operation requires a Lorentzian signature, found {0:?}")]
    NotLorentzian(Vec<i8>),

    #[error("reference vector is not unit timelike (g(Z, Z) = {norm})")]
    NotUnitTimelike { norm: f64 },

    #[error("curve left the chart domain at tau = {tau}")]
    DomainExit {
        tau: f64,
        last: Box<crate::integrate::CurveState>,
        reason: String,
    },

    #[error("step size underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },

    #[error("integration exceeded {max_steps} steps at tau = {tau}")]
    MaxStepsExceeded { tau: f64, max_steps: usize },

    #[error("normal-coordinate patch of radius {radius} is not invertible")]
    PatchNotInvertible { radius: f64 },

    #[error("input curve is not an autoparallel (residual {residual:e})")]
    NotAutoparallel { residual: f64 },

    #[error("transported frame degenerated (condition number {condition:e})")]
    FrameDegenerate { condition: f64 },

    #[error("missing gradient data for curvature")]
    MissingGradient,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable kind, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::UnknownIdentifier { .. } => "unknown_identifier",
            Error::MetricNotSymmetric { .. } => "metric_not_symmetric",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::SingularMetric { .. } => "singular_metric",
            Error::SignatureMismatch { .. } => "signature_mismatch",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::NonFinite { .. } => "non_finite",
            Error::MissingTorsion(_) => "missing_torsion",
            Error::MissingFrame(_) => "missing_frame",
            Error::SingularFrame { .. } => "singular_frame",
            Error::NotOrthonormal { .. } => "not_orthonormal",
            Error::ZeroVector => "zero_vector",
            Error::NotLorentzian(_) => "not_lorentzian",
            Error::NotUnitTimelike { .. } => "not_unit_timelike",
            Error::DomainExit { .. } => "domain_exit",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::MaxStepsExceeded { .. } => "max_steps_exceeded",
            Error::PatchNotInvertible { .. } => "patch_not_invertible",
            Error::NotAutoparallel { .. } => "not_autoparallel",
            Error::FrameDegenerate { .. } => "frame_degenerate",
            Error::MissingGradient => "missing_gradient",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
