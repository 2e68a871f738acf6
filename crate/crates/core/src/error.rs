use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Hypothesis,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("function undefined on the spectrum: {0}")]
    DomainError(String),

    #[error("unknown function name `{0}`")]
    UnknownName(String),
    #[error("parameter outside the class range: {0}")]
    ParamOutOfClassRange(String),
    #[error("function is not positive on (0,inf): {0}")]
    NonPositiveFunction(String),
    #[error("no representing measure: {0}")]
    NoMeasure(String),
    #[error("quadrature did not converge (residual {residual:.3e})")]
    QuadratureFailure { residual: f64 },

    #[error("infinite boundary weight in J_f")]
    InfiniteWeight,
    #[error("indeterminate form: {0}")]
    IndeterminateForm(String),

    #[error("empty Kraus list")]
    EmptyKraus,
    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("map is not unital (residual {residual:.3e})")]
    NotUnital { residual: f64 },
    #[error("map is not Schwarz (min eigenvalue {min_eig:.3e})")]
    NotSchwarz { min_eig: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("operator is not invertible: {0}")]
    NotInvertible(String),
    #[error("function is not positive: {0}")]
    NotPositiveFunction(String),
    #[error("not a density operator: {0}")]
    NotDensity(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("finite-difference grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("multiplicative domain is not full on the output support")]
    NotFullMultiplicativeDomain,
    #[error("algebra is not a factor (center dimension {center_dim})")]
    NotAFactor { center_dim: usize },
    #[error("factorization failed (residual {residual:.3e})")]
    FactorizationFailed { residual: f64 },
    #[error("map is not recoverable by its Petz map (residual {residual:.3e})")]
    NotRecoverable { residual: f64 },
    #[error("scenario assertion failed: {0}")]
    ScenarioMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NonFinite => "NonFinite",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotPositive { .. } => "NotPositive",
            Error::DomainError(_) => "DomainError",
            Error::UnknownName(_) => "UnknownName",
            Error::ParamOutOfClassRange(_) => "ParamOutOfClassRange",
            Error::NonPositiveFunction(_) => "NonPositiveFunction",
            Error::NoMeasure(_) => "NoMeasure",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::InfiniteWeight => "InfiniteWeight",
            Error::IndeterminateForm(_) => "IndeterminateForm",
            Error::EmptyKraus => "EmptyKraus",
            Error::InvalidIsometry(_) => "InvalidIsometry",
            Error::InvalidDensity(_) => "InvalidDensity",
            Error::NotUnital { .. } => "NotUnital",
            Error::NotSchwarz { .. } => "NotSchwarz",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::ParameterOutOfRange(_) => "ParameterOutOfRange",
            Error::CalibrationFailure(_) => "CalibrationFailure",
            Error::NotInvertible(_) => "NotInvertible",
            Error::NotPositiveFunction(_) => "NotPositiveFunction",
            Error::NotDensity(_) => "NotDensity",
            Error::SupportViolation(_) => "SupportViolation",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::NotFullMultiplicativeDomain => "NotFullMultiplicativeDomain",
            Error::NotAFactor { .. } => "NotAFactor",
            Error::FactorizationFailed { .. } => "FactorizationFailed",
            Error::NotRecoverable { .. } => "NotRecoverable",
            Error::Parse(_) => "Parse",
            Error::ScenarioMismatch(_) => "ScenarioMismatch",
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NotUnital { .. }
            | NotSchwarz { .. }
            | HypothesisViolated(_)
            | NotInvertible(_)
            | NotPositiveFunction(_)
            | NonPositiveFunction(_)
            | NotDensity(_)
            | SupportViolation(_)
            | NotFullMultiplicativeDomain
            | NotAFactor { .. }
            | NotRecoverable { .. }
            | InfiniteWeight
            | IndeterminateForm(_)
            | DomainError(_) => ErrorClass::Hypothesis,
            QuadratureFailure { .. }
            | CalibrationFailure(_)
            | FactorizationFailed { .. }
            | GridTooCoarse(_)
            | ScenarioMismatch(_) => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }
}
