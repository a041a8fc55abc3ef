use std::fmt;

/// Errors raised by risk-measure computations.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskError {
    /// The distribution has no finite mean (e.g. Pareto with tail index <= 1).
    NonIntegrable,
    /// An empirical distribution was built from an empty sample.
    EmptySample,
    /// A conditional tail expectation was requested but no mass lies strictly
    /// above the conditioning threshold.
    DegenerateTail,
    /// The operation is not defined for this distribution kind.
    UnsupportedKind(&'static str),
    /// An argument lies outside the mathematical domain of the operation.
    DomainError(String),
    /// A risk level outside (0, 1/2] was supplied.
    InvalidLevel(f64),
    /// A finite-atom model failed validation.
    InvalidModel(String),
    /// Geometric search exhausted its iteration budget without finding a
    /// point where the distortion exceeds the candidate mixture bound.
    WitnessNotFound,
    /// The dual search produced a density violating its own constraints;
    /// indicates a bug, not a property of the input.
    InfeasibleDensity,
    /// The requested ratio columns are undefined for the declared
    /// extreme-value class of the distribution.
    ClassMismatch(String),
    /// I/O failure while reading an input file.
    Io(String),
    /// Malformed input file contents.
    Parse(String),
}

impl RiskError {
    /// Short machine-readable code used in report fields and JSON output.
    pub fn code(&self) -> &'static str {
        match self {
            RiskError::NonIntegrable => "non_integrable",
            RiskError::EmptySample => "empty_sample",
            RiskError::DegenerateTail => "degenerate_tail",
            RiskError::UnsupportedKind(_) => "unsupported_kind",
            RiskError::DomainError(_) => "domain_error",
            RiskError::InvalidLevel(_) => "invalid_level",
            RiskError::InvalidModel(_) => "invalid_model",
            RiskError::WitnessNotFound => "witness_not_found",
            RiskError::InfeasibleDensity => "infeasible_density",
            RiskError::ClassMismatch(_) => "class_mismatch",
            RiskError::Io(_) => "io_error",
            RiskError::Parse(_) => "parse_error",
        }
    }
}

impl fmt::Display for RiskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskError::NonIntegrable => write!(f, "distribution has no finite mean"),
            RiskError::EmptySample => write!(f, "empirical sample is empty"),
            RiskError::DegenerateTail => write!(f, "no mass strictly above the threshold"),
            RiskError::UnsupportedKind(op) => {
                write!(f, "operation `{op}` is not defined for this distribution kind")
            }
            RiskError::DomainError(msg) => write!(f, "domain error: {msg}"),
            RiskError::InvalidLevel(a) => {
                write!(f, "risk level must lie in (0, 1/2], got {a}")
            }
            RiskError::InvalidModel(msg) => write!(f, "invalid finite model: {msg}"),
            RiskError::WitnessNotFound => {
                write!(f, "no witness found within the search budget (numeric range failure)")
            }
            RiskError::InfeasibleDensity => {
                write!(f, "dual search produced an infeasible density (internal bug)")
            }
            RiskError::ClassMismatch(msg) => write!(f, "class mismatch: {msg}"),
            RiskError::Io(msg) => write!(f, "i/o error: {msg}"),
            RiskError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for RiskError {}

impl From<std::io::Error> for RiskError {
    fn from(e: std::io::Error) -> Self {
        RiskError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RiskError>;
