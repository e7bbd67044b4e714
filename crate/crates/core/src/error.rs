use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("q must lie in [0, 1), got {0}")]
    InvalidQ(f64),
    #[error("infinite product did not reach truncation threshold within {max_terms} factors")]
    TruncationBudgetExceeded { max_terms: usize },
    #[error("denominator parameter hits a pole at series index {index}")]
    DenominatorPole { index: usize },
    #[error("non-terminating series diverges or fails to converge (|z| = {z_abs})")]
    NonTerminatingDivergent { z_abs: f64 },
    #[error("value expected to be real has imaginary part {imag:e} (real part {real:e})")]
    NotReal { real: f64, imag: f64 },
    #[error("recurrence denominator vanishes at degree {degree}")]
    RecurrenceDenominatorZero { degree: usize },
    #[error("normalizer (ab;q)_m vanishes at degree {degree}")]
    NormalizerZero { degree: usize },
    #[error("connection coefficients need a nonzero first parameter")]
    RequiresNonzeroA,
    #[error("closed-form connection coefficients need q > 0")]
    RequiresPositiveQ,
    #[error("parameters outside the admissible region: {0}")]
    OutsideOmega(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("rates outside the domain: {0}")]
    DomainError(String),
    #[error("singular boundary parameters: ABCD = {abcd} lies on q^(-l)")]
    SingularCase { abcd: f64 },
    #[error("inversion of the boundary map failed (residual {residual:e})")]
    InversionFailure { residual: f64 },
    #[error("matrix representation undefined: ABCD = {abcd} lies on q^(-l)")]
    SingularAbcd { abcd: f64 },
    #[error("direct coefficient formula is unstable for A = {a:e}")]
    SmallAUnstable { a: f64 },
    #[error("time {t} is not admissible: {reason}")]
    InadmissibleTime { t: f64, reason: String },
    #[error("time pair ({s}, {t}) is not admissible: {reason}")]
    InadmissiblePair { s: f64, t: f64, reason: String },
    #[error("point {x} is not in the support at time {s}")]
    XOutsideSupport { x: f64, s: f64 },
    #[error("system size {n} exceeds cap {cap}")]
    SizeCap { n: usize, cap: usize },
    #[error("stationary solve failed (residual {residual:e})")]
    SolveFailure { residual: f64 },
    #[error("operation requires phase {expected}, got {actual}")]
    WrongPhase { expected: String, actual: String },
    #[error("parameter {what} = {value} lies on a q-grid")]
    GridHit { what: String, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
