use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("lambda + mu^2 = {0} is not positive, no real omega exists")]
    NonPositiveDiscriminant(f64),
    #[error("integration produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("phase is undefined at (x, y) = (0, 0)")]
    OriginUndefined,
    #[error("argument z must be non-zero")]
    ZeroArgument,
    #[error("Moebius map has a pole at z = alpha")]
    PoleAtAlpha,
    #[error("zeta = {0} is a singular point of the equation")]
    SingularPoint(f64),
    #[error("the matrix-product determinant is not defined for n = 0")]
    DegreeZeroUnsupported,
    #[error("ratio R_{k} vanished, the recurrence divides by it")]
    ZeroRatioDivision { k: usize },
    #[error("mu = 0: coefficient ratios are undefined")]
    MuZero,
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("lambda = 0: the necessary-condition row is undefined")]
    LambdaZero,
    #[error("parameters are not spectral: |Delta_n| = {delta:e} exceeds {bound:e}")]
    NotSpectral { delta: f64, bound: f64 },
    #[error("spectral root {index} failed to converge")]
    ConvergenceFailure { index: usize },
    #[error("P(1) vanishes, epsilon cannot be fixed")]
    ZeroAtOne,
    #[error("normalized symmetry ratio {0} is not +-1")]
    NotUnimodular(f64),
    #[error("polynomial vanishes on the integration path near z = {0}")]
    PolynomialZeroOnPath(f64),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("polynomial vanishes on the unit circle near arg z = {0}")]
    ZeroOnUnitCircle(f64),
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("orthogonality requires mu > 0, got {0}")]
    MuNotPositive(f64),
    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl Error {
    /// Variant name, used by the CLI on stderr and by structured error records.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NonPositiveDiscriminant(_) => "NonPositiveDiscriminant",
            Error::NonFiniteState { .. } => "NonFiniteState",
            Error::OriginUndefined => "OriginUndefined",
            Error::ZeroArgument => "ZeroArgument",
            Error::PoleAtAlpha => "PoleAtAlpha",
            Error::SingularPoint(_) => "SingularPoint",
            Error::DegreeZeroUnsupported => "DegreeZeroUnsupported",
            Error::ZeroRatioDivision { .. } => "ZeroRatioDivision",
            Error::MuZero => "MuZero",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::LambdaZero => "LambdaZero",
            Error::NotSpectral { .. } => "NotSpectral",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::ZeroAtOne => "ZeroAtOne",
            Error::NotUnimodular(_) => "NotUnimodular",
            Error::PolynomialZeroOnPath(_) => "PolynomialZeroOnPath",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::ZeroOnUnitCircle(_) => "ZeroOnUnitCircle",
            Error::NonPositiveArgument(_) => "NonPositiveArgument",
            Error::MuNotPositive(_) => "MuNotPositive",
            Error::Serialization(_) => "Serialization",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
