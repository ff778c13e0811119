use thiserror::Error;

/// Every failure the library can report. Each variant maps to a stable
/// machine-readable code (see [`Error::code`]) used by the CLI and the C ABI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curvature must be finite and non-negative, got {0}")]
    NegativeCurvature(f64),

    #[error("operation requires positive curvature; the flat plane has no embedding")]
    FlatCurvature,

    #[error("polar angle chi = {0} lies outside the open upper hemisphere [0, pi/2)")]
    OutsideHemisphere(f64),

    #[error("radius must be positive, got r = {0}")]
    NonPositiveRadius(f64),

    #[error("alpha is imaginary: 2k = {two_k} >= Lz^2 = {lz_sq}")]
    ImaginaryAlpha { two_k: f64, lz_sq: f64 },

    #[error("m' is imaginary: m^2 = {m_sq} does not exceed 2k = {two_k}")]
    ImaginaryMPrime { m_sq: f64, two_k: f64 },

    #[error("orbit collapsed towards r = 0 (r = {r:e} at t = {t})")]
    SingularOrbit { t: f64, r: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("orbit is unbound or the closed form is undefined: {0}")]
    Unbound(String),

    #[error("trajectory has no turning points")]
    NoTurningPoints,

    #[error("hypergeometric series hits a pole at term {term} (c = {c})")]
    HypergeometricPole { term: usize, c: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error(
        "grid too coarse: Richardson error estimate {estimate:e} exceeds tolerance {tolerance:e}"
    )]
    InsufficientResolution { estimate: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("system kind mismatch: expected {expected}")]
    WrongSystem { expected: &'static str },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NegativeCurvature(_) => "ERR_NEGATIVE_CURVATURE",
            Error::FlatCurvature => "ERR_FLAT_CURVATURE",
            Error::OutsideHemisphere(_) => "ERR_OUTSIDE_HEMISPHERE",
            Error::NonPositiveRadius(_) => "ERR_NONPOSITIVE_RADIUS",
            Error::ImaginaryAlpha { .. } => "ERR_IMAGINARY_ALPHA",
            Error::ImaginaryMPrime { .. } => "ERR_IMAGINARY_M_PRIME",
            Error::SingularOrbit { .. } => "ERR_SINGULAR_ORBIT",
            Error::StepSizeUnderflow { .. } => "ERR_STIFF",
            Error::Unbound(_) => "ERR_UNBOUND",
            Error::NoTurningPoints => "ERR_NO_TURNING_POINTS",
            Error::HypergeometricPole { .. } => "ERR_HYPERGEOMETRIC_POLE",
            Error::Eigensolver(_) => "ERR_EIGENSOLVER",
            Error::InsufficientResolution { .. } => "ERR_RESOLUTION",
            Error::InvalidArgument(_) => "ERR_INVALID_ARGUMENT",
            Error::WrongSystem { .. } => "ERR_WRONG_SYSTEM",
            Error::Io(_) => "ERR_IO",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
