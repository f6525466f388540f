use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bodies {i} and {j} collided: separation {distance:e} below floor {floor:e}")]
    Collision {
        i: usize,
        j: usize,
        distance: f64,
        floor: f64,
    },

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-positive mass {0}")]
    InvalidMass(f64),

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("angular momentum {value:e} exceeds the zero gate {tolerance:e}")]
    NonzeroAngularMomentum { value: f64, tolerance: f64 },

    #[error("configuration at t = {t} is a syzygy (|det X| = {det:e}, threshold {threshold:e})")]
    NearSyzygy { t: f64, det: f64, threshold: f64 },

    #[error("C0 has a complex eigenvalue pair (discriminant {0:e})")]
    ComplexSpectrum(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("no syzygy found before t = {0}")]
    NoSyzygy(f64),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Collision { .. } => "collision",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::InvalidMass(_) => "invalid_mass",
            Error::InvalidCoefficient(_) => "invalid_coefficient",
            Error::NonzeroAngularMomentum { .. } => "nonzero_angular_momentum",
            Error::NearSyzygy { .. } => "near_syzygy_start",
            Error::ComplexSpectrum(_) => "complex_spectrum",
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::NoSyzygy(_) => "no_syzygy",
            Error::Io(_) => "io",
            Error::Validation(_) => "validation_failed",
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
        Error::Input(e.to_string())
    }
}
