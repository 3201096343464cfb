use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    InvalidInput { what: &'static str, detail: String },
    /// A NaN or infinity showed up where finite data is required.
    NonFinite(&'static str),
    /// A density had zero (or negative) total mass.
    ZeroMass,
    /// A quantity is undefined for the requested parameters.
    Undefined { what: &'static str, detail: String },
    /// A time step produced a non-positive density or crossed radii.
    StepRejected { tau: f64, reason: String },
    /// Step rejection persisted after the retry budget was spent.
    BlowUp { tau: f64, retries: u32, reason: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn undefined(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Undefined {
            what,
            detail: detail.into(),
        }
    }

    /// Stable short code, used by the CLI for machine-readable errors.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput { .. } => "invalid_input",
            Error::NonFinite(_) => "non_finite",
            Error::ZeroMass => "zero_mass",
            Error::Undefined { .. } => "undefined",
            Error::StepRejected { .. } => "step_rejected",
            Error::BlowUp { .. } => "blow_up",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput { what, detail } => write!(f, "invalid {what}: {detail}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::ZeroMass => f.write_str("density has zero total mass"),
            Error::Undefined { what, detail } => write!(f, "{what} is undefined: {detail}"),
            Error::StepRejected { tau, reason } => {
                write!(f, "step rejected at tau={tau:e}: {reason}")
            }
            Error::BlowUp {
                tau,
                retries,
                reason,
            } => write!(
                f,
                "integration halted at tau={tau:e} after {retries} retries: {reason}"
            ),
        }
    }
}

impl core::error::Error for Error {}
