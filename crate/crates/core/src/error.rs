use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is outside its domain (non-positive length, zero count, ...).
    InvalidArgument { name: &'static str, value: f64 },
    /// Waveguide, antenna or user index out of range, or `n' == n` for a cross gain.
    InvalidIndex { what: &'static str, index: usize, bound: usize },
    /// Two containers that must agree in shape do not.
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    /// A user sits exactly on a radiating pinch, so `1/r` is undefined.
    SingularGeometry { waveguide: usize, antenna: usize, user_waveguide: usize, user: usize },
    /// The phasor sum for a user's own channel cancelled to zero.
    VanishingGain { waveguide: usize, user: usize },
    /// The iteration produced a non-finite power.
    NumericalFailure { iteration: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument { name, value } => {
                write!(f, "invalid argument `{name}` = {value}")
            }
            Error::InvalidIndex { what, index, bound } => {
                write!(f, "{what} index {index} out of range (bound {bound})")
            }
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)
            }
            Error::SingularGeometry { waveguide, antenna, user_waveguide, user } => write!(
                f,
                "user {user} of waveguide {user_waveguide} is colocated with antenna {antenna} of waveguide {waveguide}"
            ),
            Error::VanishingGain { waveguide, user } => {
                write!(f, "own channel gain of user {user} on waveguide {waveguide} vanishes")
            }
            Error::NumericalFailure { iteration } => {
                write!(f, "non-finite power encountered at iteration {iteration}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument { name, value })
    }
}
