use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    /// A configuration or input violates a documented invariant. The message
    /// names the invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{quantity} = {value} is outside the admissible range [{lo}, {hi}]")]
    Domain {
        quantity: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("target tendon length {target} mm is outside the achievable range [{min}, {max}] mm")]
    Range { target: f64, min: f64, max: f64 },

    #[error("singular configuration: {0}")]
    Singularity(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("opposing fingertip trajectories never come within {contact_distance} mm")]
    NoMeet { contact_distance: f64 },

    #[error("overpressure: {pressure} kPa reached with {unabsorbed} mL still to inject")]
    Overpressure { pressure: f64, unabsorbed: f64 },

    #[error("simulation error: {message}")]
    Simulation { message: String, trace: Vec<String> },
}

impl Error {
    pub(crate) fn domain(quantity: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain {
            quantity: quantity.into(),
            value,
            lo,
            hi,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
