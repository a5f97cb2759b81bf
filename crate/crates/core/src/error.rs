use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input was outside the domain of an operation (negative distance, NaN, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration cannot be realized (no feasible ramp, road too crowded, bad key).
    #[error("configuration error: {0}")]
    Config(String),

    /// A simulation invariant was breached. This indicates a bug, not bad input.
    #[error("simulation error at t={time}s: {message}")]
    Simulation { time: f64, message: String },

    /// A required baseline row was missing when computing gains.
    #[error("missing baseline: {0}")]
    MissingBaseline(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite_nonneg(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and nonnegative, got {value}")))
    }
}
