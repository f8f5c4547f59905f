use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (shapes, lengths, geometry).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration key holds an unusable value.
    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// Energy is infinite where a finite value is required.
    #[error("energy is infinite: {0}")]
    InfiniteEnergy(String),

    /// The optimizer could not find a finite starting point.
    #[error("optimizer initialization failed: {0}")]
    Initialization(String),

    /// A phase has an empty super-level set where one is required.
    #[error("phase {phase} has an empty super-level set at level {level}")]
    EmptyPhase { phase: usize, level: f64 },

    #[error("linear program {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
