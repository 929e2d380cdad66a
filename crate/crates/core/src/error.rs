use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input to a pure operation (negative spacing, empty window, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration rejected before any compute happens.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("time step {dt} s too coarse for max |detuning| {max_detuning} rad/s (phase per step {phase:.4} rad > {limit} rad)")]
    Resolution {
        dt: f64,
        max_detuning: f64,
        phase: f64,
        limit: f64,
    },

    #[error("non-finite polarization at t = {time} s (target {target}, node {node})")]
    NumericalFailure {
        time: f64,
        target: usize,
        node: usize,
    },

    #[error("fidelity undefined: zero output energy in window [{a}, {b}] s")]
    UndefinedFidelity { a: f64, b: f64 },

    #[error("found only {found} temporal nodes, {requested} requested")]
    InsufficientNodes { found: usize, requested: usize },

    #[error("no echo found after t = {after} s")]
    NoEchoFound { after: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the CLI (and mirrored by the C status codes).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Resolution { .. } | Error::InvalidInput(_) => 2,
            Error::NumericalFailure { .. } => 3,
            Error::NoEchoFound { .. } => 4,
            Error::UndefinedFidelity { .. } | Error::InsufficientNodes { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}
