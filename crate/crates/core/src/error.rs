use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(
        "calibration failed at b = {b}: best deviation {best_deviation_db:.2} dB \
         does not reach the {criterion_db} dB criterion"
    )]
    CalibrationFailure {
        b: u32,
        best_deviation_db: f64,
        criterion_db: f64,
    },

    #[error("singular channel: Gram matrix condition number {condition:.3e}")]
    SingularChannel { condition: f64 },

    #[error("simulation failed: {0}")]
    SimulationFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
