use thiserror::Error;

pub type Result<T, E = QlbmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QlbmError {
    /// Qubit index, register size or field length does not fit the layout.
    #[error("layout error: {0}")]
    Layout(String),

    /// Input outside the mathematical domain of an operation (negative density, zero mass, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Velocity outside the range where a collision angle is defined.
    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// The state is not in the form an operation expects (e.g. `f`-register not reset).
    #[error("state error: {0}")]
    State(String),

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl QlbmError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            QlbmError::Degeneracy(_) => 3,
            QlbmError::Io { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        QlbmError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
