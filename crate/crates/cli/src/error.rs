use std::fmt;

/// Process exit codes: usage and domain problems exit 2, capacity limits 3,
/// failed statistical tests 4, anything else nonzero 1.
#[derive(Debug)]
pub enum CliError {
    Core(bornsim_core::Error),
    Usage(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use bornsim_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Domain(_) | E::Range(_) | E::InsufficientData(_)) => 2,
            CliError::Core(E::Capacity(_)) => 3,
            CliError::Core(E::Contract(_)) => 1,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
        }
    }
}

impl From<bornsim_core::Error> for CliError {
    fn from(e: bornsim_core::Error) -> CliError {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::Json(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
