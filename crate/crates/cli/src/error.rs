use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<windxai::Error> for CliError {
    fn from(e: windxai::Error) -> Self {
        use windxai::Error as E;
        let msg = e.to_string();
        match e {
            E::Divergence { .. } | E::NonFinite(_) => CliError::Numerical(msg),
            E::InvalidInput(_) | E::MissingFeature(_) | E::SchemaMismatch { .. } | E::TooManyFeatures(..) => {
                CliError::Usage(msg)
            }
            _ => CliError::Data(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("invalid configuration: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
