use std::fmt;

/// Failures mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an incompatible target/method pair.
    Usage(String),
    /// Unreadable or malformed input files.
    Data(String),
    /// Rank deficiency and other numerical failures.
    Numeric(String),
    Convergence(String),
    /// A gamma model was given a response that is not strictly positive.
    NonPositive(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Convergence(_) => 5,
            CliError::NonPositive(_) => 6,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
            CliError::Convergence(m) => write!(f, "convergence error: {m}"),
            CliError::NonPositive(m) => write!(f, "data error: {m}"),
        }
    }
}

impl From<pivotal::Error> for CliError {
    fn from(e: pivotal::Error) -> Self {
        use pivotal::Error as E;
        match e {
            E::InvalidInput(_) => CliError::Data(e.to_string()),
            E::Convergence { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
