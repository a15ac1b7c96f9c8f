use std::fmt;

/// Everything a command can fail with, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Unsupported(String),
    /// The model or a comparison failed a check.
    Check(String),
    Model(seqmodels::Error),
}

impl CliError {
    /// 0 ok, 1 validation, 2 numeric, 3 I/O, parse or unsupported.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Io(_) | CliError::Parse(_) | CliError::Unsupported(_) => 3,
            CliError::Model(seqmodels::Error::InvalidModel(_)) => 1,
            CliError::Model(e) if e.is_numeric() => 2,
            CliError::Model(_) => 3,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Unsupported(_) => "unsupported",
            CliError::Check(_) => "check_failed",
            CliError::Model(e) => e.tag(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Parse(m) | CliError::Unsupported(m) | CliError::Check(m) => {
                f.write_str(m)
            }
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<seqmodels::Error> for CliError {
    fn from(e: seqmodels::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
