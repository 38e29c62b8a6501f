use std::fmt;
use std::path::Path;

use pathway_core::sim::{ConfigError, SimError};
use pathway_core::{InterventionError, PegError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CONFIG_INVALID: i32 = 2;
    pub const RUNTIME: i32 = 3;
    pub const IO: i32 = 4;
    pub const PARSE: i32 = 5;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    ConfigInvalid(String),
    Runtime(String),
    Io(String),
    Parse(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::ConfigInvalid(_) => exit::CONFIG_INVALID,
            CliError::Runtime(_) => exit::RUNTIME,
            CliError::Io(_) => exit::IO,
            CliError::Parse(_) => exit::PARSE,
        }
    }

    pub fn prefixed(self, path: &Path) -> Self {
        let p = path.display();
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{p}: {m}")),
            CliError::ConfigInvalid(m) => CliError::ConfigInvalid(format!("{p}: {m}")),
            CliError::Runtime(m) => CliError::Runtime(format!("{p}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{p}: {m}")),
            CliError::Parse(m) => CliError::Parse(format!("{p}: {m}")),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn config(path: &Path, err: ConfigError) -> Self {
        match err {
            ConfigError::Parse { .. } => CliError::Parse(format!("{}: {err}", path.display())),
            ConfigError::Invalid { .. } => CliError::ConfigInvalid(format!("{}: {err}", path.display())),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::ConfigInvalid(m) => write!(f, "invalid config: {m}"),
            CliError::Runtime(m) => write!(f, "runtime failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Config(ConfigError::Parse { .. }) => CliError::Parse(err.to_string()),
            SimError::Config(_) => CliError::ConfigInvalid(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

impl From<InterventionError> for CliError {
    fn from(err: InterventionError) -> Self {
        match err {
            InterventionError::InvalidPeg(_) => CliError::Usage(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

impl From<PegError> for CliError {
    fn from(err: PegError) -> Self {
        match err {
            PegError::Csv { .. } => CliError::Parse(err.to_string()),
            PegError::WeightSum(_)
            | PegError::WeightRange { .. }
            | PegError::InvalidModel(_)
            | PegError::MissingFactor(_)
            | PegError::Unordered { .. } => CliError::ConfigInvalid(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}
