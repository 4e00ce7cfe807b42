use thiserror::Error;

/// Failures that stop a command before a report is written.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] medsens::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("output: {0}")]
    Output(String),
    #[error("bootstrap: replicate {replicate} stayed degenerate after {attempts} draws ({last})")]
    DegenerateResample {
        replicate: usize,
        attempts: usize,
        last: medsens::Error,
    },
    #[error("internal check failed: {0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 4,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// How a command that produced a report finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A requested partner parameter does not exist.
    Infeasible,
    /// An oracle check failed; the report was still written.
    Violation,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Infeasible => 3,
            Status::Violation => 4,
        }
    }
}
