use std::fmt;

use scalespace::{Error, ErrorClass};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Ingest(String),
    NonUniformSampling(String),
    NotTransient { edge: f64, scale: f64 },
    Output(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Ingest(_) | CliError::NonUniformSampling(_) | CliError::NotTransient { .. } => 3,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Budget => 4,
                ErrorClass::Topology => 5,
                ErrorClass::Unresolved => 6,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Ingest(m) => write!(f, "ingestion error: {m}"),
            CliError::NonUniformSampling(m) => write!(f, "non-uniform sampling: {m}"),
            CliError::NotTransient { edge, scale } => {
                write!(f, "signal is not transient: edge magnitude {edge:e} exceeds 1e-10 x scale {scale:e}")
            }
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
