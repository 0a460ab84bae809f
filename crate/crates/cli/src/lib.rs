//! Experiment runner: flat config files, CSV tables for basis functions, convergence
//! studies, Lebesgue constants and the theoretical constants.

pub mod config;
pub mod run;

pub use config::{Command, ExperimentConfig};
pub use run::{run, run_basis_dump, run_convergence, run_lebesgue, run_theory};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("refused: {0}")]
    Refused(String),

    #[error("numerical failure: {0}")]
    Numerical(fdpr::Error),

    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) | CliError::Output(_) => 3,
            CliError::Refused(_) => 4,
        }
    }
}

impl From<fdpr::Error> for CliError {
    fn from(e: fdpr::Error) -> Self {
        match e {
            fdpr::Error::InvalidArgument(_) | fdpr::Error::UnsupportedAngle(_) => CliError::config(None, e.to_string()),
            fdpr::Error::DivergentSeries(_) => CliError::Refused(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}
