//! Library half of the `dicke` command: configuration parsing, the
//! subcommands as pure functions returning file contents, and the run
//! manifest.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{run_command, Command, CommandOutput, OutputFile};
pub use config::{parse_config, parse_str, resolve, ConfigFile, Resolved};
pub use manifest::{verify, write_run, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Core(#[from] dicke_core::Error),

    #[error("{0}")]
    Io(String),

    #[error("manifest check failed: {0}")]
    Verify(String),
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for numerical guards, 1 for
    /// I/O and manifest problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) if e.is_numerical_guard() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) | CliError::Verify(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
