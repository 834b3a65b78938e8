//! Command-line front end: configuration parsing and run orchestration.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_str, ConfigError, RunConfig};
pub use run::{run, Command, Outcome, RunError};

/// Worker count: `NSCH_THREADS` when set, else the configured value.
pub fn thread_count(configured: usize) -> Result<usize, ConfigError> {
    match std::env::var("NSCH_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(ConfigError {
                line: None,
                message: format!("NSCH_THREADS must be a positive integer, got '{s}'"),
            }),
        },
        Err(_) => Ok(configured),
    }
}
