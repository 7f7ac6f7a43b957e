//! Failure classes of the command-line tools and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    /// Malformed or inconsistent input.
    #[error("configuration error: {0:#}")]
    Config(anyhow::Error),
    /// The inputs parse but violate a mathematical precondition.
    #[error("precondition failed: {0}")]
    Precondition(#[from] coupled_levy_core::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Precondition(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<coupled_levy_core::Error>() {
            Ok(core) => Failure::Precondition(core),
            Err(e) => Failure::Config(e),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
