use fracctrl_core::Error as CoreError;

use crate::scenario::{IssueKind, ScenarioError};

/// Process exit codes, one per error class.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const PARSE: u8 = 4;
    pub const CATALOG: u8 = 5;
    pub const INVALID: u8 = 6;
    pub const REQUIREMENT: u8 = 7;
    pub const SOLVER: u8 = 8;
    pub const CONTROLLABILITY: u8 = 9;
    pub const OPTIMIZATION: u8 = 10;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario is incomplete for this command: {0}")]
    Requirement(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Scenario(ScenarioError::Io { .. }) | Self::Io(_) => exit::IO,
            Self::Scenario(ScenarioError::Parse { .. }) => exit::PARSE,
            Self::Scenario(ScenarioError::Invalid(issues)) => {
                if issues.iter().any(|i| i.kind == IssueKind::Catalog) {
                    exit::CATALOG
                } else {
                    exit::INVALID
                }
            }
            Self::Requirement(_) => exit::REQUIREMENT,
            Self::Usage(_) => exit::USAGE,
            Self::Core { source, .. } => match source {
                CoreError::DivergentGrammian(_) | CoreError::ClosedLoopDiverged { .. } | CoreError::Singular(_) => {
                    exit::CONTROLLABILITY
                }
                CoreError::Optimization(_) | CoreError::GridTooLarge(_) => exit::OPTIMIZATION,
                CoreError::Order(_)
                | CoreError::Dimension(_)
                | CoreError::Schedule(_)
                | CoreError::Index { .. }
                | CoreError::ControlShape(_)
                | CoreError::Domain(_) => exit::INVALID,
                _ => exit::SOLVER,
            },
        }
    }
}
