use std::fmt;

use morag_core::compose::ComposeError;
use morag_core::config::ConfigError;
use morag_core::contrastive::ContrastiveError;
use morag_core::index::IndexError;
use morag_core::metrics::MetricsError;
use morag_core::motion::MotionError;
use morag_core::pipeline::PipelineError;
use morag_core::prompt::PromptError;

pub const USAGE: u8 = 64;
pub const IO: u8 = 2;
pub const MISSING: u8 = 3;
pub const DATA: u8 = 4;

/// A message and the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl fmt::Display) -> Self {
        Self { code, message: message.to_string() }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { code: self.code, message: format!("{what}: {}", self.message) }
    }
}

fn motion_code(e: &MotionError) -> u8 {
    match e {
        MotionError::Io(_) => IO,
        _ => DATA,
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(IO, e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::Syntax { .. } | ConfigError::UnknownKey { .. } | ConfigError::InvalidValue { .. } => USAGE,
            ConfigError::Missing { .. } => MISSING,
            ConfigError::MissingPath { .. } | ConfigError::Io(_) => IO,
        };
        Self::new(code, e)
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        let code = match &e {
            IndexError::Io(_) => IO,
            IndexError::Config(_) => MISSING,
            _ => DATA,
        };
        Self::new(code, e)
    }
}

impl From<MotionError> for Failure {
    fn from(e: MotionError) -> Self {
        Self::new(motion_code(&e), e)
    }
}

impl From<PromptError> for Failure {
    fn from(e: PromptError) -> Self {
        let code = match &e {
            PromptError::InvalidInput(_) | PromptError::InvalidTemplate(_) => USAGE,
            PromptError::Endpoint(_) | PromptError::Io(_) => IO,
            PromptError::Parse { .. } | PromptError::ParseExhausted { .. } | PromptError::Cache { .. } => DATA,
        };
        Self::new(code, e)
    }
}

impl From<ComposeError> for Failure {
    fn from(e: ComposeError) -> Self {
        let code = match &e {
            ComposeError::Io(_) => IO,
            ComposeError::Load { source, .. } | ComposeError::Motion(source) => motion_code(source),
            _ => DATA,
        };
        Self::new(code, e)
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let code = if matches!(e, MetricsError::Io(_)) { IO } else { DATA };
        Self::new(code, e)
    }
}

impl From<ContrastiveError> for Failure {
    fn from(e: ContrastiveError) -> Self {
        let code = if matches!(e, ContrastiveError::Io { .. }) { IO } else { DATA };
        Self::new(code, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::MissingEmbedding { .. } => Self::new(MISSING, e),
            PipelineError::Lookup(_) => Self::new(DATA, e),
            PipelineError::Endpoint(_) | PipelineError::Io(_) => Self::new(IO, e),
            PipelineError::Config(e) => e.into(),
            PipelineError::Prompt(e) => e.into(),
            PipelineError::Index(e) => e.into(),
            PipelineError::Compose(e) => e.into(),
            PipelineError::Metrics(e) => e.into(),
            PipelineError::Motion(e) => e.into(),
        }
    }
}
