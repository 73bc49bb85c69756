use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Input,
    Precondition,
    Llm,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: malformed JSON: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid ontology: {0}")]
    Ontology(String),

    #[error("unknown event type `{0}`")]
    UnknownEventType(String),

    #[error("instance {instance_id}: {message}")]
    Instance { instance_id: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("guideline error: {0}")]
    Guideline(String),

    #[error("guideline generation for `{event_type}` failed after {attempts} attempt(s): {last_error}")]
    GenerationFailed {
        event_type: String,
        attempts: usize,
        last_error: String,
        raw_response: String,
    },

    #[error("LLM endpoint: {0}")]
    Llm(#[from] crate::llmgate::GateError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn instance(instance_id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Instance {
            instance_id: instance_id.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Csv(_) => ErrorKind::Io,
            Error::Json { .. }
            | Error::Ontology(_)
            | Error::UnknownEventType(_)
            | Error::Instance { .. }
            | Error::Guideline(_) => ErrorKind::Input,
            Error::Precondition(_) => ErrorKind::Precondition,
            Error::GenerationFailed { .. } | Error::Llm(_) => ErrorKind::Llm,
        }
    }
}
