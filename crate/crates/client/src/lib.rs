//! Batch evaluation against chat-completions style multimodal endpoints.
//!
//! Each question is sent as one request carrying the rendered PNG as a data
//! URL plus the text prompt. Responses are logged verbatim to a run log that
//! is flushed after every answer, so an interrupted run can be resumed.

mod endpoint;
mod evaluate;

pub use endpoint::{
    request_body, AskOutcome, Client, EndpointConfig, EndpointFile, MAX_TOKENS, TEMPERATURE, TOP_P,
};
pub use evaluate::{evaluate_manifest, EvalOptions};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("environment variable {0} not set")]
    MissingEnv(String),
    #[error("endpoint {0:?} is not configured")]
    UnknownEndpoint(String),
    #[error("invalid endpoint config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("run log was written for dataset {log} but the manifest hash is {manifest}")]
    ManifestMismatch { log: String, manifest: String },
    #[error("http client: {0}")]
    Http(String),
    #[error(transparent)]
    Core(#[from] typeprobe_core::Error),
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;
