//! Prompts, model backends and verdict parsing.

mod backend;
mod prompts;
mod verdict;

pub use backend::{
    build_backend, request_digest, BackendError, BackendKind, CompletionBackend, ConfigError, MockBackend,
    MockScript, ModelConfig, RemoteBackend,
};
pub use prompts::{
    render_followup_prompt, render_inference_prompt, render_system_prompt, truncate_body, PromptBundle, PromptError,
    BODY_LIMIT_CHARS, NO_MEDIA_LINE, REPAIR_INSTRUCTION, TRUNCATION_MARKER,
};
pub use verdict::{parse_assessment, Assessment, OverallLabel, VerdictError};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssessError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("model output could not be structured after {attempts} attempt(s): {error}")]
    Parse {
        error: VerdictError,
        attempts: u32,
        raw_output: String,
    },
}

/// Sends `bundle`, parses the answer and, on a parse failure, re-asks up to
/// `max_repair_retries` times with the repair instruction.
pub fn request_assessment(
    backend: &dyn CompletionBackend,
    bundle: &PromptBundle,
    max_repair_retries: u8,
) -> Result<Assessment, AssessError> {
    let mut output = backend.complete(bundle)?;
    let mut attempts = 1;
    loop {
        match parse_assessment(&output) {
            Ok(assessment) => return Ok(assessment),
            Err(error) if attempts > u32::from(max_repair_retries) => {
                return Err(AssessError::Parse {
                    error,
                    attempts,
                    raw_output: output,
                })
            }
            Err(_) => {
                output = backend.complete(&bundle.repair(&output))?;
                attempts += 1;
            }
        }
    }
}
