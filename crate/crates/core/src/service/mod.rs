//! Listening-session orchestration: stimulus plans, an event-sourced session
//! state machine, persistence, export and the HTTP API.

mod corpus;
mod export;
pub mod http;
mod plan;
mod session;
mod stimulus;
mod store;

use serde::Serialize;
use thiserror::Error;

pub use corpus::{AnswerRules, Corpus, CorpusEntry, Script};
pub use export::{export_results, AnswerRow, ExportBundle, ResultRow, TonePipRow};
pub use plan::{create_session, PlanOptions, SessionPlan, Stimulus, BLOCK_SIZE, MAIN_STIMULI, WORDS_PER_CELL};
pub use session::{
    AnswerRecord, EventKind, FieldError, Phase, SessionEvent, SessionState, SessionView, StimulusDescriptor,
    VolumeSetting,
};
pub use stimulus::{StimulusSource, SynthStimulusSource};
pub use store::{Clock, SessionStore};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("corpus pool has {available} words of the least familiar rank; {needed} needed")]
    InsufficientCorpus { needed: usize, available: usize },
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("session `{0}` not found")]
    SessionNotFound(String),
    #[error("session `{0}` already exists")]
    SessionExists(String),
    #[error("operation needs phase {expected}, session is in {actual}")]
    PhaseMismatch { expected: String, actual: Phase },
    #[error("cannot move from {from} to {to}")]
    PhaseOrder { from: Phase, to: Phase },
    #[error("phase {0} is not complete: {1}")]
    PhaseIncomplete(Phase, String),
    #[error("session is done")]
    SessionDone,
    #[error("block {0} has been served in full; submit its answers first")]
    AnswersPending(usize),
    #[error("stimulus {0} has not been served")]
    StimulusNotServed(usize),
    #[error("expected answers for block {expected}, got block {got}")]
    WrongBlock { expected: usize, got: usize },
    #[error("block {0} was already accepted")]
    BlockAlreadyAccepted(usize),
    #[error("block {block} is not fully served ({served} of {size})")]
    BlockNotServed { block: usize, served: usize, size: usize },
    #[error("block needs {expected} answers, got {got}")]
    AnswerArity { expected: usize, got: usize },
    #[error("{} answer(s) rejected", .0.len())]
    InvalidAnswers(Vec<FieldError>),
    #[error("{0} Hz is not a screening frequency of this session")]
    TonePipFrequency(u32),
    #[error("pip count {n_pip} outside 0..={max}")]
    TonePipCount { n_pip: u32, max: u32 },
    #[error("tone-pip count for {0} Hz already stored")]
    TonePipDuplicate(u32),
    #[error("{0} session(s) are not done; pass the partial flag to export them")]
    ExportIncomplete(usize),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("corrupt event log {path}: line {line}: {message}")]
    CorruptLog { path: String, line: usize, message: String },
    #[error("stimulus rendering failed: {0}")]
    Render(String),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    /// Stable numeric code for API clients.
    pub fn code(&self) -> u16 {
        match self {
            ServiceError::InsufficientCorpus { .. } => 1001,
            ServiceError::InvalidCorpus(_) => 1002,
            ServiceError::SessionNotFound(_) => 2001,
            ServiceError::SessionExists(_) => 2002,
            ServiceError::PhaseMismatch { .. } => 3001,
            ServiceError::PhaseOrder { .. } => 3002,
            ServiceError::PhaseIncomplete(..) => 3003,
            ServiceError::SessionDone => 4001,
            ServiceError::AnswersPending(_) => 4002,
            ServiceError::StimulusNotServed(_) => 4003,
            ServiceError::WrongBlock { .. } => 5001,
            ServiceError::BlockAlreadyAccepted(_) => 5002,
            ServiceError::BlockNotServed { .. } => 5003,
            ServiceError::AnswerArity { .. } => 5004,
            ServiceError::InvalidAnswers(_) => 5005,
            ServiceError::TonePipFrequency(_) => 6001,
            ServiceError::TonePipCount { .. } => 6002,
            ServiceError::TonePipDuplicate(_) => 6003,
            ServiceError::ExportIncomplete(_) => 7001,
            ServiceError::Io(_) => 8001,
            ServiceError::CorruptLog { .. } => 8002,
            ServiceError::Render(_) => 8003,
            ServiceError::BadRequest(_) => 9000,
        }
    }
}

/// JSON error body returned by the HTTP API.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct ErrorBody {
    pub code: u16,
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldError>,
}

impl From<&ServiceError> for ErrorBody {
    fn from(e: &ServiceError) -> Self {
        ErrorBody {
            code: e.code(),
            error: e.to_string(),
            fields: match e {
                ServiceError::InvalidAnswers(f) => f.clone(),
                _ => Vec::new(),
            },
        }
    }
}
