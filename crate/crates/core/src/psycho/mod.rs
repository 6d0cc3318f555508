//! Answer scoring, psychometric-function fitting, SRT aggregation and
//! simulated listeners.

mod fit;
mod normalize;
mod simulate;
mod summary;
mod tally;

use thiserror::Error;

use crate::enhance::EnhancementMethod;

pub use fit::{fit_psychometric, Bootstrap, FitOptions, PsychFit};
pub use normalize::{normalize_answer, score_answer};
pub use simulate::{
    build_cohort, simulate_tonepip_response, simulate_word_response, CohortSpec, ListenerProfile, SimulatedListener,
};
pub use summary::{srt, summarize, ConditionSummary, SrtEntry};
pub use tally::{tally, ConditionCell, ScoredTrial, Tally};

#[derive(Debug, Error)]
pub enum PsychError {
    #[error("empty reference transcript")]
    EmptyTruth,
    #[error("trial `{trial_id}` has SNR {snr_db} dB, which is not a condition of the design")]
    UnknownCondition { trial_id: String, snr_db: f64 },
    #[error("duplicate trial id `{0}`")]
    DuplicateTrial(String),
    #[error("need at least 2 distinct SNRs with trials, got {0}")]
    InsufficientData(usize),
    #[error("invalid cell at {snr_db} dB: {n_correct} correct of {n_trials}")]
    InvalidCell { snr_db: f64, n_correct: u32, n_trials: u32 },
    #[error("fit did not converge: {0}")]
    NotConverged(String),
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
    #[error("no SRTs to summarize")]
    Empty,
    #[error("listener profile has no condition {0}")]
    UnknownMethod(EnhancementMethod),
    #[error("invalid listener profile: {0}")]
    InvalidProfile(String),
}
