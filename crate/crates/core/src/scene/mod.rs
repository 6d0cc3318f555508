//! Two-channel noisy observations `x = h * c + v` built from synthetic words,
//! synthetic room responses and multi-talker babble at exact SNRs.

mod babble;
mod geometry;
mod ir;
mod manifest;
mod mix;
pub mod word;

pub use babble::{synth_babble, BABBLE_LEVEL_DBFS};
pub use geometry::{
    SceneConfig, SourcePosition, DEFAULT_MIC_SPACING_CM, DEFAULT_REVERB_TIME_S, SNR_GRID_DB,
    SPEED_OF_SOUND,
};
pub use ir::{load_ir, synth_ir, DELAY_KERNEL_HALF_WIDTH};
pub use manifest::{BabbleSpec, SceneEntry, SceneManifest};
pub use mix::{
    energy_ratio_db, make_observation, pad_word, render_scene, render_scene_with_ir,
    NoisyObservation, NOISE_PAD_MS,
};
pub use word::{synth_word, synthetic_lexicon};

use crate::dsp::DspError;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("unknown source position {0}")]
    UnknownPosition(usize),
    #[error("invalid SNR {0}")]
    InvalidSnr(f64),
    #[error("expected {expected} channels, got {got}")]
    ChannelCount { expected: usize, got: usize },
    #[error("sample rates differ")]
    RateMismatch,
    #[error("noise too short: need {needed} samples, got {got}")]
    NoiseTooShort { needed: usize, got: usize },
    #[error("clean speech is silent")]
    SilentSpeech,
    #[error("noise is silent; no finite gain reaches the target SNR")]
    SilentNoise,
    #[error("babble needs at least one talker")]
    NoTalkers,
    #[error("invalid duration {0}")]
    InvalidDuration(f64),
    #[error("cannot parse transcript {0:?}")]
    BadTranscript(String),
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
