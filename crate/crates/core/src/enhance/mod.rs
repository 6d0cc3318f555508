//! Time-frequency masking and two-channel MVDR beamforming.

mod beamformer;
pub mod linalg;
mod mask;
mod pipeline;

use thiserror::Error;

use crate::dsp::DspError;

pub use beamformer::{beamform, estimate_scms, loading, mvdr_weights, steering_vector, Beamformer, ScmBank, SteeringEstimate};
pub use mask::{apply_mask, compute_irm, est_mask, Mask, MaskKind, EST_NOISE_PERIOD_MS};
pub use pipeline::{enhance, Enhanced, EnhancementMethod, EnhancementReport, REF_CHANNEL};

#[derive(Debug, Error)]
pub enum EnhanceError {
    #[error("dimension mismatch between mask and spectrogram(s)")]
    DimensionMismatch,
    #[error("mask value {0} outside [0, 1]")]
    MaskOutOfRange(f64),
    #[error("utterance frame span {span_ms:.1} ms is shorter than twice the noise period {noise_period_ms} ms")]
    UtteranceTooShort { span_ms: f64, noise_period_ms: f64 },
    #[error("expected 2 channels, got {0}")]
    ChannelCount(usize),
    #[error("reference channel {0} out of range")]
    RefChannel(usize),
    #[error("spatial covariance at bin {bin} is {what}")]
    ScmInvariant { bin: usize, what: &'static str },
    #[error("unknown enhancement method `{0}`")]
    UnknownMethod(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}
