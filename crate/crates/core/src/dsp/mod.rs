//! Audio containers, STFT/ISTFT, resampling, convolution, level measurement
//! and WAV I/O. Everything here is a pure function of its inputs.

mod audio;
mod conv;
mod resample;
mod stft;
mod wav;

pub use audio::{db_to_amplitude, rms_db, rms_db_slice, AudioBuffer, Level};
pub use conv::convolve;
pub use resample::{resample, Resampler, PROTOTYPE_TAPS};
pub use stft::{istft, stft, Spectrogram, StftParams, Window};
pub use wav::{read_wav, read_wav_bytes, wav_bytes, write_wav, PcmFormat};

/// Processing rate for all enhancement.
pub const PROCESSING_RATE: u32 = 16_000;
/// Browser playback rate.
pub const PLAYBACK_RATE: u32 = 48_000;

#[derive(Debug, thiserror::Error)]
pub enum DspError {
    #[error("invalid sample rate {0}")]
    InvalidSampleRate(u32),
    #[error("buffer has no channels")]
    NoChannels,
    #[error("channels differ in length")]
    RaggedChannels,
    #[error("non-finite sample")]
    NonFinite,
    #[error("channel {index} out of range ({count} channels)")]
    ChannelOutOfRange { index: usize, count: usize },
    #[error("sample rates differ: {0} vs {1}")]
    RateMismatch(u32, u32),
    #[error("shape mismatch")]
    ShapeMismatch,
    #[error("expected mono input, got {0} channels")]
    NotMono(usize),
    #[error("empty signal")]
    Empty,
    #[error("signal too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid STFT parameters: {0}")]
    InvalidStft(String),
    #[error("unsupported WAV format: {0}")]
    UnsupportedWav(String),
    #[error(transparent)]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
