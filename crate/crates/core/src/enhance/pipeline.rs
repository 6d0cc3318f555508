use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    apply_mask, beamform, compute_irm, est_mask, estimate_scms, mvdr_weights, steering_vector, Beamformer,
    EnhanceError, Mask, EST_NOISE_PERIOD_MS,
};
use crate::dsp::{istft, stft, AudioBuffer, Spectrogram, StftParams};
use crate::scene::{energy_ratio_db, NoisyObservation};

/// Reference microphone (0-based) for masks and MVDR.
pub const REF_CHANNEL: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnhancementMethod {
    Unprocessed,
    Mask1chIrm,
    Mvdr2chIrm,
    Mvdr2chEst,
}

impl EnhancementMethod {
    pub const ALL: [EnhancementMethod; 4] = [
        EnhancementMethod::Unprocessed,
        EnhancementMethod::Mask1chIrm,
        EnhancementMethod::Mvdr2chIrm,
        EnhancementMethod::Mvdr2chEst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnhancementMethod::Unprocessed => "unprocessed",
            EnhancementMethod::Mask1chIrm => "mask1ch_irm",
            EnhancementMethod::Mvdr2chIrm => "mvdr2ch_irm",
            EnhancementMethod::Mvdr2chEst => "mvdr2ch_est",
        }
    }
}

impl fmt::Display for EnhancementMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for EnhancementMethod {
    type Err = EnhanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| EnhanceError::UnknownMethod(s.to_string()))
    }
}

/// Enhanced reference-channel signal plus component-wise oracle figures.
#[derive(Debug, Clone, PartialEq)]
pub struct Enhanced {
    pub method: EnhancementMethod,
    pub signal: AudioBuffer,
    /// Same processing applied separately to the speech and noise images.
    pub speech_out: AudioBuffer,
    pub noise_out: AudioBuffer,
    pub input_snr_db: f64,
    pub oracle_snr_db: f64,
    pub flagged_frequencies: Vec<usize>,
}

impl Enhanced {
    pub fn report(&self) -> EnhancementReport {
        EnhancementReport {
            method: self.method,
            sample_rate: self.signal.sample_rate(),
            input_snr_db: self.input_snr_db,
            oracle_output_snr_db: self.oracle_snr_db,
            flagged_frequencies: self.flagged_frequencies.clone(),
        }
    }
}

/// Per-utterance JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub method: EnhancementMethod,
    pub sample_rate: u32,
    pub input_snr_db: f64,
    pub oracle_output_snr_db: f64,
    pub flagged_frequencies: Vec<usize>,
}

struct ChannelSpecs {
    mixture: Vec<Spectrogram>,
    speech: Vec<Spectrogram>,
    noise: Vec<Spectrogram>,
}

fn analyse(obs: &NoisyObservation, params: &StftParams, channels: usize) -> Result<ChannelSpecs, EnhanceError> {
    let specs = |buf: &AudioBuffer| -> Result<Vec<Spectrogram>, EnhanceError> {
        (0..channels).map(|i| Ok(stft(&buf.select(i)?, params)?)).collect()
    };
    Ok(ChannelSpecs {
        mixture: specs(&obs.mixture)?,
        speech: specs(&obs.speech_image)?,
        noise: specs(&obs.noise_image)?,
    })
}

fn finish(
    method: EnhancementMethod,
    input_snr_db: f64,
    y: &Spectrogram,
    ys: &Spectrogram,
    yv: &Spectrogram,
    flagged: Vec<usize>,
) -> Result<Enhanced, EnhanceError> {
    let signal = istft(y)?;
    let speech_out = istft(ys)?;
    let noise_out = istft(yv)?;
    let oracle_snr_db = energy_ratio_db(speech_out.channel(0)?, noise_out.channel(0)?);
    Ok(Enhanced {
        method,
        signal,
        speech_out,
        noise_out,
        input_snr_db,
        oracle_snr_db,
        flagged_frequencies: flagged,
    })
}

fn run_mvdr(
    method: EnhancementMethod,
    input_snr_db: f64,
    mask: &Mask,
    s: &ChannelSpecs,
) -> Result<Enhanced, EnhanceError> {
    let scms = estimate_scms(mask, &s.mixture)?;
    let steering = steering_vector(&scms, REF_CHANNEL)?;
    let bf: Beamformer = mvdr_weights(&steering.vectors, &scms, REF_CHANNEL)?;
    let mut flagged = steering.flagged;
    flagged.extend(&bf.flagged);
    flagged.sort_unstable();
    flagged.dedup();
    finish(
        method,
        input_snr_db,
        &beamform(&bf, &s.mixture)?,
        &beamform(&bf, &s.speech)?,
        &beamform(&bf, &s.noise)?,
        flagged,
    )
}

/// Run one enhancement condition on an observation. IRM masks use oracle
/// access to the channel-1 speech and noise images.
pub fn enhance(
    obs: &NoisyObservation,
    method: EnhancementMethod,
    params: &StftParams,
) -> Result<Enhanced, EnhanceError> {
    let input_snr_db = obs.measured_snr_db();
    match method {
        EnhancementMethod::Unprocessed => {
            let pick = |b: &AudioBuffer| b.select(REF_CHANNEL);
            Ok(Enhanced {
                method,
                signal: pick(&obs.mixture)?,
                speech_out: pick(&obs.speech_image)?,
                noise_out: pick(&obs.noise_image)?,
                input_snr_db,
                oracle_snr_db: input_snr_db,
                flagged_frequencies: Vec::new(),
            })
        }
        EnhancementMethod::Mask1chIrm => {
            let s = analyse(obs, params, 1)?;
            let mask = compute_irm(&s.speech[0], &s.noise[0])?;
            finish(
                method,
                input_snr_db,
                &apply_mask(&mask, &s.mixture[0])?,
                &apply_mask(&mask, &s.speech[0])?,
                &apply_mask(&mask, &s.noise[0])?,
                Vec::new(),
            )
        }
        EnhancementMethod::Mvdr2chIrm => {
            check_stereo(obs)?;
            let s = analyse(obs, params, 2)?;
            let mask = compute_irm(&s.speech[REF_CHANNEL], &s.noise[REF_CHANNEL])?;
            run_mvdr(method, input_snr_db, &mask, &s)
        }
        EnhancementMethod::Mvdr2chEst => {
            check_stereo(obs)?;
            let s = analyse(obs, params, 2)?;
            let mask = est_mask(s.mixture[0].frames(), params, obs.sample_rate(), EST_NOISE_PERIOD_MS)?;
            run_mvdr(method, input_snr_db, &mask, &s)
        }
    }
}

fn check_stereo(obs: &NoisyObservation) -> Result<(), EnhanceError> {
    if obs.mixture.channel_count() != 2 {
        return Err(EnhanceError::ChannelCount(obs.mixture.channel_count()));
    }
    Ok(())
}
