use std::sync::OnceLock;

use super::{ServiceError, Stimulus};
use crate::dsp::{resample, AudioBuffer, StftParams, PLAYBACK_RATE, PROCESSING_RATE};
use crate::enhance::enhance;
use crate::scene::{render_scene, synth_babble, synth_word, SceneConfig, SourcePosition};

/// Produces the playback waveform for a planned stimulus.
pub trait StimulusSource: Send + Sync {
    fn render(&self, stimulus: &Stimulus, transcript: &str) -> Result<AudioBuffer, ServiceError>;
}

/// Renders stimuli on demand: synthetic word, room response, babble,
/// enhancement, then resampling to the playback rate.
pub struct SynthStimulusSource {
    pub babble_seed: u64,
    pub babble_talkers: usize,
    pub babble_duration_s: f64,
    /// RMS level of the delivered stimulus.
    pub playback_level_dbfs: f64,
    babble: OnceLock<AudioBuffer>,
}

impl Default for SynthStimulusSource {
    fn default() -> Self {
        Self {
            babble_seed: 0,
            babble_talkers: 16,
            babble_duration_s: 30.0,
            playback_level_dbfs: -26.0,
            babble: OnceLock::new(),
        }
    }
}

impl SynthStimulusSource {
    pub fn with_babble_seed(seed: u64) -> Self {
        Self {
            babble_seed: seed,
            ..Self::default()
        }
    }

    fn babble(&self) -> Result<&AudioBuffer, ServiceError> {
        if let Some(b) = self.babble.get() {
            return Ok(b);
        }
        let b = synth_babble(self.babble_duration_s, self.babble_talkers, PROCESSING_RATE, self.babble_seed)
            .map_err(|e| ServiceError::Render(e.to_string()))?;
        Ok(self.babble.get_or_init(|| b))
    }
}

impl StimulusSource for SynthStimulusSource {
    fn render(&self, stimulus: &Stimulus, transcript: &str) -> Result<AudioBuffer, ServiceError> {
        let err = |e: &dyn std::fmt::Display| ServiceError::Render(e.to_string());
        let word = synth_word(transcript, PROCESSING_RATE).map_err(|e| err(&e))?;
        let position = SourcePosition::preset(stimulus.position_id).map_err(|e| err(&e))?;
        let cfg = SceneConfig::new(position, stimulus.snr_db, stimulus.scene_seed);
        let obs = render_scene(&word, &cfg, self.babble()?).map_err(|e| err(&e))?;
        let out = enhance(&obs, stimulus.method, &StftParams::default()).map_err(|e| err(&e))?;
        let up = resample(&out.signal, PLAYBACK_RATE).map_err(|e| err(&e))?;
        let x = up.channel(0).map_err(|e| err(&e))?;
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if rms == 0.0 {
            return Ok(up);
        }
        let gain = (10f64.powf(self.playback_level_dbfs / 20.0) / rms).min(0.99 / peak);
        Ok(up.scaled(gain))
    }
}
