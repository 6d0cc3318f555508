use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{synth_ir, SceneConfig, SceneError};
use crate::dsp::{convolve, AudioBuffer};

/// Noise-only lead-in and tail around each word, milliseconds.
pub const NOISE_PAD_MS: f64 = 288.0;

/// Two-channel noisy observation with its oracle components.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyObservation {
    pub mixture: AudioBuffer,
    pub speech_image: AudioBuffer,
    pub noise_image: AudioBuffer,
    pub snr_db: f64,
    pub config: Option<SceneConfig>,
}

impl NoisyObservation {
    /// SNR at the reference channel recomputed from the stored images.
    pub fn measured_snr_db(&self) -> f64 {
        energy_ratio_db(
            self.speech_image.channel(0).unwrap_or(&[]),
            self.noise_image.channel(0).unwrap_or(&[]),
        )
    }

    pub fn sample_rate(&self) -> u32 {
        self.mixture.sample_rate()
    }
}

pub fn energy_ratio_db(signal: &[f64], noise: &[f64]) -> f64 {
    let es: f64 = signal.iter().map(|v| v * v).sum();
    let en: f64 = noise.iter().map(|v| v * v).sum();
    10.0 * (es / en).log10()
}

/// Convolve `clean` with each channel of `ir`, then add the leading part of
/// `noise` scaled so the channel-1 energy ratio over the whole convolved
/// support equals `snr_db`.
pub fn make_observation(
    clean: &AudioBuffer,
    ir: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
) -> Result<NoisyObservation, SceneError> {
    if clean.channel_count() != 1 {
        return Err(SceneError::ChannelCount {
            expected: 1,
            got: clean.channel_count(),
        });
    }
    for buf in [ir, noise] {
        if buf.channel_count() != 2 {
            return Err(SceneError::ChannelCount {
                expected: 2,
                got: buf.channel_count(),
            });
        }
    }
    let rate = clean.sample_rate();
    if ir.sample_rate() != rate || noise.sample_rate() != rate {
        return Err(SceneError::RateMismatch);
    }
    if !snr_db.is_finite() {
        return Err(SceneError::InvalidSnr(snr_db));
    }
    let c = clean.channel(0)?;
    let speech: Vec<Vec<f64>> = ir.channels().iter().map(|h| convolve(c, h)).collect();
    let len = speech[0].len();
    if noise.len() < len {
        return Err(SceneError::NoiseTooShort {
            needed: len,
            got: noise.len(),
        });
    }
    let e_speech: f64 = speech[0].iter().map(|v| v * v).sum();
    if e_speech == 0.0 {
        return Err(SceneError::SilentSpeech);
    }
    let segment = noise.slice(0, len)?;
    let e_noise = segment.energy(0)?;
    if e_noise == 0.0 {
        return Err(SceneError::SilentNoise);
    }
    let gain = (e_speech / (e_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let speech_image = AudioBuffer::new(speech, rate)?;
    let noise_image = segment.scaled(gain);
    let mixture = speech_image.add(&noise_image)?;
    Ok(NoisyObservation {
        mixture,
        speech_image,
        noise_image,
        snr_db,
        config: None,
    })
}

/// Zero-pad a word by [`NOISE_PAD_MS`] on each side.
pub fn pad_word(clean: &AudioBuffer) -> Result<AudioBuffer, SceneError> {
    let pad = (NOISE_PAD_MS / 1000.0 * clean.sample_rate() as f64).round() as usize;
    let chans = clean
        .channels()
        .iter()
        .map(|c| {
            let mut v = vec![0.0; pad];
            v.extend_from_slice(c);
            v.extend(std::iter::repeat_n(0.0, pad));
            v
        })
        .collect();
    Ok(AudioBuffer::new(chans, clean.sample_rate())?)
}

/// Full scene: pad the word, synthesize the room response for the configured
/// position, and cut a noise segment from `babble` at a seeded offset.
pub fn render_scene(
    clean: &AudioBuffer,
    config: &SceneConfig,
    babble: &AudioBuffer,
) -> Result<NoisyObservation, SceneError> {
    config.validate()?;
    let ir = synth_ir(
        &config.position,
        config.mic_spacing_cm,
        config.reverb_time_s,
        clean.sample_rate(),
        config.seed,
    )?;
    render_scene_with_ir(clean, config, &ir, babble)
}

/// As [`render_scene`] with a caller-supplied (for example measured) response.
pub fn render_scene_with_ir(
    clean: &AudioBuffer,
    config: &SceneConfig,
    ir: &AudioBuffer,
    babble: &AudioBuffer,
) -> Result<NoisyObservation, SceneError> {
    let padded = pad_word(clean)?;
    let needed = padded.len() + ir.len() - 1;
    if babble.len() < needed {
        return Err(SceneError::NoiseTooShort {
            needed,
            got: babble.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let offset = rng.random_range(0..=babble.len() - needed);
    let segment = babble.slice(offset, needed)?;
    let mut obs = make_observation(&padded, ir, &segment, config.snr_db)?;
    obs.config = Some(*config);
    Ok(obs)
}
