use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{synth_ir, SceneError, SourcePosition, DEFAULT_MIC_SPACING_CM, DEFAULT_REVERB_TIME_S};
use crate::dsp::{convolve, AudioBuffer};

/// Output level of [`synth_babble`], dBFS RMS over both channels.
pub const BABBLE_LEVEL_DBFS: f64 = -20.0;

/// One talker: white noise shaped toward the long-term speech spectrum,
/// gated by a syllable-rate envelope with pauses.
fn talker_stream(len: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let hp = (-2.0 * PI * 100.0 / fs).exp();
    let lp = (-2.0 * PI * 600.0 / fs).exp();
    let (mut hp_state, mut hp_prev, mut lp_state) = (0.0, 0.0, 0.0);
    let mut carrier = Vec::with_capacity(len);
    for _ in 0..len {
        let w: f64 = StandardNormal.sample(rng);
        hp_state = hp * (hp_state + w - hp_prev);
        hp_prev = w;
        lp_state = lp * lp_state + (1.0 - lp) * hp_state;
        carrier.push(lp_state);
    }

    let mut envelope = vec![0.0; len];
    let mut pos = (rng.random_range(0.0..0.3) * fs) as usize;
    while pos < len {
        if rng.random_bool(0.2) {
            pos += (rng.random_range(0.1..0.4) * fs) as usize;
            continue;
        }
        let dur = (rng.random_range(0.12..0.25) * fs) as usize;
        let amp = rng.random_range(0.3..1.0);
        for k in 0..dur.min(len - pos) {
            envelope[pos + k] = amp * (PI * k as f64 / dur as f64).sin().powi(2);
        }
        pos += dur;
    }
    carrier.iter().zip(envelope).map(|(c, e)| c * e).collect()
}

/// Multi-talker babble at two microphones: `n_talkers` independent
/// speech-like streams, each convolved with a synthetic room response from a
/// random position, summed and normalized to [`BABBLE_LEVEL_DBFS`].
pub fn synth_babble(
    duration_s: f64,
    n_talkers: usize,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer, SceneError> {
    if n_talkers == 0 {
        return Err(SceneError::NoTalkers);
    }
    if !(duration_s > 0.0) {
        return Err(SceneError::InvalidDuration(duration_s));
    }
    let fs = sample_rate as f64;
    let len = (duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mix = vec![vec![0.0; len]; 2];
    for talker in 0..n_talkers {
        let position = SourcePosition::new(
            100 + talker,
            rng.random_range(-180.0..180.0),
            rng.random_range(150.0..500.0),
        )?;
        let ir = synth_ir(
            &position,
            DEFAULT_MIC_SPACING_CM,
            DEFAULT_REVERB_TIME_S,
            sample_rate,
            rng.random(),
        )?;
        // run the stream past the IR length so the output starts in steady state
        let lead = ir.len();
        let stream = talker_stream(len + lead, fs, &mut rng);
        for (out, h) in mix.iter_mut().zip(ir.channels()) {
            let wet = convolve(&stream, h);
            for (o, w) in out.iter_mut().zip(&wet[lead..lead + len]) {
                *o += w;
            }
        }
    }
    let ms = mix.iter().flatten().map(|v| v * v).sum::<f64>() / (2 * len) as f64;
    if ms == 0.0 {
        return Err(SceneError::SilentNoise);
    }
    let gain = 10f64.powf(BABBLE_LEVEL_DBFS / 20.0) / ms.sqrt();
    for v in mix.iter_mut().flatten() {
        *v *= gain;
    }
    Ok(AudioBuffer::new(mix, sample_rate)?)
}
