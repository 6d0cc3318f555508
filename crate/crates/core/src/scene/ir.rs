use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{SceneError, SourcePosition, SPEED_OF_SOUND};
use crate::dsp::{read_wav, AudioBuffer};

/// Half-width of the fractional-delay interpolator, samples.
pub const DELAY_KERNEL_HALF_WIDTH: usize = 24;
/// Initial reverberant-tail amplitude relative to a direct path at 1 m.
const TAIL_LEVEL: f64 = 0.05;
/// Broadband coherence between the two channels' tails.
const TAIL_COHERENCE: f64 = 0.5;

/// Hann-windowed sinc interpolator centred on `position` (may be fractional).
fn add_fractional_impulse(out: &mut [f64], position: f64, gain: f64) {
    let hw = DELAY_KERNEL_HALF_WIDTH as f64;
    let first = (position - hw).ceil().max(0.0) as usize;
    let last = ((position + hw).floor() as usize).min(out.len() - 1);
    for (n, slot) in out.iter_mut().enumerate().take(last + 1).skip(first) {
        let x = n as f64 - position;
        let s = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
        let w = 0.5 + 0.5 * (PI * x / hw).cos();
        *slot += gain * s * w;
    }
}

/// Two-channel synthetic room response: geometric direct path with a
/// sub-sample inter-channel delay, then an exponentially decaying noise tail
/// that is 60 dB down at `reverb_time_s`.
pub fn synth_ir(
    position: &SourcePosition,
    mic_spacing_cm: f64,
    reverb_time_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer, SceneError> {
    position.validate()?;
    if !(mic_spacing_cm > 0.0) {
        return Err(SceneError::InvalidGeometry("mic spacing must be positive".into()));
    }
    if !(reverb_time_s >= 0.0) || !reverb_time_s.is_finite() {
        return Err(SceneError::InvalidGeometry(format!(
            "reverb time must be >= 0, got {reverb_time_s}"
        )));
    }
    let fs = sample_rate as f64;
    let distance_m = position.distance_cm / 100.0;
    let half_delay = 0.5 * position.inter_channel_delay_s(mic_spacing_cm) * fs;
    let base = DELAY_KERNEL_HALF_WIDTH as f64 + 1.0 + distance_m / SPEED_OF_SOUND * fs;
    let arrivals = [base - half_delay, base + half_delay];
    let direct_gain = 1.0 / distance_m;

    let tail_len = (reverb_time_s * fs).round() as usize;
    let tail_start = (base + half_delay.abs()).ceil() as usize + 1;
    let len = if tail_len == 0 {
        (base + half_delay.abs()).ceil() as usize + DELAY_KERNEL_HALF_WIDTH + 1
    } else {
        tail_start + tail_len
    };

    let mut channels = vec![vec![0.0; len]; 2];
    for (ch, arrival) in channels.iter_mut().zip(arrivals) {
        add_fractional_impulse(ch, arrival, direct_gain);
    }
    if tail_len > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let decay = 1000f64.ln() / (reverb_time_s * fs);
        let (a, b) = (TAIL_COHERENCE.sqrt(), (1.0 - TAIL_COHERENCE).sqrt());
        for k in 0..tail_len {
            let env = TAIL_LEVEL * (-decay * k as f64).exp();
            let common: f64 = StandardNormal.sample(&mut rng);
            for ch in channels.iter_mut() {
                let own: f64 = StandardNormal.sample(&mut rng);
                ch[tail_start + k] += env * (a * common + b * own);
            }
        }
    }
    Ok(AudioBuffer::new(channels, sample_rate)?)
}

/// A measured two-channel impulse response stored as WAV.
pub fn load_ir(path: impl AsRef<Path>) -> Result<AudioBuffer, SceneError> {
    let ir = read_wav(path)?;
    if ir.channel_count() != 2 {
        return Err(SceneError::ChannelCount {
            expected: 2,
            got: ir.channel_count(),
        });
    }
    Ok(ir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn dft_at(x: &[f64], hz: f64, fs: f64) -> Complex64 {
        x.iter()
            .enumerate()
            .map(|(n, v)| Complex64::from_polar(*v, -2.0 * PI * hz * n as f64 / fs))
            .sum()
    }

    /// Inter-channel delay (ch2 - ch1) from the cross-spectrum phase slope.
    fn measured_delay_samples(ir: &AudioBuffer) -> f64 {
        let fs = 16000.0;
        let hz = 250.0;
        let h1 = dft_at(ir.channel(0).unwrap(), hz, fs);
        let h2 = dft_at(ir.channel(1).unwrap(), hz, fs);
        -(h2 * h1.conj()).arg() / (2.0 * PI * hz) * fs
    }

    #[test]
    fn broadside_has_no_delay() {
        let p = SourcePosition::preset(4).unwrap();
        let ir = synth_ir(&p, 4.0, 0.0, 16000, 1).unwrap();
        assert!(measured_delay_samples(&ir).abs() < 1e-9);
        assert_eq!(ir.channel(0).unwrap(), ir.channel(1).unwrap());
    }

    #[test]
    fn thirty_degrees_gives_fractional_delay() {
        let p = SourcePosition::new(0, 30.0, 100.0).unwrap();
        let ir = synth_ir(&p, 4.0, 0.0, 16000, 1).unwrap();
        let expected: f64 = 0.04 * 0.5 / 343.0 * 16000.0;
        assert!((expected - 0.933).abs() < 1e-3);
        let got = measured_delay_samples(&ir);
        assert!((got - expected).abs() < 0.01, "delay {got} vs {expected}");
    }

    #[test]
    fn zero_reverb_is_direct_path_only() {
        let p = SourcePosition::preset(0).unwrap();
        let ir = synth_ir(&p, 4.0, 0.0, 16000, 3).unwrap();
        let ch = ir.channel(0).unwrap();
        let peak = ch
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        // nothing beyond the interpolation kernel around the arrival
        assert!(ch[peak + DELAY_KERNEL_HALF_WIDTH + 1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tail_decays_sixty_db_over_reverb_time() {
        let p = SourcePosition::preset(4).unwrap();
        let ir = synth_ir(&p, 4.0, 0.36, 16000, 9).unwrap();
        let ch = ir.channel(0).unwrap();
        let n = ch.len();
        let tail = (0.36f64 * 16000.0).round() as usize;
        let start = n - tail;
        let win = 400;
        let energy = |a: usize| ch[a..a + win].iter().map(|v| v * v).sum::<f64>();
        let early = energy(start + 200);
        let late = energy(n - win - 200);
        // windows are (tail - 2*200 - win) samples apart
        let span = (n - win - 200 - (start + 200)) as f64 / 16000.0;
        let expected_drop = 60.0 * span / 0.36;
        let drop = 10.0 * (early / late).log10();
        assert!((drop - expected_drop).abs() < 6.0, "drop {drop} vs {expected_drop}");
    }

    #[test]
    fn deterministic_per_seed() {
        let p = SourcePosition::preset(2).unwrap();
        let a = synth_ir(&p, 4.0, 0.36, 16000, 5).unwrap();
        let b = synth_ir(&p, 4.0, 0.36, 16000, 5).unwrap();
        let c = synth_ir(&p, 4.0, 0.36, 16000, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_geometry() {
        let p = SourcePosition::preset(0).unwrap();
        assert!(synth_ir(&p, 4.0, -0.1, 16000, 0).is_err());
        assert!(synth_ir(&p, 0.0, 0.3, 16000, 0).is_err());
    }
}
