use std::f64::consts::PI;

use super::{AudioBuffer, DspError};

/// Taps per polyphase branch, measured at the lower of the two rates.
pub const PROTOTYPE_TAPS: usize = 64;
const KAISER_BETA: f64 = 10.0;
const ROLLOFF: f64 = 0.9;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Rational-ratio resampler with a Kaiser-windowed sinc prototype.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    half_width: usize,
    /// `phases[p]` holds the taps for output positions whose fractional input
    /// offset is `p / up`.
    phases: Vec<Vec<f64>>,
}

impl Resampler {
    pub fn new(from_rate: u32, to_rate: u32) -> Result<Self, DspError> {
        if from_rate == 0 {
            return Err(DspError::InvalidSampleRate(from_rate));
        }
        if to_rate == 0 {
            return Err(DspError::InvalidSampleRate(to_rate));
        }
        let g = gcd(from_rate as u64, to_rate as u64);
        let up = (to_rate as u64 / g) as usize;
        let down = (from_rate as u64 / g) as usize;
        // kernel span in input samples
        let stretch = (from_rate as f64 / to_rate as f64).max(1.0);
        let half_width = ((PROTOTYPE_TAPS / 2) as f64 * stretch).ceil() as usize;
        let cutoff = ROLLOFF * 0.5 * (to_rate as f64 / from_rate as f64).min(1.0);
        let norm = bessel_i0(KAISER_BETA);
        let phases = (0..up)
            .map(|p| {
                let frac = p as f64 / up as f64;
                (0..2 * half_width)
                    .map(|k| {
                        // tap k multiplies input sample floor(pos) - half_width + 1 + k
                        let tau = frac + half_width as f64 - 1.0 - k as f64;
                        let r = tau / half_width as f64;
                        if r.abs() >= 1.0 {
                            return 0.0;
                        }
                        let w = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm;
                        2.0 * cutoff * sinc(2.0 * cutoff * tau) * w
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            up,
            down,
            half_width,
            phases,
        })
    }

    pub fn ratio(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len * self.up).div_ceil(self.down)
    }

    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let n_out = self.output_len(x.len());
        let hw = self.half_width as isize;
        (0..n_out)
            .map(|m| {
                let num = m * self.down;
                let base = (num / self.up) as isize;
                let taps = &self.phases[num % self.up];
                let first = base - hw + 1;
                taps.iter()
                    .enumerate()
                    .filter_map(|(k, h)| {
                        let i = first + k as isize;
                        (i >= 0 && (i as usize) < x.len()).then(|| h * x[i as usize])
                    })
                    .sum()
            })
            .collect()
    }
}

/// Resample every channel to `target_rate`.
pub fn resample(signal: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer, DspError> {
    if target_rate == 0 {
        return Err(DspError::InvalidSampleRate(target_rate));
    }
    if target_rate == signal.sample_rate() {
        return Ok(signal.clone());
    }
    let r = Resampler::new(signal.sample_rate(), target_rate)?;
    let channels = signal.channels().iter().map(|c| r.process(c)).collect();
    AudioBuffer::new(channels, target_rate)
}
