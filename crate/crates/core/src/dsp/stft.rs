use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{AudioBuffer, DspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: Window,
}

impl Default for StftParams {
    /// 32 ms Hann frames at 16 kHz with 50% overlap.
    fn default() -> Self {
        Self {
            window_length: 512,
            hop: 256,
            fft_size: 512,
            window: Window::Hann,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |why: &str| Err(DspError::InvalidStft(why.to_string()));
        if self.hop == 0 || self.window_length == 0 {
            return bad("hop and window length must be positive");
        }
        if !(self.hop <= self.window_length && self.window_length <= self.fft_size) {
            return bad("need hop <= window_length <= fft_size");
        }
        if !self.fft_size.is_multiple_of(2) {
            return bad("fft_size must be even");
        }
        // constant overlap-add
        let cola = match self.window {
            Window::Hann => {
                self.window_length.is_multiple_of(2)
                    && (self.window_length / 2).is_multiple_of(self.hop)
            }
            Window::Rectangular => self.window_length.is_multiple_of(self.hop),
        };
        if !cola {
            return bad("window/hop pair does not satisfy constant overlap-add");
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Zero padding applied before the first sample so frame `t` is centred on
    /// sample `t * hop`.
    pub fn lead_padding(&self) -> usize {
        self.window_length / 2
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        signal_len.div_ceil(self.hop) + 1
    }

    /// Centre of frame `t`, in samples of the original signal.
    pub fn frame_center(&self, t: usize) -> usize {
        t * self.hop
    }
}

/// Complex T x F grid, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex64>,
    frames: usize,
    bins: usize,
    params: StftParams,
    sample_rate: u32,
    signal_len: usize,
}

impl Spectrogram {
    pub fn from_parts(
        data: Vec<Complex64>,
        frames: usize,
        params: StftParams,
        sample_rate: u32,
        signal_len: usize,
    ) -> Result<Self, DspError> {
        params.validate()?;
        let bins = params.bin_count();
        if frames == 0 || data.len() != frames * bins {
            return Err(DspError::ShapeMismatch);
        }
        if params.frame_count(signal_len) != frames {
            return Err(DspError::ShapeMismatch);
        }
        Ok(Self {
            data,
            frames,
            bins,
            params,
            sample_rate,
            signal_len,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.data[t * self.bins + f]
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn same_shape(&self, other: &Spectrogram) -> bool {
        self.frames == other.frames
            && self.bins == other.bins
            && self.params == other.params
            && self.sample_rate == other.sample_rate
            && self.signal_len == other.signal_len
    }

    /// New spectrogram with this one's geometry and the given bins.
    pub fn with_data(&self, data: Vec<Complex64>) -> Result<Spectrogram, DspError> {
        if data.len() != self.data.len() {
            return Err(DspError::ShapeMismatch);
        }
        Ok(Spectrogram {
            data,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &Spectrogram) -> Result<Spectrogram, DspError> {
        if !self.same_shape(other) {
            return Err(DspError::ShapeMismatch);
        }
        self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect())
    }
}

fn check_mono(signal: &AudioBuffer) -> Result<&[f64], DspError> {
    if signal.channel_count() != 1 {
        return Err(DspError::NotMono(signal.channel_count()));
    }
    signal.channel(0)
}

pub fn stft(signal: &AudioBuffer, params: &StftParams) -> Result<Spectrogram, DspError> {
    params.validate()?;
    let x = check_mono(signal)?;
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    if x.len() < params.window_length {
        return Err(DspError::TooShort {
            needed: params.window_length,
            got: x.len(),
        });
    }
    let window = params.window.coefficients(params.window_length);
    let frames = params.frame_count(x.len());
    let bins = params.bin_count();
    let lead = params.lead_padding();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(params.fft_size);

    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex64::default(); params.fft_size];
    for t in 0..frames {
        buf.fill(Complex64::default());
        let start = (t * params.hop) as isize - lead as isize;
        for (n, w) in window.iter().enumerate() {
            let idx = start + n as isize;
            if idx >= 0 && (idx as usize) < x.len() {
                buf[n] = Complex64::new(x[idx as usize] * w, 0.0);
            }
        }
        fft.process(&mut buf);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(Spectrogram {
        data,
        frames,
        bins,
        params: *params,
        sample_rate: signal.sample_rate(),
        signal_len: x.len(),
    })
}

/// Weighted overlap-add resynthesis; inverts [`stft`] exactly for unmodified
/// spectrograms.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer, DspError> {
    let p = spec.params;
    p.validate()?;
    if spec.bins != p.bin_count()
        || spec.frames != p.frame_count(spec.signal_len)
        || spec.data.len() != spec.frames * spec.bins
    {
        return Err(DspError::ShapeMismatch);
    }
    let window = p.window.coefficients(p.window_length);
    let lead = p.lead_padding();
    let padded_len = (spec.frames - 1) * p.hop + p.window_length;
    let mut out = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(p.fft_size);
    let mut buf = vec![Complex64::default(); p.fft_size];
    let scale = 1.0 / p.fft_size as f64;

    for t in 0..spec.frames {
        let frame = spec.frame(t);
        buf[..spec.bins].copy_from_slice(frame);
        // Hermitian extension for a real result
        for k in 1..p.fft_size - spec.bins + 1 {
            buf[p.fft_size - k] = frame[k].conj();
        }
        buf[0].im = 0.0;
        buf[p.fft_size / 2].im = 0.0;
        ifft.process(&mut buf);
        let start = t * p.hop;
        for (n, w) in window.iter().enumerate() {
            out[start + n] += buf[n].re * scale * w;
            norm[start + n] += w * w;
        }
    }
    let samples = (0..spec.signal_len)
        .map(|i| {
            let j = i + lead;
            if norm[j] > 1e-12 {
                out[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect();
    AudioBuffer::mono(samples, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn rel_rms_err(a: &[f64], b: &[f64]) -> f64 {
        let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let s: f64 = b.iter().map(|y| y * y).sum();
        (e / s).sqrt()
    }

    #[test]
    fn params_validation() {
        assert!(StftParams::default().validate().is_ok());
        let mut p = StftParams {
            hop: 200,
            ..StftParams::default()
        };
        assert!(p.validate().is_err());
        p.hop = 600;
        assert!(p.validate().is_err());
        let p = StftParams {
            window_length: 512,
            hop: 128,
            fft_size: 1024,
            window: Window::Hann,
        };
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_short_and_stereo() {
        let p = StftParams::default();
        let short = AudioBuffer::mono(vec![0.0; 100], 16000).unwrap();
        assert!(matches!(stft(&short, &p), Err(DspError::TooShort { .. })));
        let stereo = AudioBuffer::silence(2, 2000, 16000).unwrap();
        assert!(matches!(stft(&stereo, &p), Err(DspError::NotMono(2))));
    }

    #[test]
    fn zeros_in_zeros_out() {
        let p = StftParams::default();
        let z = AudioBuffer::silence(1, 16000, 16000).unwrap();
        let s = stft(&z, &p).unwrap();
        assert!(s.data().iter().all(|c| c.norm() == 0.0));
        let y = istft(&s).unwrap();
        assert!(y.channel(0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_at_frame_center_is_flat() {
        let p = StftParams::default();
        let mut x = vec![0.0; 4096];
        x[0] = 1.0; // frame 0 is centred on sample 0
        let s = stft(&AudioBuffer::mono(x, 16000).unwrap(), &p).unwrap();
        let w_center = p.window.coefficients(p.window_length)[p.window_length / 2];
        for f in 0..s.bins() {
            assert_abs_diff_eq!(s.get(0, f).norm(), w_center, epsilon = 1e-12);
        }
    }

    #[test]
    fn sine_energy_concentrates_at_bin_32() {
        let p = StftParams::default();
        let x: Vec<f64> = (0..16000)
            .map(|n| (2.0 * PI * 1000.0 * n as f64 / 16000.0).sin())
            .collect();
        let s = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &p).unwrap();
        let w = p.window.coefficients(512);
        // interior frames only (no zero padding inside)
        for t in 2..s.frames() - 2 {
            // direct DFT oracle on the same windowed segment
            let start = t * p.hop - p.lead_padding();
            let seg: Vec<f64> = (0..512).map(|n| x[start + n] * w[n]).collect();
            let mut total = 0.0;
            let mut near = 0.0;
            for f in 0..s.bins() {
                let mut acc = Complex64::default();
                for (n, v) in seg.iter().enumerate() {
                    acc += Complex64::from_polar(*v, -2.0 * PI * (f * n) as f64 / 512.0);
                }
                assert_abs_diff_eq!(acc.re, s.get(t, f).re, epsilon = 1e-9);
                assert_abs_diff_eq!(acc.im, s.get(t, f).im, epsilon = 1e-9);
                let e = acc.norm_sqr();
                total += e;
                if (30..=34).contains(&f) {
                    near += e;
                }
            }
            assert!(near / total >= 0.99, "frame {t}: {}", near / total);
        }
    }

    #[test]
    fn round_trip_random() {
        let p = StftParams::default();
        for seed in 0..5 {
            let x = noise(16000 + seed as usize * 37, seed);
            let s = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &p).unwrap();
            let y = istft(&s).unwrap();
            assert!(rel_rms_err(y.channel(0).unwrap(), &x) < 1e-6);
        }
    }

    #[test]
    fn round_trip_other_geometries() {
        for p in [
            StftParams { window_length: 256, hop: 64, fft_size: 512, window: Window::Hann },
            StftParams { window_length: 320, hop: 160, fft_size: 320, window: Window::Rectangular },
        ] {
            let x = noise(5000, 9);
            let s = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &p).unwrap();
            let y = istft(&s).unwrap();
            assert!(rel_rms_err(y.channel(0).unwrap(), &x) < 1e-6);
        }
    }

    #[test]
    fn parseval_per_frame() {
        let p = StftParams::default();
        let x = noise(8000, 3);
        let s = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &p).unwrap();
        let w = p.window.coefficients(512);
        for t in 0..s.frames() {
            let start = (t * p.hop) as isize - p.lead_padding() as isize;
            let seg_energy: f64 = (0..512)
                .map(|n| {
                    let i = start + n as isize;
                    if i >= 0 && (i as usize) < x.len() {
                        (x[i as usize] * w[n]).powi(2)
                    } else {
                        0.0
                    }
                })
                .sum();
            let frame = s.frame(t);
            let spec_energy: f64 = frame
                .iter()
                .enumerate()
                .map(|(f, c)| {
                    let weight = if f == 0 || f == 256 { 1.0 } else { 2.0 };
                    weight * c.norm_sqr()
                })
                .sum::<f64>()
                / 512.0;
            if seg_energy > 0.0 {
                assert!((spec_energy - seg_energy).abs() / seg_energy < 1e-6);
            }
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let p = StftParams::default();
        let s = stft(&AudioBuffer::mono(noise(2000, 1), 16000).unwrap(), &p).unwrap();
        assert!(s.with_data(vec![Complex64::default(); 3]).is_err());
        assert!(Spectrogram::from_parts(vec![Complex64::default(); 257], 1, p, 16000, 2000).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn linearity(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let p = StftParams::default();
            let x = noise(3000, seed);
            let y = noise(3000, seed + 7919);
            let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let sx = stft(&AudioBuffer::mono(x, 16000).unwrap(), &p).unwrap();
            let sy = stft(&AudioBuffer::mono(y, 16000).unwrap(), &p).unwrap();
            let sz = stft(&AudioBuffer::mono(z, 16000).unwrap(), &p).unwrap();
            for ((cx, cy), cz) in sx.data().iter().zip(sy.data()).zip(sz.data()) {
                let expect = cx * a + cy * b;
                prop_assert!((expect - cz).norm() < 1e-9);
            }
        }

        #[test]
        fn round_trip_any_length(len in 512usize..6000, seed in 0u64..1000) {
            let p = StftParams::default();
            let x = noise(len, seed);
            let s = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &p).unwrap();
            let y = istft(&s).unwrap();
            prop_assert!(rel_rms_err(y.channel(0).unwrap(), &x) < 1e-6);
        }
    }
}
