use serde::{Deserialize, Serialize};

use super::EnhanceError;
use crate::dsp::{Spectrogram, StftParams};

/// Length of the noise-only period assumed at each end of an utterance.
pub const EST_NOISE_PERIOD_MS: f64 = 288.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Irm,
    Est,
    Ones,
    Custom,
}

/// Real T x F gain grid with every value in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    values: Vec<f64>,
    frames: usize,
    bins: usize,
    kind: MaskKind,
}

impl Mask {
    pub fn new(values: Vec<f64>, frames: usize, bins: usize, kind: MaskKind) -> Result<Self, EnhanceError> {
        if values.len() != frames * bins {
            return Err(EnhanceError::DimensionMismatch);
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(EnhanceError::MaskOutOfRange(*v));
        }
        Ok(Self {
            values,
            frames,
            bins,
            kind,
        })
    }

    pub fn ones(frames: usize, bins: usize) -> Self {
        Self {
            values: vec![1.0; frames * bins],
            frames,
            bins,
            kind: MaskKind::Ones,
        }
    }

    pub fn constant(frames: usize, bins: usize, value: f64) -> Result<Self, EnhanceError> {
        Self::new(vec![value; frames * bins], frames, bins, MaskKind::Custom)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.bins + f]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn matches(&self, spec: &Spectrogram) -> bool {
        self.frames == spec.frames() && self.bins == spec.bins()
    }
}

/// Ideal ratio mask `sqrt(|s|^2 / (|s|^2 + |v|^2))` from the reference-channel
/// speech and noise images. Bins where both are zero get 0.
pub fn compute_irm(speech: &Spectrogram, noise: &Spectrogram) -> Result<Mask, EnhanceError> {
    if !speech.same_shape(noise) {
        return Err(EnhanceError::DimensionMismatch);
    }
    let values = speech
        .data()
        .iter()
        .zip(noise.data())
        .map(|(s, v)| {
            let ps = s.norm_sqr();
            let total = ps + v.norm_sqr();
            if total == 0.0 {
                0.0
            } else {
                (ps / total).sqrt()
            }
        })
        .collect();
    Mask::new(values, speech.frames(), speech.bins(), MaskKind::Irm)
}

/// `y_tf = M_tf x_tf`; phase is untouched.
pub fn apply_mask(mask: &Mask, spec: &Spectrogram) -> Result<Spectrogram, EnhanceError> {
    if !mask.matches(spec) {
        return Err(EnhanceError::DimensionMismatch);
    }
    Ok(spec.with_data(spec.data().iter().zip(&mask.values).map(|(x, m)| x * *m).collect())?)
}

/// Noise-period mask: 0 for frames whose centres lie within `noise_period_ms`
/// of either end of the frame-centre span, 1 elsewhere, constant across
/// frequency.
pub fn est_mask(
    frame_count: usize,
    params: &StftParams,
    sample_rate: u32,
    noise_period_ms: f64,
) -> Result<Mask, EnhanceError> {
    params.validate()?;
    if frame_count == 0 {
        return Err(EnhanceError::DimensionMismatch);
    }
    let bins = params.bin_count();
    if noise_period_ms <= 0.0 {
        return Ok(Mask {
            kind: MaskKind::Est,
            ..Mask::ones(frame_count, bins)
        });
    }
    let period = noise_period_ms / 1000.0 * sample_rate as f64;
    let last_center = params.frame_center(frame_count - 1) as f64;
    if last_center < 2.0 * period {
        return Err(EnhanceError::UtteranceTooShort {
            span_ms: last_center / sample_rate as f64 * 1000.0,
            noise_period_ms,
        });
    }
    let mut values = Vec::with_capacity(frame_count * bins);
    for t in 0..frame_count {
        let c = params.frame_center(t) as f64;
        let noise = c < period || c > last_center - period;
        values.extend(std::iter::repeat_n(if noise { 0.0 } else { 1.0 }, bins));
    }
    Mask::new(values, frame_count, bins, MaskKind::Est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft, AudioBuffer};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn spec_from(values: Vec<Complex64>) -> Spectrogram {
        // one frame of a 512-point transform covering a 512-sample signal
        let p = StftParams::default();
        let frames = p.frame_count(512);
        let mut data = vec![Complex64::default(); frames * p.bin_count()];
        data[..values.len()].copy_from_slice(&values);
        Spectrogram::from_parts(data, frames, p, 16000, 512).unwrap()
    }

    #[test]
    fn irm_reference_values() {
        let s = spec_from(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(1.0, 0.0)]);
        let v = spec_from(vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), Complex64::new(3f64.sqrt(), 0.0)]);
        let m = compute_irm(&s, &v).unwrap();
        assert!((m.get(0, 0) - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(m.get(0, 1), 1.0);
        assert!((m.get(0, 2) - 0.5).abs() < 1e-12);
        // both silent
        assert_eq!(m.get(0, 3), 0.0);
        assert_eq!(m.kind(), MaskKind::Irm);
    }

    #[test]
    fn irm_dimension_mismatch() {
        let p = StftParams::default();
        let a = stft(&AudioBuffer::mono(vec![0.1; 600], 16000).unwrap(), &p).unwrap();
        let b = stft(&AudioBuffer::mono(vec![0.1; 2000], 16000).unwrap(), &p).unwrap();
        assert!(matches!(compute_irm(&a, &b), Err(EnhanceError::DimensionMismatch)));
        let m = Mask::ones(1, 257);
        assert!(apply_mask(&m, &a).is_err());
    }

    #[test]
    fn mask_rejects_out_of_range() {
        assert!(Mask::new(vec![1.2], 1, 1, MaskKind::Custom).is_err());
        assert!(Mask::new(vec![0.5, 0.5], 1, 1, MaskKind::Custom).is_err());
    }

    #[test]
    fn ones_and_zeros() {
        let p = StftParams::default();
        let x: Vec<f64> = (0..3000).map(|i| (i as f64 * 0.01).sin()).collect();
        let s = stft(&AudioBuffer::mono(x, 16000).unwrap(), &p).unwrap();
        let same = apply_mask(&Mask::ones(s.frames(), s.bins()), &s).unwrap();
        assert_eq!(same, s);
        let zero = apply_mask(&Mask::constant(s.frames(), s.bins(), 0.0).unwrap(), &s).unwrap();
        assert!(zero.data().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn est_first_eighteen_frames() {
        let p = StftParams::default();
        // 2 s of frames
        let t = p.frame_count(32000);
        let m = est_mask(t, &p, 16000, 288.0).unwrap();
        let zero_frames: Vec<usize> = (0..t).filter(|i| m.get(*i, 0) == 0.0).collect();
        assert_eq!(&zero_frames[..18], &(0..18).collect::<Vec<_>>()[..]);
        assert_eq!(m.get(18, 0), 1.0);
        assert_eq!(zero_frames.len(), 36);
        for tt in 0..t {
            let row = &m.values()[tt * m.bins()..(tt + 1) * m.bins()];
            assert!(row.iter().all(|v| *v == row[0]));
        }
    }

    #[test]
    fn est_zero_period_and_too_short() {
        let p = StftParams::default();
        let m = est_mask(10, &p, 16000, 0.0).unwrap();
        assert!(m.values().iter().all(|v| *v == 1.0));
        assert!(matches!(
            est_mask(20, &p, 16000, 288.0),
            Err(EnhanceError::UtteranceTooShort { .. })
        ));
    }

    proptest! {
        #[test]
        fn est_is_time_symmetric(frames in 37usize..400, period in 0.0f64..288.0) {
            let p = StftParams::default();
            let m = est_mask(frames, &p, 16000, period).unwrap();
            for t in 0..frames {
                prop_assert_eq!(m.get(t, 0), m.get(frames - 1 - t, 0));
            }
        }

        #[test]
        fn irm_in_range_and_complementary(
            sr in -10.0f64..10.0, si in -10.0f64..10.0, vr in -10.0f64..10.0, vi in -10.0f64..10.0
        ) {
            let s = spec_from(vec![Complex64::new(sr, si)]);
            let v = spec_from(vec![Complex64::new(vr, vi)]);
            let m = compute_irm(&s, &v).unwrap().get(0, 0);
            let mn = compute_irm(&v, &s).unwrap().get(0, 0);
            prop_assert!((0.0..=1.0).contains(&m));
            if s.get(0, 0).norm() + v.get(0, 0).norm() > 0.0 {
                prop_assert!((m * m + mn * mn - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn masking_distributes_over_sum(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = StftParams::default();
            let mut sig = || AudioBuffer::mono((0..1500).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000).unwrap();
            let (a, b) = (sig(), sig());
            let sa = stft(&a, &p).unwrap();
            let sb = stft(&b, &p).unwrap();
            let m = compute_irm(&sa, &sb).unwrap();
            let lhs = apply_mask(&m, &sa.add(&sb).unwrap()).unwrap();
            let rhs = apply_mask(&m, &sa).unwrap().add(&apply_mask(&m, &sb).unwrap()).unwrap();
            for (x, y) in lhs.data().iter().zip(rhs.data()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
