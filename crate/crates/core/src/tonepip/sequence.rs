use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{TonePipError, DEFAULT_N_PIPS, DEFAULT_STEP_DB, DIGITAL_FLOOR_DBFS, PRESET_FREQUENCIES};
use crate::dsp::{rms_db_slice, AudioBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceOrder {
    #[default]
    Descending,
    Ascending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TonePipSequenceSpec {
    pub frequency_hz: u32,
    pub n_pips: u32,
    pub step_db: f64,
    pub ref_level_dbfs: f64,
    pub ref_duration_s: f64,
    pub pip_duration_s: f64,
    pub ramp_duration_s: f64,
    pub gap_duration_s: f64,
    pub order: SequenceOrder,
    /// Permit frequencies outside the preset set.
    pub custom_frequency: bool,
}

impl Default for TonePipSequenceSpec {
    fn default() -> Self {
        Self {
            frequency_hz: 1000,
            n_pips: DEFAULT_N_PIPS,
            step_db: DEFAULT_STEP_DB,
            ref_level_dbfs: -20.0,
            ref_duration_s: 1.0,
            pip_duration_s: 0.1,
            ramp_duration_s: 0.01,
            gap_duration_s: 0.2,
            order: SequenceOrder::Descending,
            custom_frequency: false,
        }
    }
}

impl TonePipSequenceSpec {
    pub fn at(frequency_hz: u32) -> Self {
        Self {
            frequency_hz,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TonePipError> {
        let bad = |m: String| Err(TonePipError::InvalidSpec(m));
        if self.n_pips == 0 {
            return bad("n_pips must be >= 1".into());
        }
        if !(self.step_db > 0.0 && self.step_db.is_finite()) {
            return bad(format!("step_db must be > 0, got {}", self.step_db));
        }
        if !self.custom_frequency && !PRESET_FREQUENCIES.contains(&self.frequency_hz) {
            return bad(format!("{} Hz is not a preset frequency", self.frequency_hz));
        }
        if self.frequency_hz == 0 {
            return bad("frequency must be positive".into());
        }
        if !self.ref_level_dbfs.is_finite() || self.ref_level_dbfs > 0.0 {
            return bad(format!("reference level {} dBFS must be <= 0", self.ref_level_dbfs));
        }
        for (name, v) in [
            ("ref_duration_s", self.ref_duration_s),
            ("pip_duration_s", self.pip_duration_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if !(self.gap_duration_s >= 0.0 && self.gap_duration_s.is_finite()) {
            return bad("gap_duration_s must be >= 0".into());
        }
        if !(self.ramp_duration_s >= 0.0) || 2.0 * self.ramp_duration_s > self.pip_duration_s.min(self.ref_duration_s) {
            return bad("ramps must fit inside each tone".into());
        }
        Ok(())
    }

    /// Target level of pip `k` (1-based) in presentation order.
    pub fn pip_level_dbfs(&self, k: u32) -> f64 {
        let step = match self.order {
            SequenceOrder::Descending => k - 1,
            SequenceOrder::Ascending => self.n_pips - k,
        };
        self.ref_level_dbfs - self.step_db * step as f64
    }
}

/// Placement and level of one rendered pip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipLevel {
    /// 1-based, in presentation order.
    pub index: u32,
    pub level_dbfs: f64,
    pub start_sample: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TonePipSequence {
    pub audio: AudioBuffer,
    pub reference: PipLevel,
    pub pips: Vec<PipLevel>,
}

fn samples(seconds: f64, fs: f64) -> usize {
    (seconds * fs).round() as usize
}

/// Ramped tone whose RMS over its full length equals `level_dbfs`.
fn tone(frequency: f64, len: usize, ramp: usize, level_dbfs: f64, fs: f64) -> Vec<f64> {
    let mut x: Vec<f64> = (0..len)
        .map(|n| {
            let g = if ramp == 0 {
                1.0
            } else if n < ramp {
                0.5 - 0.5 * (PI * n as f64 / ramp as f64).cos()
            } else if n >= len - ramp {
                0.5 - 0.5 * (PI * (len - 1 - n) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            g * (2.0 * PI * frequency * n as f64 / fs).sin()
        })
        .collect();
    if let Some(current) = rms_db_slice(&x).dbfs() {
        let gain = 10f64.powf((level_dbfs - current) / 20.0);
        x.iter_mut().for_each(|v| *v *= gain);
    }
    x
}

/// Reference tone, gap, then `n_pips` pips separated by gaps.
pub fn gen_tonepip_sequence(spec: &TonePipSequenceSpec, sample_rate: u32) -> Result<TonePipSequence, TonePipError> {
    spec.validate()?;
    let fs = sample_rate as f64;
    if spec.frequency_hz as f64 >= fs / 2.0 {
        return Err(TonePipError::InvalidSpec(format!(
            "{} Hz is at or above Nyquist for {sample_rate} Hz",
            spec.frequency_hz
        )));
    }
    for k in 1..=spec.n_pips {
        let level = spec.pip_level_dbfs(k);
        if level < DIGITAL_FLOOR_DBFS {
            return Err(TonePipError::Underflow { index: k, level_dbfs: level });
        }
    }
    let f = spec.frequency_hz as f64;
    let ref_len = samples(spec.ref_duration_s, fs);
    let pip_len = samples(spec.pip_duration_s, fs);
    let gap = samples(spec.gap_duration_s, fs);
    let ramp = samples(spec.ramp_duration_s, fs);

    let mut out = tone(f, ref_len, ramp, spec.ref_level_dbfs, fs);
    let reference = PipLevel {
        index: 0,
        level_dbfs: spec.ref_level_dbfs,
        start_sample: 0,
        len: ref_len,
    };
    let mut pips = Vec::with_capacity(spec.n_pips as usize);
    for k in 1..=spec.n_pips {
        out.resize(out.len() + gap, 0.0);
        let level = spec.pip_level_dbfs(k);
        pips.push(PipLevel {
            index: k,
            level_dbfs: level,
            start_sample: out.len(),
            len: pip_len,
        });
        out.extend(tone(f, pip_len, ramp, level, fs));
    }
    Ok(TonePipSequence {
        audio: AudioBuffer::mono(out, sample_rate)?,
        reference,
        pips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measured(seq: &TonePipSequence, p: &PipLevel) -> f64 {
        let x = &seq.audio.channel(0).unwrap()[p.start_sample..p.start_sample + p.len];
        rms_db_slice(x).dbfs().unwrap()
    }

    #[test]
    fn staircase_levels() {
        for f in PRESET_FREQUENCIES {
            let seq = gen_tonepip_sequence(&TonePipSequenceSpec::at(f), 48000).unwrap();
            assert_eq!(seq.pips.len(), 15);
            assert!((measured(&seq, &seq.pips[0]) - measured(&seq, &seq.reference)).abs() < 0.05);
            assert_eq!(seq.pips[14].level_dbfs, -20.0 - 70.0);
            for p in &seq.pips {
                assert!((measured(&seq, p) - p.level_dbfs).abs() < 0.05, "pip {}", p.index);
            }
            assert!((seq.audio.duration_secs() - 5.5).abs() < 1e-9);
        }
    }

    #[test]
    fn gaps_are_silent_and_ramps_start_at_zero() {
        let seq = gen_tonepip_sequence(&TonePipSequenceSpec::default(), 48000).unwrap();
        let x = seq.audio.channel(0).unwrap();
        let p = seq.pips[3];
        assert!(x[p.start_sample - 9600..p.start_sample].iter().all(|v| *v == 0.0));
        assert_eq!(x[p.start_sample], 0.0);
        assert!(x[p.start_sample + p.len - 1].abs() < 1e-12);
    }

    #[test]
    fn single_pip() {
        let spec = TonePipSequenceSpec {
            n_pips: 1,
            ..TonePipSequenceSpec::default()
        };
        let seq = gen_tonepip_sequence(&spec, 16000).unwrap();
        assert_eq!(seq.pips.len(), 1);
        assert_eq!(seq.pips[0].level_dbfs, spec.ref_level_dbfs);
    }

    #[test]
    fn ascending_reverses_levels() {
        let spec = TonePipSequenceSpec {
            order: SequenceOrder::Ascending,
            ..TonePipSequenceSpec::default()
        };
        let seq = gen_tonepip_sequence(&spec, 48000).unwrap();
        assert_eq!(seq.pips[0].level_dbfs, -90.0);
        assert_eq!(seq.pips[14].level_dbfs, -20.0);
    }

    #[test]
    fn underflow_and_invalid() {
        let spec = TonePipSequenceSpec {
            ref_level_dbfs: -60.0,
            ..TonePipSequenceSpec::default()
        };
        assert!(matches!(
            gen_tonepip_sequence(&spec, 48000),
            Err(TonePipError::Underflow { index: 14, .. })
        ));
        assert!(gen_tonepip_sequence(&TonePipSequenceSpec::at(3000), 48000).is_err());
        let custom = TonePipSequenceSpec {
            custom_frequency: true,
            ..TonePipSequenceSpec::at(3000)
        };
        assert!(gen_tonepip_sequence(&custom, 48000).is_ok());
        let zero = TonePipSequenceSpec {
            n_pips: 0,
            ..TonePipSequenceSpec::default()
        };
        assert!(gen_tonepip_sequence(&zero, 48000).is_err());
    }
}
