use super::DspError;

/// Multi-channel PCM at full scale (±1.0), one `Vec` per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self, DspError> {
        if sample_rate == 0 {
            return Err(DspError::InvalidSampleRate(0));
        }
        if channels.is_empty() {
            return Err(DspError::NoChannels);
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(DspError::RaggedChannels);
        }
        if channels.iter().flatten().any(|s| !s.is_finite()) {
            return Err(DspError::NonFinite);
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self, DspError> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn silence(channel_count: usize, len: usize, sample_rate: u32) -> Result<Self, DspError> {
        Self::new(vec![vec![0.0; len]; channel_count.max(1)], sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> Result<&[f64], DspError> {
        self.channels
            .get(index)
            .map(Vec::as_slice)
            .ok_or(DspError::ChannelOutOfRange {
                index,
                count: self.channels.len(),
            })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Single-channel copy of `index`.
    pub fn select(&self, index: usize) -> Result<AudioBuffer, DspError> {
        Ok(AudioBuffer {
            channels: vec![self.channel(index)?.to_vec()],
            sample_rate: self.sample_rate,
        })
    }

    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|s| s * gain).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Sample-wise sum; shapes and rates must agree.
    pub fn add(&self, other: &AudioBuffer) -> Result<AudioBuffer, DspError> {
        self.check_same_shape(other)?;
        Ok(AudioBuffer {
            channels: self
                .channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
            sample_rate: self.sample_rate,
        })
    }

    pub fn check_same_shape(&self, other: &AudioBuffer) -> Result<(), DspError> {
        if self.sample_rate != other.sample_rate {
            return Err(DspError::RateMismatch(self.sample_rate, other.sample_rate));
        }
        if self.channel_count() != other.channel_count() || self.len() != other.len() {
            return Err(DspError::ShapeMismatch);
        }
        Ok(())
    }

    /// Energy (sum of squares) of one channel.
    pub fn energy(&self, channel: usize) -> Result<f64, DspError> {
        Ok(self.channel(channel)?.iter().map(|s| s * s).sum())
    }

    /// Sub-range `[start, start + len)` of every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<AudioBuffer, DspError> {
        if start + len > self.len() {
            return Err(DspError::TooShort {
                needed: start + len,
                got: self.len(),
            });
        }
        Ok(AudioBuffer {
            channels: self
                .channels
                .iter()
                .map(|c| c[start..start + len].to_vec())
                .collect(),
            sample_rate: self.sample_rate,
        })
    }
}

/// Result of an RMS level measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Dbfs(f64),
    /// All-zero input; no finite level exists.
    Silent,
}

impl Level {
    pub fn dbfs(self) -> Option<f64> {
        match self {
            Level::Dbfs(v) => Some(v),
            Level::Silent => None,
        }
    }
}

/// RMS level in dBFS, where a full-scale square wave reads 0 dBFS.
pub fn rms_db(signal: &AudioBuffer, channel: usize) -> Result<Level, DspError> {
    let samples = signal.channel(channel)?;
    Ok(rms_db_slice(samples))
}

pub fn rms_db_slice(samples: &[f64]) -> Level {
    if samples.is_empty() {
        return Level::Silent;
    }
    let ms = samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64;
    if ms == 0.0 {
        Level::Silent
    } else {
        Level::Dbfs(10.0 * ms.log10())
    }
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
