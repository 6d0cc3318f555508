use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavSpec};
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, DspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PcmFormat {
    Int16,
    #[default]
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, DspError> {
    let reader = hound::WavReader::open(path.as_ref())?;
    decode(reader)
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<AudioBuffer, DspError> {
    decode(hound::WavReader::new(std::io::Cursor::new(bytes))?)
}

fn decode<R: Read>(reader: hound::WavReader<R>) -> Result<AudioBuffer, DspError> {
    let spec = reader.spec();
    let ch = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (fmt, bits) => {
            return Err(DspError::UnsupportedWav(format!("{fmt:?} {bits}-bit")));
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / ch.max(1)); ch];
    for (i, s) in interleaved.into_iter().enumerate() {
        channels[i % ch].push(s);
    }
    AudioBuffer::new(channels, spec.sample_rate)
}

pub fn write_wav(
    path: impl AsRef<Path>,
    audio: &AudioBuffer,
    format: PcmFormat,
) -> Result<(), DspError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    encode(file, audio, format)
}

pub fn wav_bytes(audio: &AudioBuffer, format: PcmFormat) -> Result<Vec<u8>, DspError> {
    let mut cursor = std::io::Cursor::new(Vec::new());
    encode(&mut cursor, audio, format)?;
    Ok(cursor.into_inner())
}

fn encode<W: Write + Seek>(
    sink: W,
    audio: &AudioBuffer,
    format: PcmFormat,
) -> Result<(), DspError> {
    let spec = WavSpec {
        channels: audio.channel_count() as u16,
        sample_rate: audio.sample_rate(),
        bits_per_sample: match format {
            PcmFormat::Int16 => 16,
            PcmFormat::Float32 => 32,
        },
        sample_format: match format {
            PcmFormat::Int16 => SampleFormat::Int,
            PcmFormat::Float32 => SampleFormat::Float,
        },
    };
    let mut w = hound::WavWriter::new(sink, spec)?;
    let chans = audio.channels();
    for i in 0..audio.len() {
        for c in chans {
            match format {
                PcmFormat::Int16 => {
                    let v = (c[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    w.write_sample(v)?;
                }
                PcmFormat::Float32 => w.write_sample(c[i] as f32)?,
            }
        }
    }
    w.finalize()?;
    Ok(())
}
