//! Synthetic four-mora "words" standing in for a recorded word list.
//!
//! A word is a sequence of (consonant, vowel) morae written in plain ASCII
//! romanization; the audio is rendered from that transcript, so the same
//! transcript always yields the same waveform.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SceneError;
use crate::dsp::AudioBuffer;

pub const CONSONANTS: [&str; 8] = ["", "k", "s", "t", "n", "h", "m", "r"];
pub const VOWELS: [char; 5] = ['a', 'i', 'u', 'e', 'o'];
pub const MORAE_PER_WORD: usize = 4;
/// RMS level of rendered words, dBFS.
pub const WORD_LEVEL_DBFS: f64 = -26.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mora {
    pub consonant: &'static str,
    pub vowel: char,
}

impl Mora {
    pub fn romaji(&self) -> String {
        format!("{}{}", self.consonant, self.vowel)
    }
}

/// Split an ASCII romanized transcript into morae.
pub fn parse_morae(transcript: &str) -> Result<Vec<Mora>, SceneError> {
    let mut out = Vec::new();
    let mut pending: Option<&'static str> = None;
    for c in transcript.chars() {
        if VOWELS.contains(&c) {
            out.push(Mora {
                consonant: pending.take().unwrap_or(""),
                vowel: c,
            });
            continue;
        }
        if pending.is_some() {
            return Err(SceneError::BadTranscript(transcript.to_string()));
        }
        let s = c.to_string();
        pending = Some(
            CONSONANTS
                .iter()
                .copied()
                .find(|k| !k.is_empty() && *k == s)
                .ok_or_else(|| SceneError::BadTranscript(transcript.to_string()))?,
        );
    }
    if pending.is_some() || out.is_empty() {
        return Err(SceneError::BadTranscript(transcript.to_string()));
    }
    Ok(out)
}

/// `count` distinct four-mora transcripts, deterministic in `seed`.
pub fn synthetic_lexicon(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let word: String = (0..MORAE_PER_WORD)
            .map(|_| {
                Mora {
                    consonant: CONSONANTS.choose(&mut rng).copied().unwrap_or(""),
                    vowel: *VOWELS.choose(&mut rng).unwrap_or(&'a'),
                }
                .romaji()
            })
            .collect();
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

fn formants(vowel: char) -> [f64; 3] {
    match vowel {
        'a' => [750.0, 1200.0, 2600.0],
        'i' => [300.0, 2200.0, 3000.0],
        'u' => [350.0, 1300.0, 2400.0],
        'e' => [500.0, 1900.0, 2600.0],
        _ => [500.0, 850.0, 2500.0],
    }
}

fn formant_gain(hz: f64, f: &[f64; 3]) -> f64 {
    let bw = [90.0, 110.0, 160.0];
    let peaks: f64 = f
        .iter()
        .zip(bw)
        .map(|(c, b)| 1.0 / (1.0 + ((hz - c) / (0.5 * b)).powi(2)))
        .sum();
    // glottal tilt
    (0.05 + peaks) * (100.0 / hz.max(100.0))
}

/// (noise duration s, band centre Hz, nasal) for each consonant.
fn consonant_shape(c: &str) -> Option<(f64, f64, bool)> {
    match c {
        "k" => Some((0.03, 2000.0, false)),
        "t" => Some((0.025, 4000.0, false)),
        "s" => Some((0.09, 5500.0, false)),
        "h" => Some((0.06, 1500.0, false)),
        "n" | "m" => Some((0.05, 250.0, true)),
        "r" => Some((0.02, 1000.0, true)),
        _ => None,
    }
}

/// Render a romanized transcript as a male-voice-like utterance, roughly
/// 175 ms per mora, normalized to [`WORD_LEVEL_DBFS`].
pub fn synth_word(transcript: &str, sample_rate: u32) -> Result<AudioBuffer, SceneError> {
    let morae = parse_morae(transcript)?;
    let fs = sample_rate as f64;
    let seed = transcript
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nyquist = fs / 2.0;
    let total_morae = morae.len() as f64;
    let mut out = Vec::new();
    let mut phase = 0.0f64;

    for (i, m) in morae.iter().enumerate() {
        // consonant onset
        if let Some((dur, centre, nasal)) = consonant_shape(m.consonant) {
            let n = (dur * fs) as usize;
            let mut lp = 0.0;
            for k in 0..n {
                let env = (PI * k as f64 / n as f64).sin();
                let v = if nasal {
                    phase += 2.0 * PI * 115.0 / fs;
                    0.4 * phase.sin() + 0.1 * (2.0 * phase).sin()
                } else {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    // crude band emphasis: high-pass-ish for sibilants
                    let a = (-2.0 * PI * centre / fs).exp();
                    let hp = w - lp;
                    lp = a * lp + (1.0 - a) * w;
                    0.25 * if centre > 1800.0 { hp } else { lp * 2.0 }
                };
                out.push(env * v);
            }
        }
        // vowel with declining pitch across the word
        let dur = rng.random_range(0.12..0.16);
        let n = (dur * fs) as usize;
        let f = formants(m.vowel);
        let f0_start = 130.0 - 20.0 * i as f64 / total_morae;
        let f0_end = 130.0 - 20.0 * (i + 1) as f64 / total_morae;
        let ramp = (0.015 * fs) as usize;
        for k in 0..n {
            let f0 = f0_start + (f0_end - f0_start) * k as f64 / n as f64;
            phase += 2.0 * PI * f0 / fs;
            let mut v = 0.0;
            let mut h = 1;
            while h as f64 * f0 < nyquist * 0.95 {
                let hz = h as f64 * f0;
                v += formant_gain(hz, &f) * (h as f64 * phase).sin();
                h += 1;
            }
            let env = if k < ramp {
                0.5 - 0.5 * (PI * k as f64 / ramp as f64).cos()
            } else if k >= n - ramp {
                0.5 - 0.5 * (PI * (n - k) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            out.push(env * v);
        }
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / out.len() as f64).sqrt();
    let gain = 10f64.powf(WORD_LEVEL_DBFS / 20.0) / rms;
    out.iter_mut().for_each(|v| *v *= gain);
    Ok(AudioBuffer::mono(out, sample_rate)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{rms_db, Level};

    #[test]
    fn parses_romaji() {
        let m = parse_morae("kasoami").unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m[2], Mora { consonant: "", vowel: 'a' });
        assert!(parse_morae("kxa").is_err());
        assert!(parse_morae("kas").is_err());
        assert!(parse_morae("").is_err());
    }

    #[test]
    fn lexicon_unique_and_deterministic() {
        let a = synthetic_lexicon(1600, 3);
        let b = synthetic_lexicon(1600, 3);
        assert_eq!(a, b);
        let set: BTreeSet<_> = a.iter().collect();
        assert_eq!(set.len(), 1600);
        assert!(a.iter().all(|w| parse_morae(w).unwrap().len() == 4));
    }

    #[test]
    fn word_duration_and_level() {
        let w = synth_word("sakura", 16000).unwrap();
        assert!(w.duration_secs() > 0.35 && w.duration_secs() < 1.0);
        let Level::Dbfs(l) = rms_db(&w, 0).unwrap() else { panic!("silent") };
        assert!((l - WORD_LEVEL_DBFS).abs() < 1e-9);
        let four = synth_word("kasotami", 16000).unwrap();
        assert!(four.duration_secs() > 0.5 && four.duration_secs() < 0.95);
        assert_eq!(four, synth_word("kasotami", 16000).unwrap());
    }
}
