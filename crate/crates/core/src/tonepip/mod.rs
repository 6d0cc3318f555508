//! Tone-pip screening stimuli, listening-level arithmetic and the
//! participant screening rule.

mod screening;
mod sequence;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::DspError;

pub use screening::{
    screen_participants, write_report_csv, write_report_json, OutlierPolicy, Rejection, RejectionReason, ReportRow,
    ScreeningOutcome, ScreeningRule,
};
pub use sequence::{gen_tonepip_sequence, PipLevel, SequenceOrder, TonePipSequence, TonePipSequenceSpec};

/// Test frequencies, Hz.
pub const PRESET_FREQUENCIES: [u32; 4] = [500, 1000, 2000, 4000];
/// Lowest permitted pip level.
pub const DIGITAL_FLOOR_DBFS: f64 = -120.0;
pub const DEFAULT_N_PIPS: u32 = 15;
pub const DEFAULT_STEP_DB: f64 = 5.0;

#[derive(Debug, Error)]
pub enum TonePipError {
    #[error("invalid tone-pip spec: {0}")]
    InvalidSpec(String),
    #[error("pip {index} level {level_dbfs:.1} dBFS is below the {DIGITAL_FLOOR_DBFS} dBFS floor")]
    Underflow { index: u32, level_dbfs: f64 },
    #[error("negative pip count {0}")]
    NegativeCount(i64),
    #[error("pip count {n_pip} exceeds the {max} pips of the sequence")]
    CountTooLarge { n_pip: u32, max: u32 },
    #[error("no reference threshold tabulated for {0} Hz")]
    UnknownFrequency(u32),
    #[error("no tone-pip results")]
    Empty,
    #[error("invalid screening rule: {0}")]
    InvalidRule(String),
    #[error("participant `{0}` appears more than once")]
    DuplicateParticipant(String),
    #[error("report output: {0}")]
    Report(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Playback level above the effective audibility threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListeningLevel {
    /// No pip was heard, including the one at the reference level.
    Inaudible,
    Db(f64),
}

impl ListeningLevel {
    pub fn db(self) -> Option<f64> {
        match self {
            ListeningLevel::Db(v) => Some(v),
            ListeningLevel::Inaudible => None,
        }
    }
}

/// `L_lis = 5 (N_pip - 1)` for the default 5 dB staircase.
pub fn listening_level(n_pip: i64) -> Result<ListeningLevel, TonePipError> {
    listening_level_with_step(n_pip, DEFAULT_STEP_DB)
}

pub fn listening_level_with_step(n_pip: i64, step_db: f64) -> Result<ListeningLevel, TonePipError> {
    match n_pip {
        n if n < 0 => Err(TonePipError::NegativeCount(n)),
        0 => Ok(ListeningLevel::Inaudible),
        n => Ok(ListeningLevel::Db(step_db * (n - 1) as f64)),
    }
}

/// Pip SPL at the participant's threshold: `L_ref - L_lis`.
pub fn threshold_spl(l_ref_db: f64, l_lis_db: f64) -> f64 {
    l_ref_db - l_lis_db
}

/// Reference hearing threshold (dB SPL) at a preset frequency.
pub fn ansi_reference_threshold(frequency_hz: u32) -> Result<f64, TonePipError> {
    match frequency_hz {
        500 => Ok(13.5),
        1000 => Ok(7.5),
        2000 => Ok(9.0),
        4000 => Ok(12.0),
        f => Err(TonePipError::UnknownFrequency(f)),
    }
}

/// One reported count with its derived listening level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonePipResult {
    pub frequency_hz: u32,
    pub n_pip: u32,
    /// Absent when `n_pip` is 0.
    pub listening_level_db: Option<f64>,
}

impl TonePipResult {
    pub fn new(frequency_hz: u32, n_pip: u32, n_pips: u32) -> Result<Self, TonePipError> {
        if n_pip > n_pips {
            return Err(TonePipError::CountTooLarge { n_pip, max: n_pips });
        }
        Ok(Self {
            frequency_hz,
            n_pip,
            listening_level_db: listening_level(n_pip as i64)?.db(),
        })
    }
}

/// Screening input: one participant's tone-pip reports plus metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub participant_id: String,
    #[serde(default)]
    pub tonepip: Vec<TonePipResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_setting: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
}

impl ParticipantRecord {
    pub fn new(participant_id: impl Into<String>, tonepip: Vec<TonePipResult>) -> Self {
        Self {
            participant_id: participant_id.into(),
            tonepip,
            ..Self::default()
        }
    }

    pub fn mean_pips(&self) -> Result<f64, TonePipError> {
        mean_pips(&self.tonepip)
    }

    pub fn n_pip_at(&self, frequency_hz: u32) -> Option<u32> {
        self.tonepip.iter().find(|r| r.frequency_hz == frequency_hz).map(|r| r.n_pip)
    }
}

/// Average `N_pip` across the reported frequencies.
pub fn mean_pips(results: &[TonePipResult]) -> Result<f64, TonePipError> {
    if results.is_empty() {
        return Err(TonePipError::Empty);
    }
    Ok(results.iter().map(|r| r.n_pip as f64).sum::<f64>() / results.len() as f64)
}
