use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ServiceError, SessionState};
use crate::enhance::EnhancementMethod;
use crate::psycho::ConditionCell;
use crate::tonepip::{ParticipantRecord, TonePipResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRow {
    pub participant_id: String,
    pub session_id: String,
    pub stimulus_index: usize,
    pub block: usize,
    pub word_id: String,
    pub method: EnhancementMethod,
    pub snr_db: f64,
    pub response: String,
    pub correct: bool,
}

/// One psychometric cell for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub participant_id: String,
    pub method: EnhancementMethod,
    pub snr_db: f64,
    pub n_correct: u32,
    pub n_trials: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonePipRow {
    pub participant_id: String,
    pub frequency_hz: u32,
    pub n_pip: u32,
    pub listening_level_db: Option<f64>,
    pub volume: Option<String>,
}

/// Analysis-ready tables derived from session states.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExportBundle {
    pub answers: Vec<AnswerRow>,
    pub results: Vec<ResultRow>,
    pub tonepip: Vec<TonePipRow>,
}

pub const ANSWERS_CSV: &str = "answers.csv";
pub const RESULTS_CSV: &str = "results.csv";
pub const TONEPIP_CSV: &str = "tonepip.csv";

fn csv_err(e: csv::Error) -> ServiceError {
    ServiceError::Io(std::io::Error::other(e.to_string()))
}

fn write_table<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), ServiceError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if rows.is_empty() {
        w.write_record(header).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ServiceError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| ServiceError::BadRequest(format!("{}: record {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

impl ExportBundle {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), ServiceError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_table(
            &dir.join(ANSWERS_CSV),
            &[
                "participant_id",
                "session_id",
                "stimulus_index",
                "block",
                "word_id",
                "method",
                "snr_db",
                "response",
                "correct",
            ],
            &self.answers,
        )?;
        write_table(
            &dir.join(RESULTS_CSV),
            &["participant_id", "method", "snr_db", "n_correct", "n_trials"],
            &self.results,
        )?;
        write_table(
            &dir.join(TONEPIP_CSV),
            &["participant_id", "frequency_hz", "n_pip", "listening_level_db", "volume"],
            &self.tonepip,
        )?;
        Ok(())
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let dir = dir.as_ref();
        Ok(Self {
            answers: read_table(&dir.join(ANSWERS_CSV))?,
            results: read_table(&dir.join(RESULTS_CSV))?,
            tonepip: read_table(&dir.join(TONEPIP_CSV))?,
        })
    }

    /// Screening input, one record per participant with tone-pip or result rows.
    pub fn participant_records(&self) -> Vec<ParticipantRecord> {
        let mut map: BTreeMap<&str, ParticipantRecord> = BTreeMap::new();
        for r in &self.results {
            map.entry(&r.participant_id)
                .or_insert_with(|| ParticipantRecord::new(r.participant_id.clone(), Vec::new()));
        }
        for t in &self.tonepip {
            let rec = map
                .entry(&t.participant_id)
                .or_insert_with(|| ParticipantRecord::new(t.participant_id.clone(), Vec::new()));
            rec.tonepip.push(TonePipResult {
                frequency_hz: t.frequency_hz,
                n_pip: t.n_pip,
                listening_level_db: t.listening_level_db,
            });
            rec.volume_setting = t.volume.clone();
        }
        map.into_values().collect()
    }

    /// Psychometric cells grouped by participant.
    pub fn cells_by_participant(&self) -> BTreeMap<String, Vec<ConditionCell>> {
        let mut map: BTreeMap<String, Vec<ConditionCell>> = BTreeMap::new();
        for r in &self.results {
            map.entry(r.participant_id.clone()).or_default().push(ConditionCell {
                method: r.method,
                snr_db: r.snr_db,
                n_trials: r.n_trials,
                n_correct: r.n_correct,
            });
        }
        map
    }
}

/// Tables for finished sessions; unfinished ones only with `allow_partial`.
/// Practice answers are excluded.
pub fn export_results(sessions: &[SessionState], allow_partial: bool) -> Result<ExportBundle, ServiceError> {
    let unfinished = sessions.iter().filter(|s| !s.is_done()).count();
    if unfinished > 0 && !allow_partial {
        return Err(ServiceError::ExportIncomplete(unfinished));
    }
    let mut sorted: Vec<&SessionState> = sessions.iter().collect();
    sorted.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let mut out = ExportBundle::default();
    for s in sorted {
        let pid = &s.plan.participant_id;
        let mut main: Vec<_> = s.answers.iter().filter(|a| !a.practice).collect();
        main.sort_by_key(|a| a.stimulus_index);
        let mut cells: BTreeMap<(EnhancementMethod, i64), (f64, u32, u32)> = BTreeMap::new();
        for a in &main {
            out.answers.push(AnswerRow {
                participant_id: pid.clone(),
                session_id: s.session_id.clone(),
                stimulus_index: a.stimulus_index,
                block: a.block,
                word_id: a.word_id.clone(),
                method: a.method,
                snr_db: a.snr_db,
                response: a.response.clone(),
                correct: a.correct,
            });
            let c = cells.entry((a.method, (a.snr_db * 1000.0).round() as i64)).or_insert((a.snr_db, 0, 0));
            c.1 += 1;
            c.2 += u32::from(a.correct);
        }
        for ((method, _), (snr_db, n, k)) in cells {
            out.results.push(ResultRow {
                participant_id: pid.clone(),
                method,
                snr_db,
                n_correct: k,
                n_trials: n,
            });
        }
        let mut tp = s.tonepip.clone();
        tp.sort_by_key(|t| t.frequency_hz);
        for t in tp {
            out.tonepip.push(TonePipRow {
                participant_id: pid.clone(),
                frequency_hz: t.frequency_hz,
                n_pip: t.n_pip,
                listening_level_db: t.listening_level_db,
                volume: s.volume.as_ref().map(|v| v.descriptor.clone()),
            });
        }
    }
    Ok(out)
}
