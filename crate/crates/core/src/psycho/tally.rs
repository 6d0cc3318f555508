use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::PsychError;
use crate::enhance::EnhancementMethod;
use crate::scene::SNR_GRID_DB;

/// One scored word presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrial {
    pub trial_id: String,
    pub method: EnhancementMethod,
    pub snr_db: f64,
    pub correct: bool,
    #[serde(default)]
    pub practice: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCell {
    pub method: EnhancementMethod,
    pub snr_db: f64,
    pub n_trials: u32,
    pub n_correct: u32,
}

impl ConditionCell {
    pub fn rate(&self) -> f64 {
        self.n_correct as f64 / self.n_trials as f64
    }
}

/// Observed cells plus the design cells that received no trials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tally {
    pub cells: Vec<ConditionCell>,
    pub missing: Vec<(EnhancementMethod, f64)>,
}

impl Tally {
    pub fn for_method(&self, method: EnhancementMethod) -> Vec<ConditionCell> {
        self.cells.iter().filter(|c| c.method == method).copied().collect()
    }

    pub fn total_trials(&self) -> u32 {
        self.cells.iter().map(|c| c.n_trials).sum()
    }
}

fn grid_index(snr_db: f64) -> Option<usize> {
    SNR_GRID_DB.iter().position(|g| (g - snr_db).abs() < 1e-9)
}

/// Count trials per (method, SNR) over the design grid. Practice trials are
/// skipped but still checked for duplicate ids.
pub fn tally(trials: &[ScoredTrial]) -> Result<Tally, PsychError> {
    let mut ids = HashSet::with_capacity(trials.len());
    let mut counts: BTreeMap<(EnhancementMethod, usize), (u32, u32)> = BTreeMap::new();
    for t in trials {
        if !ids.insert(t.trial_id.as_str()) {
            return Err(PsychError::DuplicateTrial(t.trial_id.clone()));
        }
        let idx = grid_index(t.snr_db).ok_or_else(|| PsychError::UnknownCondition {
            trial_id: t.trial_id.clone(),
            snr_db: t.snr_db,
        })?;
        if t.practice {
            continue;
        }
        let c = counts.entry((t.method, idx)).or_default();
        c.0 += 1;
        c.1 += u32::from(t.correct);
    }
    let mut out = Tally::default();
    if counts.is_empty() {
        return Ok(out);
    }
    for method in EnhancementMethod::ALL {
        for (idx, snr) in SNR_GRID_DB.iter().enumerate() {
            match counts.get(&(method, idx)) {
                Some(&(n, k)) => out.cells.push(ConditionCell {
                    method,
                    snr_db: *snr,
                    n_trials: n,
                    n_correct: k,
                }),
                None => out.missing.push((method, *snr)),
            }
        }
    }
    Ok(out)
}
