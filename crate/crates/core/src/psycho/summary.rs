use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PsychError, PsychFit};
use crate::enhance::EnhancementMethod;

/// SNR at 50 % correct, which is `mu` for a zero guess and lapse rate.
pub fn srt(fit: &PsychFit) -> Result<f64, PsychError> {
    if !fit.converged {
        return Err(PsychError::NotConverged(
            fit.diagnostic.clone().unwrap_or_else(|| "unknown".into()),
        ));
    }
    if fit.guess_rate == 0.0 && fit.lapse_rate == 0.0 {
        return Ok(fit.mu);
    }
    let span = 1.0 - fit.guess_rate - fit.lapse_rate;
    let target = (0.5 - fit.guess_rate) / span;
    if !(0.0 < target && target < 1.0) {
        return Err(PsychError::NotConverged("50 % point outside the function's range".into()));
    }
    let z = statrs::distribution::ContinuousCDF::inverse_cdf(
        &statrs::distribution::Normal::standard(),
        target,
    );
    Ok(fit.mu + fit.sigma * z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrtEntry {
    pub participant_id: String,
    pub method: EnhancementMethod,
    pub srt_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub method: EnhancementMethod,
    pub mean_db: f64,
    /// Sample SD (n - 1 denominator); absent for a single participant.
    pub sd_db: Option<f64>,
    pub n: usize,
}

/// Per-condition mean and SD across participants.
pub fn summarize(entries: &[SrtEntry]) -> Result<Vec<ConditionSummary>, PsychError> {
    if entries.is_empty() {
        return Err(PsychError::Empty);
    }
    let mut groups: BTreeMap<EnhancementMethod, Vec<f64>> = BTreeMap::new();
    for e in entries {
        groups.entry(e.method).or_default().push(e.srt_db);
    }
    Ok(groups
        .into_iter()
        .map(|(method, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let sd = (n > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
            ConditionSummary {
                method,
                mean_db: mean,
                sd_db: sd,
                n,
            }
        })
        .collect())
}
