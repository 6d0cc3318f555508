use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParticipantRecord, TonePipError, PRESET_FREQUENCIES};

/// How SRT outliers are identified among participants that pass the pip rule.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierPolicy {
    /// Participant ids excluded by the experimenter.
    pub manual: Vec<String>,
    /// Reject `|SRT - median| > k * MAD` when set.
    pub mad_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreeningRule {
    pub min_mean_pips: f64,
    pub max_mean_pips: f64,
    pub srt_outlier_policy: OutlierPolicy,
}

impl Default for ScreeningRule {
    fn default() -> Self {
        Self {
            min_mean_pips: 9.0,
            max_mean_pips: 13.0,
            srt_outlier_policy: OutlierPolicy::default(),
        }
    }
}

impl ScreeningRule {
    /// Bounds `(-inf, +inf)`, no outlier policy.
    pub fn keep_all() -> Self {
        Self {
            min_mean_pips: f64::NEG_INFINITY,
            max_mean_pips: f64::INFINITY,
            srt_outlier_policy: OutlierPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TonePipError> {
        if !(self.min_mean_pips < self.max_mean_pips) {
            return Err(TonePipError::InvalidRule(format!(
                "min_mean_pips {} must be below max_mean_pips {}",
                self.min_mean_pips, self.max_mean_pips
            )));
        }
        if let Some(k) = self.srt_outlier_policy.mad_k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(TonePipError::InvalidRule(format!("mad_k must be > 0, got {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    MissingTonePipData,
    TooFewPips,
    TooManyPips,
    SrtOutlier,
}

impl RejectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectionReason::MissingTonePipData => "missing_tone_pip_data",
            RejectionReason::TooFewPips => "too_few_pips",
            RejectionReason::TooManyPips => "too_many_pips",
            RejectionReason::SrtOutlier => "srt_outlier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub participant_id: String,
    pub reason: RejectionReason,
}

/// Kept and rejected ids, each sorted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreeningOutcome {
    pub kept: Vec<String>,
    pub rejected: Vec<Rejection>,
}

impl ScreeningOutcome {
    pub fn is_kept(&self, id: &str) -> bool {
        self.kept.binary_search_by(|k| k.as_str().cmp(id)).is_ok()
    }

    pub fn reason(&self, id: &str) -> Option<RejectionReason> {
        self.rejected.iter().find(|r| r.participant_id == id).map(|r| r.reason)
    }

    /// One row per participant for the JSON/CSV report.
    pub fn report(&self, records: &[ParticipantRecord]) -> Vec<ReportRow> {
        let mut rows: Vec<ReportRow> = records
            .iter()
            .map(|r| ReportRow {
                participant_id: r.participant_id.clone(),
                n_pip_500: r.n_pip_at(500),
                n_pip_1000: r.n_pip_at(1000),
                n_pip_2000: r.n_pip_at(2000),
                n_pip_4000: r.n_pip_at(4000),
                mean_pips: r.mean_pips().ok(),
                decision: if self.is_kept(&r.participant_id) { "keep" } else { "reject" }.to_string(),
                reason: self.reason(&r.participant_id).map(|r| r.as_str().to_string()),
            })
            .collect();
        rows.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub participant_id: String,
    pub n_pip_500: Option<u32>,
    pub n_pip_1000: Option<u32>,
    pub n_pip_2000: Option<u32>,
    pub n_pip_4000: Option<u32>,
    pub mean_pips: Option<f64>,
    pub decision: String,
    pub reason: Option<String>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Keep a participant iff `min <= mean N_pip <= max` and it is not an SRT
/// outlier. The MAD rule is evaluated over the participants that pass the
/// pip bounds and have an SRT.
pub fn screen_participants(
    records: &[ParticipantRecord],
    rule: &ScreeningRule,
    srts: Option<&BTreeMap<String, f64>>,
) -> Result<ScreeningOutcome, TonePipError> {
    rule.validate()?;
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.participant_id.as_str()) {
            return Err(TonePipError::DuplicateParticipant(r.participant_id.clone()));
        }
    }

    let mut decisions: BTreeMap<&str, Option<RejectionReason>> = BTreeMap::new();
    for r in records {
        let reason = match r.mean_pips() {
            Err(_) => Some(RejectionReason::MissingTonePipData),
            Ok(m) if m < rule.min_mean_pips => Some(RejectionReason::TooFewPips),
            Ok(m) if m > rule.max_mean_pips => Some(RejectionReason::TooManyPips),
            Ok(_) => None,
        };
        decisions.insert(&r.participant_id, reason);
    }

    let policy = &rule.srt_outlier_policy;
    let passing: Vec<&str> = decisions.iter().filter(|(_, d)| d.is_none()).map(|(id, _)| *id).collect();
    let mut outliers: BTreeSet<&str> = passing
        .iter()
        .copied()
        .filter(|id| policy.manual.iter().any(|m| m == id))
        .collect();
    if let (Some(k), Some(srts)) = (policy.mad_k, srts) {
        let values: Vec<(&str, f64)> = passing
            .iter()
            .filter_map(|id| srts.get(*id).filter(|v| v.is_finite()).map(|v| (*id, *v)))
            .collect();
        if values.len() >= 3 {
            let med = median(&sorted(values.iter().map(|(_, v)| *v).collect()));
            let mad = median(&sorted(values.iter().map(|(_, v)| (v - med).abs()).collect()));
            if mad > 0.0 {
                outliers.extend(values.iter().filter(|(_, v)| (v - med).abs() > k * mad).map(|(id, _)| *id));
            }
        }
    }
    for id in outliers {
        decisions.insert(id, Some(RejectionReason::SrtOutlier));
    }

    let mut out = ScreeningOutcome::default();
    for (id, d) in decisions {
        match d {
            None => out.kept.push(id.to_string()),
            Some(reason) => out.rejected.push(Rejection {
                participant_id: id.to_string(),
                reason,
            }),
        }
    }
    Ok(out)
}

pub fn write_report_json(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<(), TonePipError> {
    let text = serde_json::to_string_pretty(rows).map_err(|e| TonePipError::Report(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_report_csv(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<(), TonePipError> {
    let err = |e: csv::Error| TonePipError::Report(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    if rows.is_empty() {
        let mut header = vec!["participant_id".to_string()];
        header.extend(PRESET_FREQUENCIES.iter().map(|f| format!("n_pip_{f}")));
        header.extend(["mean_pips", "decision", "reason"].map(String::from));
        w.write_record(&header).map_err(err)?;
    }
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tonepip::TonePipResult;
    use proptest::prelude::*;

    fn record(id: &str, ns: &[u32]) -> ParticipantRecord {
        ParticipantRecord::new(
            id,
            ns.iter()
                .zip(PRESET_FREQUENCIES)
                .map(|(n, f)| TonePipResult::new(f, *n, 15).unwrap())
                .collect(),
        )
    }

    #[test]
    fn boundaries_inclusive() {
        let recs = vec![
            record("a", &[8, 9, 9, 9]),
            record("b", &[13, 13, 13, 13]),
            record("c", &[9, 9, 9, 9]),
            record("d", &[14, 13, 13, 13]),
            record("e", &[]),
        ];
        let out = screen_participants(&recs, &ScreeningRule::default(), None).unwrap();
        assert_eq!(out.kept, vec!["b", "c"]);
        assert_eq!(out.reason("a"), Some(RejectionReason::TooFewPips));
        assert_eq!(out.reason("d"), Some(RejectionReason::TooManyPips));
        assert_eq!(out.reason("e"), Some(RejectionReason::MissingTonePipData));
    }

    #[test]
    fn keep_all_rule() {
        let recs = vec![record("a", &[0, 0, 0, 0]), record("b", &[15, 15, 15, 15])];
        let out = screen_participants(&recs, &ScreeningRule::keep_all(), None).unwrap();
        assert_eq!(out.kept.len(), 2);
    }

    #[test]
    fn duplicate_and_invalid_rule() {
        let recs = vec![record("a", &[10]), record("a", &[11])];
        assert!(screen_participants(&recs, &ScreeningRule::default(), None).is_err());
        let bad = ScreeningRule {
            min_mean_pips: 13.0,
            max_mean_pips: 9.0,
            ..ScreeningRule::default()
        };
        assert!(screen_participants(&[], &bad, None).is_err());
    }

    #[test]
    fn outliers_manual_and_mad() {
        let recs: Vec<_> = (0..6).map(|i| record(&format!("p{i}"), &[11, 11, 11, 11])).collect();
        let srts: BTreeMap<String, f64> = [(0, -6.0), (1, -5.5), (2, -6.5), (3, -6.2), (4, -5.8), (5, 4.0)]
            .into_iter()
            .map(|(i, v)| (format!("p{i}"), v))
            .collect();
        let mut rule = ScreeningRule::default();
        assert_eq!(screen_participants(&recs, &rule, Some(&srts)).unwrap().kept.len(), 6);
        rule.srt_outlier_policy.mad_k = Some(3.0);
        let out = screen_participants(&recs, &rule, Some(&srts)).unwrap();
        assert_eq!(out.reason("p5"), Some(RejectionReason::SrtOutlier));
        assert_eq!(out.kept.len(), 5);
        rule.srt_outlier_policy = OutlierPolicy {
            manual: vec!["p2".into()],
            mad_k: None,
        };
        let out = screen_participants(&recs, &rule, Some(&srts)).unwrap();
        assert_eq!(out.reason("p2"), Some(RejectionReason::SrtOutlier));
    }

    #[test]
    fn thirty_nine_cohort() {
        // 25 in range, 14 outside; membership from direct evaluation of the bounds
        let mut recs = Vec::new();
        for i in 0..39u32 {
            let ns: [u32; 4] = match i {
                0..=24 => {
                    let base = 9 + i % 5;
                    [base, base, base, base]
                }
                25..=31 => [8, 8, 9, 9 - (i % 2)],
                _ => [14, 13, 14, 14 + (i % 2)],
            };
            recs.push(record(&format!("s{i:02}"), &ns));
        }
        let out = screen_participants(&recs, &ScreeningRule::default(), None).unwrap();
        let direct = recs
            .iter()
            .filter(|r| (9.0..=13.0).contains(&r.mean_pips().unwrap()))
            .count();
        assert_eq!(direct, 25);
        assert_eq!(out.kept.len(), 25);
        assert_eq!(out.rejected.len(), 14);
        let rows = out.report(&recs);
        assert_eq!(rows.len(), 39);
        assert_eq!(rows[0].decision, "keep");
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![record("a", &[10, 11, 12, 13]), record("b", &[1, 2])];
        let out = screen_participants(&recs, &ScreeningRule::default(), None).unwrap();
        let rows = out.report(&recs);
        write_report_csv(dir.path().join("r.csv"), &rows).unwrap();
        write_report_json(dir.path().join("r.json"), &rows).unwrap();
        let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert!(text.starts_with("participant_id,n_pip_500,n_pip_1000,n_pip_2000,n_pip_4000,mean_pips,decision,reason"));
        assert!(text.contains("b,1,2,,,1.5,reject,too_few_pips"));
        write_report_csv(dir.path().join("e.csv"), &[]).unwrap();
        let empty = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
        assert_eq!(empty.lines().count(), 1);
        let back: Vec<ReportRow> =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    proptest! {
        #[test]
        fn permutation_invariant_partition(
            counts in prop::collection::vec(prop::collection::vec(0u32..=15, 0..=4), 0..30),
            rot in 0usize..30,
        ) {
            let recs: Vec<_> = counts.iter().enumerate().map(|(i, ns)| record(&format!("r{i}"), ns)).collect();
            let rule = ScreeningRule::default();
            let a = screen_participants(&recs, &rule, None).unwrap();
            let mut shuffled = recs.clone();
            if !shuffled.is_empty() {
                let k = rot % shuffled.len();
                shuffled.rotate_left(k);
                shuffled.reverse();
            }
            let b = screen_participants(&shuffled, &rule, None).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.kept.len() + a.rejected.len(), recs.len());
            let kept: Vec<_> = recs.iter().filter(|r| a.is_kept(&r.participant_id)).cloned().collect();
            let again = screen_participants(&kept, &rule, None).unwrap();
            prop_assert_eq!(again.kept, a.kept);
        }
    }
}
