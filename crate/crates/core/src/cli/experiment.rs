use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, with_workers, write_json, CliError, RunLog};
use crate::enhance::EnhancementMethod;
use crate::psycho::{
    build_cohort, fit_psychometric, simulate_tonepip_response, simulate_word_response, srt, summarize, CohortSpec,
    ConditionCell, ConditionSummary, FitOptions, SimulatedListener, SrtEntry,
};
use crate::service::{AnswerRules, Corpus, ExportBundle, Phase, ServiceError, SessionStore, VolumeSetting};
use crate::tonepip::{
    screen_participants, write_report_csv, write_report_json, ScreeningOutcome, ScreeningRule, TonePipSequenceSpec,
    PRESET_FREQUENCIES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub cohort: CohortSpec,
    pub words_per_rank: usize,
    pub corpus_seed: u64,
    /// Session seed; each listener's plan also mixes in its id.
    pub session_seed: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            cohort: CohortSpec::default(),
            words_per_rank: 400,
            corpus_seed: 0,
            session_seed: 1,
            out_dir: PathBuf::from("results"),
            workers: 0,
        }
    }
}

/// A valid answer that does not score as `truth`.
fn wrong_answer(truth: &str, rules: &AnswerRules) -> String {
    let mut chars: Vec<char> = truth.chars().collect();
    chars.truncate(rules.max_chars);
    while chars.len() < rules.min_chars {
        chars.push('x');
    }
    let last = chars.len() - 1;
    chars[last] = if chars[last] == 'q' { 'z' } else { 'q' };
    let candidate: String = chars.into_iter().collect();
    match rules.check(&candidate) {
        None => candidate,
        Some(_) => "zzzz".chars().cycle().take(rules.min_chars.max(1)).collect(),
    }
}

fn transcript(store: &SessionStore, word_id: &str) -> Result<String, CliError> {
    store
        .corpus()
        .get(word_id)
        .map(|w| w.transcript.clone())
        .ok_or_else(|| CliError::Invalid(format!("plan references unknown word {word_id}")))
}

/// Serve stimuli until the block is full; returns the pending block index.
fn serve_block(store: &SessionStore, id: &str) -> Result<(usize, bool), CliError> {
    let mut last = None;
    loop {
        match store.next_stimulus(id) {
            Ok((d, _)) => last = Some((d.block, d.practice)),
            Err(ServiceError::AnswersPending(b)) => {
                let practice = last.map(|l| l.1).unwrap_or(false);
                return Ok((b, practice));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

fn run_listener(store: &SessionStore, l: &SimulatedListener, cfg: &SimulateConfig) -> Result<(), CliError> {
    let p = &l.profile;
    let id = store.create(&p.participant_id, cfg.session_seed)?.session_id;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    store.record_volume(&id, VolumeSetting { descriptor: "simulated".into(), level: None })?;
    store.advance(&id, Phase::Tonepip)?;
    for f in PRESET_FREQUENCIES {
        let n = simulate_tonepip_response(p, &TonePipSequenceSpec::at(f), cfg.cohort.l_ref_db);
        store.submit_tonepip(&id, f, n)?;
    }
    let rules = store.corpus().answer_rules;
    for phase in [Phase::Practice, Phase::Main] {
        store.advance(&id, phase)?;
        loop {
            let state = store.state(&id)?;
            if state.phase != phase {
                break;
            }
            let (block, practice) = serve_block(store, &id)?;
            let mut answers = Vec::new();
            for s in state.plan.block(block, practice) {
                let truth = transcript(store, &s.word_id)?;
                let correct = simulate_word_response(p, s.method, s.snr_db, &mut rng)?;
                answers.push(if correct { truth } else { wrong_answer(&truth, &rules) });
            }
            store.submit_answers(&id, block, &answers, None)?;
            if practice {
                break;
            }
        }
    }
    Ok(())
}

/// Run a simulated cohort through the session service and export the results.
pub fn simulate_sessions(cfg: &SimulateConfig) -> Result<(ExportBundle, Vec<SimulatedListener>), CliError> {
    let cohort = build_cohort(&cfg.cohort)?;
    let corpus = Corpus::synthetic(cfg.words_per_rank, cfg.corpus_seed);
    let store = SessionStore::new(corpus)?.with_clock(Arc::new(|| 0));
    with_workers(cfg.workers, || {
        cohort.par_iter().try_for_each(|l| run_listener(&store, l, cfg))
    })??;
    Ok((store.export(false)?, cohort))
}

pub fn run_simulate(cfg: &SimulateConfig, log: &RunLog) -> Result<ExportBundle, CliError> {
    log.event("start", json!({ "listeners": cfg.cohort.n_listeners }));
    let (bundle, cohort) = simulate_sessions(cfg)?;
    create_dir(&cfg.out_dir)?;
    bundle.write(&cfg.out_dir)?;
    let cohort_path = cfg.out_dir.join("cohort.json");
    write_json(&cohort_path, &cohort)?;
    log.wrote(&cohort_path);
    log.event("done", json!({ "answers": bundle.answers.len() }));
    Ok(bundle)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreenConfig {
    /// Directory holding an exported bundle.
    pub input_dir: PathBuf,
    pub out_dir: PathBuf,
    pub rule: ScreeningRule,
    /// Used only to obtain SRTs for the MAD outlier rule.
    pub fit: FitOptions,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("results"),
            out_dir: PathBuf::from("results"),
            rule: ScreeningRule::default(),
            fit: FitOptions::default(),
        }
    }
}

/// One participant x method fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub participant_id: String,
    pub method: EnhancementMethod,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub srt_db: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub converged: bool,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub kept: bool,
    pub diagnostic: Option<String>,
}

fn fit_all(bundle: &ExportBundle, opts: &FitOptions) -> Vec<FitRow> {
    let mut rows = Vec::new();
    for (pid, cells) in bundle.cells_by_participant() {
        let mut by_method: BTreeMap<EnhancementMethod, Vec<ConditionCell>> = BTreeMap::new();
        for c in cells {
            by_method.entry(c.method).or_default().push(c);
        }
        for (method, cells) in by_method {
            let row = match fit_psychometric(&cells, opts) {
                Ok(fit) => FitRow {
                    participant_id: pid.clone(),
                    method,
                    mu: Some(fit.mu),
                    sigma: Some(fit.sigma),
                    srt_db: srt(&fit).ok(),
                    log_likelihood: Some(fit.log_likelihood),
                    converged: fit.converged,
                    ci_low: fit.ci_mu.map(|c| c.0),
                    ci_high: fit.ci_mu.map(|c| c.1),
                    kept: false,
                    diagnostic: fit.diagnostic,
                },
                Err(e) => FitRow {
                    participant_id: pid.clone(),
                    method,
                    mu: None,
                    sigma: None,
                    srt_db: None,
                    log_likelihood: None,
                    converged: false,
                    ci_low: None,
                    ci_high: None,
                    kept: false,
                    diagnostic: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    rows
}

/// Mean SRT across methods per participant, over converged fits.
fn participant_srts(rows: &[FitRow]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in rows {
        if let Some(s) = r.srt_db {
            let e = acc.entry(r.participant_id.clone()).or_default();
            e.0 += s;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn screen_with_fits(bundle: &ExportBundle, rule: &ScreeningRule, rows: &[FitRow]) -> Result<ScreeningOutcome, CliError> {
    let srts = rule.srt_outlier_policy.mad_k.map(|_| participant_srts(rows));
    Ok(screen_participants(&bundle.participant_records(), rule, srts.as_ref())?)
}

pub fn screen_bundle(bundle: &ExportBundle, rule: &ScreeningRule, fit: &FitOptions) -> Result<ScreeningOutcome, CliError> {
    let rows = if rule.srt_outlier_policy.mad_k.is_some() {
        fit_all(bundle, fit)
    } else {
        Vec::new()
    };
    screen_with_fits(bundle, rule, &rows)
}

pub fn run_screen(cfg: &ScreenConfig, log: &RunLog) -> Result<ScreeningOutcome, CliError> {
    let bundle = ExportBundle::read(&cfg.input_dir)?;
    let outcome = screen_bundle(&bundle, &cfg.rule, &cfg.fit)?;
    create_dir(&cfg.out_dir)?;
    let rows = outcome.report(&bundle.participant_records());
    let json_path = cfg.out_dir.join("screening.json");
    let csv_path = cfg.out_dir.join("screening.csv");
    write_report_json(&json_path, &rows)?;
    write_report_csv(&csv_path, &rows)?;
    log.wrote(&json_path);
    log.wrote(&csv_path);
    log.event("done", json!({ "kept": outcome.kept.len(), "rejected": outcome.rejected.len() }));
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzeConfig {
    pub input_dir: PathBuf,
    pub out_dir: PathBuf,
    pub rule: ScreeningRule,
    pub fit: FitOptions,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("results"),
            out_dir: PathBuf::from("analysis"),
            rule: ScreeningRule::default(),
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub snr_db: f64,
    pub n_trials: u32,
    pub n_correct: u32,
    pub rate: f64,
}

/// Pooled observed rates of kept participants plus the curve at the mean
/// fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotCurve {
    pub method: EnhancementMethod,
    pub observed: Vec<PlotPoint>,
    pub fitted: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub screening: ScreeningOutcome,
    pub fits: Vec<FitRow>,
    pub srts: Vec<SrtEntry>,
    pub summary: Vec<ConditionSummary>,
    pub curves: Vec<PlotCurve>,
}

fn curves(bundle: &ExportBundle, kept: &ScreeningOutcome, fits: &[FitRow]) -> Vec<PlotCurve> {
    let mut pooled: BTreeMap<EnhancementMethod, BTreeMap<i64, (f64, u32, u32)>> = BTreeMap::new();
    for r in bundle.results.iter().filter(|r| kept.is_kept(&r.participant_id)) {
        let key = (r.snr_db * 1000.0).round() as i64;
        let e = pooled.entry(r.method).or_default().entry(key).or_insert((r.snr_db, 0, 0));
        e.1 += r.n_trials;
        e.2 += r.n_correct;
    }
    pooled
        .into_iter()
        .map(|(method, cells)| {
            let used: Vec<&FitRow> = fits.iter().filter(|f| f.kept && f.method == method && f.converged).collect();
            let mean = |g: fn(&FitRow) -> Option<f64>| {
                let v: Vec<f64> = used.iter().filter_map(|f| g(f)).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            let fitted = match (mean(|f| f.mu), mean(|f| f.sigma)) {
                (Some(mu), Some(sigma)) => (0..=48)
                    .map(|i| {
                        let x = -18.0 + 0.5 * i as f64;
                        let z = (x - mu) / (sigma * std::f64::consts::SQRT_2);
                        (x, 0.5 * statrs::function::erf::erfc(-z))
                    })
                    .collect(),
                _ => Vec::new(),
            };
            PlotCurve {
                method,
                observed: cells
                    .into_values()
                    .map(|(snr_db, n_trials, n_correct)| PlotPoint {
                        snr_db,
                        n_trials,
                        n_correct,
                        rate: if n_trials == 0 { 0.0 } else { n_correct as f64 / n_trials as f64 },
                    })
                    .collect(),
                fitted,
            }
        })
        .collect()
}

/// Fit, screen and summarize an exported bundle.
pub fn analyze_bundle(bundle: &ExportBundle, rule: &ScreeningRule, fit: &FitOptions) -> Result<Analysis, CliError> {
    let mut fits = fit_all(bundle, fit);
    let screening = screen_with_fits(bundle, rule, &fits)?;
    for f in &mut fits {
        f.kept = screening.is_kept(&f.participant_id);
    }
    let srts: Vec<SrtEntry> = fits
        .iter()
        .filter(|f| f.kept)
        .filter_map(|f| {
            f.srt_db.map(|srt_db| SrtEntry {
                participant_id: f.participant_id.clone(),
                method: f.method,
                srt_db,
            })
        })
        .collect();
    let summary = if srts.is_empty() { Vec::new() } else { summarize(&srts)? };
    let curves = curves(bundle, &screening, &fits);
    Ok(Analysis {
        screening,
        fits,
        srts,
        summary,
        curves,
    })
}

fn write_csv<T: Serialize>(path: &std::path::Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(super::io_err(path))
}

/// Writes fits.csv, srts.csv, summary.csv, screening.json and plot_data.json.
pub fn run_analyze(cfg: &AnalyzeConfig, log: &RunLog) -> Result<Analysis, CliError> {
    let bundle = ExportBundle::read(&cfg.input_dir)?;
    let analysis = analyze_bundle(&bundle, &cfg.rule, &cfg.fit)?;
    create_dir(&cfg.out_dir)?;
    let out = |name: &str| cfg.out_dir.join(name);
    write_csv(&out("fits.csv"), &analysis.fits)?;
    write_csv(&out("srts.csv"), &analysis.srts)?;
    write_csv(&out("summary.csv"), &analysis.summary)?;
    let rows = analysis.screening.report(&bundle.participant_records());
    write_report_json(out("screening.json"), &rows)?;
    write_json(&out("plot_data.json"), &analysis.curves)?;
    for name in ["fits.csv", "srts.csv", "summary.csv", "screening.json", "plot_data.json"] {
        log.wrote(&out(name));
    }
    log.event(
        "done",
        json!({ "kept": analysis.screening.kept.len(), "summary": analysis.summary }),
    );
    Ok(analysis)
}
