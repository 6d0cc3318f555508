use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, require_file, with_workers, write_json, CliError, RunLog};
use crate::dsp::{read_wav, write_wav, PcmFormat, StftParams, PROCESSING_RATE};
use crate::enhance::{enhance, EnhancementMethod};
use crate::scene::{
    load_ir, render_scene_with_ir, synth_babble, synth_ir, synth_word, BabbleSpec, NoisyObservation, SceneConfig,
    SceneEntry, SceneManifest, SourcePosition, DEFAULT_MIC_SPACING_CM, DEFAULT_REVERB_TIME_S, SNR_GRID_DB,
};
use crate::service::Corpus;
use crate::tonepip::{gen_tonepip_sequence, TonePipSequenceSpec, PRESET_FREQUENCIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Existing manifest to render; ignored when `generate_per_snr > 0`.
    pub manifest: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Generate a manifest with this many scenes per grid SNR.
    pub generate_per_snr: usize,
    pub corpus_seed: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            out_dir: PathBuf::from("scenes"),
            generate_per_snr: 0,
            corpus_seed: 0,
            seed: 0,
            workers: 0,
        }
    }
}

/// Manifest of `per_snr` scenes at every grid SNR, least familiar words, random
/// preset positions. Output paths are relative to `out_dir`.
pub fn generate_manifest(per_snr: usize, corpus_seed: u64, seed: u64) -> SceneManifest {
    let corpus = Corpus::synthetic(400, corpus_seed);
    let pool = corpus.pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_positions = SourcePosition::presets().len();
    let mut scenes = Vec::with_capacity(per_snr * SNR_GRID_DB.len());
    for (k, snr) in SNR_GRID_DB.iter().enumerate() {
        for i in 0..per_snr {
            let w = pool[(k * per_snr + i) % pool.len()];
            let stem = format!("{}_snr{:+}", w.word_id, *snr as i32);
            scenes.push(SceneEntry {
                word_id: w.word_id.clone(),
                transcript: Some(w.transcript.clone()),
                position_id: rng.random_range(0..n_positions),
                snr_db: *snr,
                seed: rng.random(),
                mixture: PathBuf::from(format!("scenes/{stem}_mix.wav")),
                speech: PathBuf::from(format!("scenes/{stem}_speech.wav")),
                noise: PathBuf::from(format!("scenes/{stem}_noise.wav")),
                clean: None,
                ir: None,
            });
        }
    }
    SceneManifest {
        mic_spacing_cm: DEFAULT_MIC_SPACING_CM,
        reverb_time_s: DEFAULT_REVERB_TIME_S,
        babble: BabbleSpec::default(),
        corpus_seed,
        scenes,
    }
}

fn render_entry(
    m: &SceneManifest,
    entry: &SceneEntry,
    corpus: &Corpus,
    babble: &crate::dsp::AudioBuffer,
) -> Result<NoisyObservation, CliError> {
    let clean = match (&entry.transcript, &entry.clean) {
        (Some(t), _) => synth_word(t, PROCESSING_RATE)?,
        (None, Some(path)) => {
            require_file(path)?;
            read_wav(path)?
        }
        (None, None) => {
            let e = corpus.get(&entry.word_id).ok_or_else(|| {
                CliError::Invalid(format!("scene word `{}` has no transcript, clean file or corpus entry", entry.word_id))
            })?;
            synth_word(&e.transcript, PROCESSING_RATE)?
        }
    };
    let position = SourcePosition::preset(entry.position_id)?;
    let cfg = SceneConfig {
        mic_spacing_cm: m.mic_spacing_cm,
        reverb_time_s: m.reverb_time_s,
        ..SceneConfig::new(position, entry.snr_db, entry.seed)
    };
    let ir = match &entry.ir {
        Some(path) => {
            require_file(path)?;
            load_ir(path)?
        }
        None => synth_ir(&position, m.mic_spacing_cm, m.reverb_time_s, PROCESSING_RATE, entry.seed)?,
    };
    Ok(render_scene_with_ir(&clean, &cfg, &ir, babble)?)
}

/// Render every scene of a manifest to mixture, speech-image and noise-image
/// WAVs (float32, 16 kHz, two channels).
pub fn run_synth(cfg: &SynthConfig, log: &RunLog) -> Result<SceneManifest, CliError> {
    let manifest = if cfg.generate_per_snr > 0 {
        create_dir(&cfg.out_dir)?;
        let path = cfg.out_dir.join("manifest.json");
        generate_manifest(cfg.generate_per_snr, cfg.corpus_seed, cfg.seed).save(&path)?;
        log.wrote(&path);
        SceneManifest::load(&path)?
    } else {
        let path = cfg
            .manifest
            .as_ref()
            .ok_or_else(|| CliError::Invalid("synth needs a manifest or generate_per_snr > 0".into()))?;
        require_file(path)?;
        SceneManifest::load(path)?
    };
    log.event("start", json!({ "scenes": manifest.scenes.len() }));
    let corpus = Corpus::synthetic(400, manifest.corpus_seed);
    let b = &manifest.babble;
    let babble = synth_babble(b.duration_s, b.n_talkers, PROCESSING_RATE, b.seed)?;
    with_workers(cfg.workers, || {
        manifest.scenes.par_iter().try_for_each(|entry| -> Result<(), CliError> {
            let obs = render_entry(&manifest, entry, &corpus, &babble)?;
            for (path, audio) in [
                (&entry.mixture, &obs.mixture),
                (&entry.speech, &obs.speech_image),
                (&entry.noise, &obs.noise_image),
            ] {
                if let Some(parent) = path.parent() {
                    create_dir(parent)?;
                }
                write_wav(path, audio, PcmFormat::Float32)?;
                log.wrote(path);
            }
            Ok(())
        })
    })??;
    log.event("done", json!({ "scenes": manifest.scenes.len() }));
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceConfig {
    pub manifest: PathBuf,
    pub methods: Vec<EnhancementMethod>,
    pub out_dir: PathBuf,
    pub stft: StftParams,
    pub workers: usize,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("manifest.json"),
            methods: EnhancementMethod::ALL.to_vec(),
            out_dir: PathBuf::from("enhanced"),
            stft: StftParams::default(),
            workers: 0,
        }
    }
}

fn scene_stem(entry: &SceneEntry) -> String {
    let stem = entry
        .mixture
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| entry.word_id.clone());
    stem.strip_suffix("_mix").map(str::to_string).unwrap_or(stem)
}

fn load_observation(entry: &SceneEntry) -> Result<NoisyObservation, CliError> {
    for p in [&entry.mixture, &entry.speech, &entry.noise] {
        require_file(p)?;
    }
    let obs = NoisyObservation {
        mixture: read_wav(&entry.mixture)?,
        speech_image: read_wav(&entry.speech)?,
        noise_image: read_wav(&entry.noise)?,
        snr_db: entry.snr_db,
        config: None,
    };
    obs.mixture.check_same_shape(&obs.speech_image)?;
    obs.mixture.check_same_shape(&obs.noise_image)?;
    Ok(obs)
}

/// Enhanced reference-channel WAVs plus JSON sidecars with the oracle SNRs,
/// at `<out_dir>/<method>/<scene>.{wav,json}`.
pub fn run_enhance(cfg: &EnhanceConfig, log: &RunLog) -> Result<Vec<PathBuf>, CliError> {
    require_file(&cfg.manifest)?;
    let manifest = SceneManifest::load(&cfg.manifest)?;
    if cfg.methods.is_empty() {
        return Err(CliError::Invalid("no enhancement methods selected".into()));
    }
    cfg.stft.validate()?;
    for m in &cfg.methods {
        create_dir(&cfg.out_dir.join(m.as_str()))?;
    }
    log.event("start", json!({ "scenes": manifest.scenes.len(), "methods": cfg.methods }));
    let written = with_workers(cfg.workers, || {
        manifest
            .scenes
            .par_iter()
            .map(|entry| -> Result<Vec<PathBuf>, CliError> {
                let obs = load_observation(entry)?;
                let stem = scene_stem(entry);
                let mut out = Vec::new();
                for m in &cfg.methods {
                    let e = enhance(&obs, *m, &cfg.stft)?;
                    let dir = cfg.out_dir.join(m.as_str());
                    let wav = dir.join(format!("{stem}.wav"));
                    write_wav(&wav, &e.signal, PcmFormat::Float32)?;
                    let sidecar = dir.join(format!("{stem}.json"));
                    write_json(&sidecar, &e.report())?;
                    log.wrote(&wav);
                    out.push(wav);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    let written: Vec<PathBuf> = written.into_iter().flatten().collect();
    log.event("done", json!({ "outputs": written.len() }));
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TonePipConfig {
    pub out_dir: PathBuf,
    pub frequencies: Vec<u32>,
    pub sample_rate: u32,
    /// Template; its frequency is replaced per output.
    pub spec: TonePipSequenceSpec,
}

impl Default for TonePipConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("tonepip"),
            frequencies: PRESET_FREQUENCIES.to_vec(),
            sample_rate: crate::dsp::PLAYBACK_RATE,
            spec: TonePipSequenceSpec::default(),
        }
    }
}

/// One WAV and one level-metadata JSON per frequency.
pub fn run_tonepip(cfg: &TonePipConfig, log: &RunLog) -> Result<Vec<PathBuf>, CliError> {
    create_dir(&cfg.out_dir)?;
    let mut out = Vec::new();
    for f in &cfg.frequencies {
        let spec = TonePipSequenceSpec {
            frequency_hz: *f,
            ..cfg.spec.clone()
        };
        let seq = gen_tonepip_sequence(&spec, cfg.sample_rate)?;
        let wav = cfg.out_dir.join(format!("tonepip_{f}.wav"));
        write_wav(&wav, &seq.audio, PcmFormat::Float32)?;
        let meta = cfg.out_dir.join(format!("tonepip_{f}.json"));
        write_json(&meta, &json!({ "spec": spec, "reference": seq.reference, "pips": seq.pips }))?;
        log.wrote(&wav);
        out.push(wav);
    }
    log.event("done", json!({ "outputs": out.len() }));
    Ok(out)
}
