use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use super::{
    load_config, run_analyze, run_enhance, run_screen, run_serve, run_simulate, run_synth, run_tonepip, AnalyzeConfig,
    CliError, EnhanceConfig, RunLog, ScreenConfig, ServeConfig, SimulateConfig, SynthConfig, TonePipConfig,
    DATA_DIR_ENV,
};
use crate::enhance::EnhancementMethod;
use crate::psycho::Bootstrap;
use crate::tonepip::{ScreeningRule, SequenceOrder};

#[derive(Debug, Parser)]
#[command(name = "sitest", version, about = "Speech-in-noise listening test toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// NDJSON run log (`-` for stderr).
    #[arg(long, global = true)]
    pub log: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render noisy two-channel scenes from a manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Generate a manifest with this many scenes per SNR.
        #[arg(long)]
        generate: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        corpus_seed: Option<u64>,
    },
    /// Apply enhancement methods to rendered scenes.
    Enhance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Repeatable; defaults to every method.
        #[arg(long = "method")]
        methods: Vec<EnhancementMethod>,
    },
    /// Write tone-pip calibration sequences.
    Tonepip {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "frequency")]
        frequencies: Vec<u32>,
        #[arg(long)]
        sample_rate: Option<u32>,
        #[arg(long)]
        ref_level_dbfs: Option<f64>,
        #[arg(long)]
        n_pips: Option<u32>,
        #[arg(long)]
        step_db: Option<f64>,
        #[arg(long)]
        ascending: bool,
        /// Allow frequencies outside 500/1000/2000/4000 Hz.
        #[arg(long)]
        custom_frequency: bool,
    },
    /// Run a simulated cohort through the session service.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        listeners: Option<usize>,
        #[arg(long)]
        in_range: Option<usize>,
        #[arg(long)]
        session_seed: Option<u64>,
    },
    /// Apply the tone-pip screening rule to an exported bundle.
    Screen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Fit psychometric functions and summarize SRTs.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArgs,
        /// Bootstrap resamples for a 95 % CI on mu.
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Serve the experiment HTTP API.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        host: Option<std::net::IpAddr>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    #[arg(long)]
    pub min_pips: Option<f64>,
    #[arg(long)]
    pub max_pips: Option<f64>,
    /// Participant to exclude; repeatable.
    #[arg(long = "exclude")]
    pub exclude: Vec<String>,
    /// Reject SRTs further than k * MAD from the median.
    #[arg(long)]
    pub mad_k: Option<f64>,
}

impl RuleArgs {
    fn apply(&self, rule: &mut ScreeningRule) {
        set(&mut rule.min_mean_pips, self.min_pips);
        set(&mut rule.max_mean_pips, self.max_pips);
        rule.srt_outlier_policy.manual.extend(self.exclude.iter().cloned());
        if self.mad_k.is_some() {
            rule.srt_outlier_policy.mad_k = self.mad_k;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn open_log(command: &str, path: Option<&Path>) -> Result<RunLog, CliError> {
    match path {
        None => Ok(RunLog::disabled()),
        Some(p) if p == Path::new("-") => Ok(RunLog::stderr(command)),
        Some(p) => RunLog::to_file(command, p),
    }
}

impl Cli {
    pub fn run(self) -> Result<(), CliError> {
        match self.command {
            Command::Synth { common, manifest, out, generate, seed, corpus_seed } => {
                let mut cfg: SynthConfig = load_config(common.config.as_deref())?;
                if manifest.is_some() {
                    cfg.manifest = manifest;
                }
                set(&mut cfg.out_dir, out);
                set(&mut cfg.generate_per_snr, generate);
                set(&mut cfg.seed, seed);
                set(&mut cfg.corpus_seed, corpus_seed);
                set(&mut cfg.workers, common.workers);
                run_synth(&cfg, &open_log("synth", common.log.as_deref())?).map(drop)
            }
            Command::Enhance { common, manifest, out, methods } => {
                let mut cfg: EnhanceConfig = load_config(common.config.as_deref())?;
                set(&mut cfg.manifest, manifest);
                set(&mut cfg.out_dir, out);
                if !methods.is_empty() {
                    cfg.methods = methods;
                }
                set(&mut cfg.workers, common.workers);
                run_enhance(&cfg, &open_log("enhance", common.log.as_deref())?).map(drop)
            }
            Command::Tonepip {
                common,
                out,
                frequencies,
                sample_rate,
                ref_level_dbfs,
                n_pips,
                step_db,
                ascending,
                custom_frequency,
            } => {
                let mut cfg: TonePipConfig = load_config(common.config.as_deref())?;
                set(&mut cfg.out_dir, out);
                if !frequencies.is_empty() {
                    cfg.frequencies = frequencies;
                }
                set(&mut cfg.sample_rate, sample_rate);
                set(&mut cfg.spec.ref_level_dbfs, ref_level_dbfs);
                set(&mut cfg.spec.n_pips, n_pips);
                set(&mut cfg.spec.step_db, step_db);
                if ascending {
                    cfg.spec.order = SequenceOrder::Ascending;
                }
                cfg.spec.custom_frequency |= custom_frequency;
                run_tonepip(&cfg, &open_log("tonepip", common.log.as_deref())?).map(drop)
            }
            Command::Simulate { common, out, seed, listeners, in_range, session_seed } => {
                let mut cfg: SimulateConfig = load_config(common.config.as_deref())?;
                set(&mut cfg.out_dir, out);
                set(&mut cfg.cohort.seed, seed);
                set(&mut cfg.cohort.n_listeners, listeners);
                set(&mut cfg.cohort.n_in_range, in_range);
                set(&mut cfg.session_seed, session_seed);
                set(&mut cfg.workers, common.workers);
                run_simulate(&cfg, &open_log("simulate", common.log.as_deref())?).map(drop)
            }
            Command::Screen { common, input, out, rule } => {
                let mut cfg: ScreenConfig = load_config(common.config.as_deref())?;
                set(&mut cfg.input_dir, input);
                set(&mut cfg.out_dir, out);
                rule.apply(&mut cfg.rule);
                run_screen(&cfg, &open_log("screen", common.log.as_deref())?).map(drop)
            }
            Command::Analyze { common, input, out, rule, bootstrap } => {
                let mut cfg: AnalyzeConfig = load_config(common.config.as_deref())?;
                set(&mut cfg.input_dir, input);
                set(&mut cfg.out_dir, out);
                rule.apply(&mut cfg.rule);
                if let Some(resamples) = bootstrap {
                    cfg.fit.bootstrap = Some(Bootstrap { resamples, ..Bootstrap::default() });
                }
                run_analyze(&cfg, &open_log("analyze", common.log.as_deref())?).map(drop)
            }
            Command::Serve { common, host, port, data_dir, corpus } => {
                let mut cfg: ServeConfig = load_config(common.config.as_deref())?;
                set(&mut cfg.host, host);
                set(&mut cfg.port, port);
                set(&mut cfg.data_dir, data_dir);
                if corpus.is_some() {
                    cfg.corpus = corpus;
                }
                let log = match common.log.as_deref() {
                    None => RunLog::stderr("serve"),
                    p => open_log("serve", p)?,
                };
                run_serve(&cfg, &log)
            }
        }
    }
}

/// Parse arguments, run, and map failures to a non-zero exit status.
pub fn main() -> ExitCode {
    match Cli::parse().run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
