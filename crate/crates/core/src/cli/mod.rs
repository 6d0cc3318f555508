//! Batch entry points. Each command is a library function taking a serde
//! config; the `sitest` binary only parses flags into these configs.

mod args;
mod audio;
mod experiment;
mod serve;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::dsp::DspError;
use crate::enhance::EnhanceError;
use crate::psycho::PsychError;
use crate::scene::SceneError;
use crate::service::ServiceError;
use crate::tonepip::TonePipError;

pub use args::{main, Cli, Command};
pub use audio::{generate_manifest, run_enhance, run_synth, run_tonepip, EnhanceConfig, SynthConfig, TonePipConfig};
pub use experiment::{
    analyze_bundle, run_analyze, run_screen, run_simulate, screen_bundle, simulate_sessions, AnalyzeConfig, Analysis,
    FitRow, PlotCurve, ScreenConfig, SimulateConfig,
};
pub use serve::{run_serve, ServeConfig, DATA_DIR_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("missing input {0}")]
    MissingInput(PathBuf),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Enhance(#[from] EnhanceError),
    #[error(transparent)]
    TonePip(#[from] TonePipError),
    #[error(transparent)]
    Psych(#[from] PsychError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

/// Read a JSON config, or the default when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    require_file(path)?;
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// Machine-readable NDJSON run log. Entries carry no timestamps so logs of
/// identical runs are identical.
pub struct RunLog {
    command: String,
    sink: Option<Mutex<Box<dyn Write + Send>>>,
}

impl RunLog {
    pub fn to_file(command: &str, path: &Path) -> Result<Self, CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        let f = File::create(path).map_err(io_err(path))?;
        Ok(Self {
            command: command.to_string(),
            sink: Some(Mutex::new(Box::new(BufWriter::new(f)))),
        })
    }

    pub fn stderr(command: &str) -> Self {
        Self {
            command: command.to_string(),
            sink: Some(Mutex::new(Box::new(std::io::stderr()))),
        }
    }

    pub fn disabled() -> Self {
        Self {
            command: String::new(),
            sink: None,
        }
    }

    pub fn event(&self, event: &str, fields: Value) {
        let Some(sink) = &self.sink else {
            return;
        };
        let mut obj = serde_json::Map::new();
        obj.insert("command".into(), Value::String(self.command.clone()));
        obj.insert("event".into(), Value::String(event.into()));
        if let Value::Object(extra) = fields {
            obj.extend(extra);
        }
        let mut w = sink.lock().unwrap_or_else(|e| e.into_inner());
        let _ = writeln!(w, "{}", Value::Object(obj));
        let _ = w.flush();
    }

    pub fn wrote(&self, path: &Path) {
        self.event("wrote", serde_json::json!({ "path": path.display().to_string() }));
    }
}

/// Run `f` on a pool of `workers` threads (0 = rayon default).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(pool.install(f))
}
