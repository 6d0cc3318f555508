use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, io_err, require_file, CliError, RunLog};
use crate::service::http::{serve, AppState};
use crate::service::{Corpus, SessionStore, SynthStimulusSource};

/// Environment variable read by the `serve` subcommand for `data_dir`.
pub const DATA_DIR_ENV: &str = "SITEST_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeConfig {
    pub host: IpAddr,
    pub port: u16,
    /// Session logs and snapshots.
    pub data_dir: PathBuf,
    /// Corpus JSON; a synthetic corpus is used when absent.
    pub corpus: Option<PathBuf>,
    pub corpus_seed: u64,
    pub babble_seed: u64,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: PathBuf::from("sessions"),
            corpus: None,
            corpus_seed: 0,
            babble_seed: 0,
        }
    }
}

impl ServeConfig {
    pub fn app_state(&self) -> Result<AppState, CliError> {
        let corpus = match &self.corpus {
            Some(path) => {
                require_file(path)?;
                Corpus::load(path)?
            }
            None => Corpus::synthetic(400, self.corpus_seed),
        };
        create_dir(&self.data_dir)?;
        let store = SessionStore::new(corpus)?.with_data_dir(&self.data_dir)?;
        let source = SynthStimulusSource::with_babble_seed(self.babble_seed);
        Ok(AppState {
            store: Arc::new(store),
            source: Arc::new(source),
        })
    }
}

/// Blocks until ctrl-c.
pub fn run_serve(cfg: &ServeConfig, log: &RunLog) -> Result<(), CliError> {
    let state = cfg.app_state()?;
    let addr = SocketAddr::new(cfg.host, cfg.port);
    log.event("listening", json!({ "addr": addr.to_string(), "data_dir": cfg.data_dir }));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err(&cfg.data_dir))?;
    rt.block_on(serve(state, addr)).map_err(|source| CliError::Io {
        path: addr.to_string(),
        source,
    })?;
    log.event("stopped", json!({}));
    Ok(())
}
