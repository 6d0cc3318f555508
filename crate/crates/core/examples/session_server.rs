//! Serve the experiment API on 127.0.0.1:8080 with sessions under a temp
//! directory. Stop with ctrl-c.
//!
//! ```text
//! curl -X POST localhost:8080/sessions -H 'content-type: application/json' \
//!      -d '{"participant_id":"p01","seed":1}'
//! ```

use sitest::cli::{run_serve, RunLog, ServeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ServeConfig {
        data_dir: std::env::temp_dir().join("sitest_sessions"),
        ..ServeConfig::default()
    };
    run_serve(&cfg, &RunLog::stderr("serve"))?;
    Ok(())
}
