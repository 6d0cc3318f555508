use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SceneError, DEFAULT_MIC_SPACING_CM, DEFAULT_REVERB_TIME_S};

fn default_spacing() -> f64 {
    DEFAULT_MIC_SPACING_CM
}

fn default_reverb() -> f64 {
    DEFAULT_REVERB_TIME_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BabbleSpec {
    pub n_talkers: usize,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for BabbleSpec {
    fn default() -> Self {
        Self {
            n_talkers: 16,
            duration_s: 30.0,
            seed: 0,
        }
    }
}

/// One stimulus to render. Paths are relative to the manifest file unless
/// absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub word_id: String,
    /// Romanized transcript; looked up in the synthetic corpus when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    pub position_id: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub mixture: PathBuf,
    pub speech: PathBuf,
    pub noise: PathBuf,
    /// Recorded clean word to use instead of synthesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean: Option<PathBuf>,
    /// Measured two-channel impulse response to use instead of synthesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    #[serde(default = "default_spacing")]
    pub mic_spacing_cm: f64,
    #[serde(default = "default_reverb")]
    pub reverb_time_s: f64,
    #[serde(default)]
    pub babble: BabbleSpec,
    #[serde(default)]
    pub corpus_seed: u64,
    pub scenes: Vec<SceneEntry>,
}

impl SceneManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut m: SceneManifest = serde_json::from_str(&text).map_err(|e| SceneError::Manifest {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if let Some(dir) = path.parent() {
            m.resolve_paths(dir);
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SceneError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| SceneError::Manifest {
            path: path.as_ref().display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for s in &mut self.scenes {
            fix(&mut s.mixture);
            fix(&mut s.speech);
            fix(&mut s.noise);
            if let Some(c) = s.clean.as_mut() {
                fix(c);
            }
            if let Some(c) = s.ir.as_mut() {
                fix(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(
            &p,
            r#"{"scenes":[{"word_id":"w0001","position_id":4,"snr_db":-9,"seed":1,
                "mixture":"out/mix.wav","speech":"out/s.wav","noise":"/abs/n.wav"}]}"#,
        )
        .unwrap();
        let m = SceneManifest::load(&p).unwrap();
        assert_eq!(m.mic_spacing_cm, 4.0);
        assert_eq!(m.reverb_time_s, 0.36);
        assert_eq!(m.scenes[0].mixture, dir.path().join("out/mix.wav"));
        assert_eq!(m.scenes[0].noise, PathBuf::from("/abs/n.wav"));
    }

    #[test]
    fn reports_line_of_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "{\n\"scenes\": [\n{\"word_id\": 3}]}").unwrap();
        match SceneManifest::load(&p) {
            Err(SceneError::Manifest { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
