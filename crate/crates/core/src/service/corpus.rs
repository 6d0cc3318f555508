use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::psycho::normalize_answer;
use crate::scene::synthetic_lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    /// Hiragana or katakana only.
    Kana,
    /// ASCII letters only.
    Ascii,
}

/// Per-answer validation applied by the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRules {
    pub script: Script,
    pub min_chars: usize,
    pub max_chars: usize,
}

impl AnswerRules {
    pub fn kana() -> Self {
        Self {
            script: Script::Kana,
            min_chars: 3,
            max_chars: 6,
        }
    }

    /// Four romanized morae span 4 to 8 letters.
    pub fn ascii() -> Self {
        Self {
            script: Script::Ascii,
            min_chars: 4,
            max_chars: 8,
        }
    }

    /// `None` when the answer is acceptable, else a reason.
    pub fn check(&self, raw: &str) -> Option<String> {
        let norm = normalize_answer(raw);
        if norm.is_empty() {
            return Some("answer is empty".into());
        }
        let ok_char = |c: char| match self.script {
            Script::Kana => matches!(c, '\u{3041}'..='\u{3096}' | 'ー'),
            Script::Ascii => c.is_ascii_lowercase(),
        };
        if let Some(c) = norm.chars().find(|c| !ok_char(*c)) {
            return Some(format!("character {c:?} is not allowed"));
        }
        let n = norm.chars().count();
        if n < self.min_chars || n > self.max_chars {
            return Some(format!(
                "{n} characters; expected {} to {}",
                self.min_chars, self.max_chars
            ));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub word_id: String,
    pub transcript: String,
    /// 1 is the least familiar rank.
    pub familiarity_rank: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    pub answer_rules: AnswerRules,
}

impl Corpus {
    /// Four ranks of `words_per_rank` synthetic ASCII words.
    pub fn synthetic(words_per_rank: usize, seed: u64) -> Self {
        let words = synthetic_lexicon(4 * words_per_rank, seed);
        let entries = words
            .into_iter()
            .enumerate()
            .map(|(i, transcript)| CorpusEntry {
                word_id: format!("w{i:05}"),
                transcript,
                familiarity_rank: (i / words_per_rank.max(1)) as u8 + 1,
                audio: None,
            })
            .collect();
        Self {
            entries,
            answer_rules: AnswerRules::ascii(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let corpus: Corpus = serde_json::from_str(&text).map_err(|e| {
            ServiceError::InvalidCorpus(format!("{}: line {}: {e}", path.as_ref().display(), e.line()))
        })?;
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let mut ids = HashSet::new();
        for e in &self.entries {
            if !ids.insert(e.word_id.as_str()) {
                return Err(ServiceError::InvalidCorpus(format!("duplicate word_id `{}`", e.word_id)));
            }
            if normalize_answer(&e.transcript).is_empty() {
                return Err(ServiceError::InvalidCorpus(format!("word `{}` has an empty transcript", e.word_id)));
            }
        }
        if self.answer_rules.min_chars > self.answer_rules.max_chars {
            return Err(ServiceError::InvalidCorpus("min_chars exceeds max_chars".into()));
        }
        Ok(())
    }

    /// Entries of the least familiar rank present.
    pub fn pool(&self) -> Vec<&CorpusEntry> {
        let Some(rank) = self.entries.iter().map(|e| e.familiarity_rank).min() else {
            return Vec::new();
        };
        self.entries.iter().filter(|e| e.familiarity_rank == rank).collect()
    }

    pub fn get(&self, word_id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.word_id == word_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_corpus_shape() {
        let c = Corpus::synthetic(400, 1);
        assert_eq!(c.entries.len(), 1600);
        assert_eq!(c.pool().len(), 400);
        c.validate().unwrap();
        let rules = c.answer_rules;
        assert!(c.entries.iter().all(|e| rules.check(&e.transcript).is_none()));
    }

    #[test]
    fn kana_rules() {
        let r = AnswerRules::kana();
        assert!(r.check("さくらもち").is_none());
        assert!(r.check("サクラ").is_none());
        assert!(r.check("").is_some());
        assert!(r.check("sakura").is_some());
        assert!(r.check("さく").is_some());
        assert!(r.check("さくらもちもち").is_some());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut c = Corpus::synthetic(2, 0);
        c.entries[1].word_id = c.entries[0].word_id.clone();
        assert!(c.validate().is_err());
    }

    #[test]
    fn load_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"entries\": [],\n  \"answer_rules\": 3\n}").unwrap();
        let err = Corpus::load(&p).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
