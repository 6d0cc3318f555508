use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, ServiceError};
use crate::enhance::EnhancementMethod;
use crate::scene::{SourcePosition, SNR_GRID_DB};

pub const BLOCK_SIZE: usize = 10;
pub const WORDS_PER_CELL: usize = 20;
pub const MAIN_STIMULI: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanOptions {
    pub words_per_cell: usize,
    pub block_size: usize,
    pub practice_size: usize,
    /// Number of separately scheduled task parts.
    pub task_parts: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            words_per_cell: WORDS_PER_CELL,
            block_size: BLOCK_SIZE,
            practice_size: 10,
            task_parts: 2,
        }
    }
}

/// One planned presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub index: usize,
    pub word_id: String,
    pub method: EnhancementMethod,
    pub snr_db: f64,
    pub position_id: usize,
    pub scene_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub participant_id: String,
    pub seed: u64,
    pub block_size: usize,
    /// Main stimuli in presentation order; block `b` is
    /// `stimuli[b * block_size..(b + 1) * block_size]`.
    pub stimuli: Vec<Stimulus>,
    pub practice: Vec<Stimulus>,
    /// First block index of each task part.
    pub part_starts: Vec<usize>,
}

impl SessionPlan {
    pub fn block_count(&self) -> usize {
        self.stimuli.len().div_ceil(self.block_size)
    }

    pub fn practice_block_count(&self) -> usize {
        self.practice.len().div_ceil(self.block_size)
    }

    pub fn block(&self, b: usize, practice: bool) -> &[Stimulus] {
        let list = if practice { &self.practice } else { &self.stimuli };
        let start = (b * self.block_size).min(list.len());
        &list[start..(start + self.block_size).min(list.len())]
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seeded assignment of the least familiar words to the method x SNR cells,
/// shuffled into blocks. Deterministic in `(participant_id, seed)`.
pub fn create_session(
    corpus: &Corpus,
    participant_id: &str,
    seed: u64,
    opts: &PlanOptions,
) -> Result<SessionPlan, ServiceError> {
    if participant_id.trim().is_empty() {
        return Err(ServiceError::BadRequest("participant_id is empty".into()));
    }
    if opts.block_size == 0 || opts.words_per_cell == 0 || opts.task_parts == 0 {
        return Err(ServiceError::BadRequest("plan sizes must be positive".into()));
    }
    corpus.validate()?;
    let cells: Vec<(EnhancementMethod, f64)> = EnhancementMethod::ALL
        .iter()
        .flat_map(|m| SNR_GRID_DB.iter().map(move |s| (*m, *s)))
        .collect();
    let needed = cells.len() * opts.words_per_cell;
    let mut pool = corpus.pool();
    if pool.len() < needed {
        return Err(ServiceError::InsufficientCorpus {
            needed,
            available: pool.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(participant_id) ^ seed.rotate_left(17));
    pool.shuffle(&mut rng);
    let (main_words, spare) = pool.split_at(needed);
    let positions = SourcePosition::presets();
    let mut stimuli: Vec<Stimulus> = main_words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let (method, snr_db) = cells[i / opts.words_per_cell];
            Stimulus {
                index: 0,
                word_id: w.word_id.clone(),
                method,
                snr_db,
                position_id: positions[rng.random_range(0..positions.len())].position_id,
                scene_seed: rng.random(),
            }
        })
        .collect();
    stimuli.shuffle(&mut rng);
    for (i, s) in stimuli.iter_mut().enumerate() {
        s.index = i;
    }

    let main_ids: std::collections::HashSet<&str> = main_words.iter().map(|w| w.word_id.as_str()).collect();
    let mut practice_pool: Vec<_> = spare.to_vec();
    let mut others: Vec<_> = corpus
        .entries
        .iter()
        .filter(|e| !main_ids.contains(e.word_id.as_str()) && !spare.iter().any(|s| s.word_id == e.word_id))
        .collect();
    others.shuffle(&mut rng);
    practice_pool.extend(others);
    if practice_pool.len() < opts.practice_size {
        return Err(ServiceError::InsufficientCorpus {
            needed: needed + opts.practice_size,
            available: needed + practice_pool.len(),
        });
    }
    let practice = practice_pool[..opts.practice_size]
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let (method, snr_db) = cells[rng.random_range(0..cells.len())];
            Stimulus {
                index: i,
                word_id: w.word_id.clone(),
                method,
                snr_db,
                position_id: positions[rng.random_range(0..positions.len())].position_id,
                scene_seed: rng.random(),
            }
        })
        .collect();

    let blocks = needed.div_ceil(opts.block_size);
    let part_starts = (0..opts.task_parts.min(blocks))
        .map(|p| p * blocks / opts.task_parts.min(blocks))
        .collect();
    Ok(SessionPlan {
        participant_id: participant_id.to_string(),
        seed,
        block_size: opts.block_size,
        stimuli,
        practice,
        part_starts,
    })
}
