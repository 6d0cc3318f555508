use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnswerRules, Corpus, ServiceError, SessionPlan, Stimulus};
use crate::enhance::EnhancementMethod;
use crate::psycho::score_answer;
use crate::tonepip::TonePipResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    Tonepip,
    Practice,
    Main,
    Done,
}

impl Phase {
    pub fn next(self) -> Option<Phase> {
        match self {
            Phase::Setup => Some(Phase::Tonepip),
            Phase::Tonepip => Some(Phase::Practice),
            Phase::Practice => Some(Phase::Main),
            Phase::Main => Some(Phase::Done),
            Phase::Done => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::Tonepip => "tonepip",
            Phase::Practice => "practice",
            Phase::Main => "main",
            Phase::Done => "done",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Device volume as reported by the participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSetting {
    pub descriptor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}

/// Validation failure for one answer field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub position: usize,
    pub message: String,
}

/// A stored, scored answer. Never modified once its block is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub practice: bool,
    pub stimulus_index: usize,
    pub block: usize,
    pub word_id: String,
    pub method: EnhancementMethod,
    pub snr_db: f64,
    pub response: String,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_time_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        session_id: String,
        plan: SessionPlan,
        answer_rules: AnswerRules,
        tonepip_frequencies: Vec<u32>,
        n_pips: u32,
    },
    VolumeRecorded {
        setting: VolumeSetting,
    },
    PhaseAdvanced {
        from: Phase,
        to: Phase,
    },
    TonePipSubmitted {
        result: TonePipResult,
    },
    StimulusServed {
        practice: bool,
        index: usize,
    },
    BlockAccepted {
        practice: bool,
        block: usize,
        answers: Vec<AnswerRecord>,
    },
}

/// One line of a session's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub at_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// What a client may learn about the next stimulus: no transcript and no
/// condition label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusDescriptor {
    pub practice: bool,
    pub index: usize,
    pub block: usize,
    pub position_in_block: usize,
    pub block_size: usize,
}

/// Client-safe summary of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub participant_id: String,
    pub phase: Phase,
    pub block_size: usize,
    pub practice_blocks_total: usize,
    pub practice_blocks_done: usize,
    pub main_blocks_total: usize,
    pub main_blocks_done: usize,
    pub served_in_block: usize,
    pub next_index: usize,
    pub tonepip_frequencies: Vec<u32>,
    pub tonepip: Vec<TonePipResult>,
    pub volume: Option<VolumeSetting>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub plan: SessionPlan,
    pub answer_rules: AnswerRules,
    pub tonepip_frequencies: Vec<u32>,
    pub n_pips: u32,
    pub phase: Phase,
    /// First index of the current unanswered block in the active list.
    pub cursor: usize,
    pub practice_cursor: usize,
    pub served_in_block: usize,
    pub answers: Vec<AnswerRecord>,
    pub tonepip: Vec<TonePipResult>,
    pub volume: Option<VolumeSetting>,
}

impl SessionState {
    /// Rebuild state from a complete event log.
    pub fn replay(events: &[SessionEvent]) -> Result<SessionState, String> {
        let (first, rest) = events.split_first().ok_or("empty event log")?;
        let mut state = SessionState::from_created(&first.kind).ok_or("log does not start with a created event")?;
        for e in rest {
            state.apply(&e.kind)?;
        }
        Ok(state)
    }

    pub fn from_created(kind: &EventKind) -> Option<SessionState> {
        match kind {
            EventKind::Created {
                session_id,
                plan,
                answer_rules,
                tonepip_frequencies,
                n_pips,
            } => Some(SessionState {
                session_id: session_id.clone(),
                plan: plan.clone(),
                answer_rules: *answer_rules,
                tonepip_frequencies: tonepip_frequencies.clone(),
                n_pips: *n_pips,
                phase: Phase::Setup,
                cursor: 0,
                practice_cursor: 0,
                served_in_block: 0,
                answers: Vec::new(),
                tonepip: Vec::new(),
                volume: None,
            }),
            _ => None,
        }
    }

    pub fn apply(&mut self, kind: &EventKind) -> Result<(), String> {
        match kind {
            EventKind::Created { .. } => return Err("duplicate created event".into()),
            EventKind::VolumeRecorded { setting } => self.volume = Some(setting.clone()),
            EventKind::PhaseAdvanced { from, to } => {
                if *from != self.phase || self.phase.next() != Some(*to) {
                    return Err(format!("illegal transition {from} -> {to} in phase {}", self.phase));
                }
                self.phase = *to;
                self.served_in_block = 0;
            }
            EventKind::TonePipSubmitted { result } => self.tonepip.push(result.clone()),
            EventKind::StimulusServed { practice, index } => {
                if *index != self.active_cursor(*practice) + self.served_in_block {
                    return Err(format!("stimulus {index} served out of order"));
                }
                self.served_in_block += 1;
            }
            EventKind::BlockAccepted { practice, answers, .. } => {
                self.answers.extend(answers.iter().cloned());
                let c = if *practice {
                    &mut self.practice_cursor
                } else {
                    &mut self.cursor
                };
                *c += answers.len();
                self.served_in_block = 0;
            }
        }
        Ok(())
    }

    fn active_cursor(&self, practice: bool) -> usize {
        if practice {
            self.practice_cursor
        } else {
            self.cursor
        }
    }

    fn list(&self, practice: bool) -> &[Stimulus] {
        if practice {
            &self.plan.practice
        } else {
            &self.plan.stimuli
        }
    }

    fn block_size(&self) -> usize {
        self.plan.block_size
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn view(&self) -> SessionView {
        let bs = self.block_size();
        SessionView {
            session_id: self.session_id.clone(),
            participant_id: self.plan.participant_id.clone(),
            phase: self.phase,
            block_size: bs,
            practice_blocks_total: self.plan.practice_block_count(),
            practice_blocks_done: self.practice_cursor.div_ceil(bs),
            main_blocks_total: self.plan.block_count(),
            main_blocks_done: self.cursor.div_ceil(bs),
            served_in_block: self.served_in_block,
            next_index: self.active_cursor(self.phase == Phase::Practice) + self.served_in_block,
            tonepip_frequencies: self.tonepip_frequencies.clone(),
            tonepip: self.tonepip.clone(),
            volume: self.volume.clone(),
        }
    }

    fn require(&self, phase: Phase) -> Result<(), ServiceError> {
        if self.phase == Phase::Done && phase != Phase::Done {
            return Err(ServiceError::SessionDone);
        }
        if self.phase != phase {
            return Err(ServiceError::PhaseMismatch {
                expected: phase.to_string(),
                actual: self.phase,
            });
        }
        Ok(())
    }

    pub fn decide_volume(&self, setting: VolumeSetting) -> Result<EventKind, ServiceError> {
        self.require(Phase::Setup)?;
        if setting.descriptor.trim().is_empty() {
            return Err(ServiceError::BadRequest("volume descriptor is empty".into()));
        }
        Ok(EventKind::VolumeRecorded { setting })
    }

    pub fn decide_advance(&self, to: Phase) -> Result<EventKind, ServiceError> {
        if self.phase.next() != Some(to) {
            return Err(ServiceError::PhaseOrder { from: self.phase, to });
        }
        let incomplete = |why: String| Err(ServiceError::PhaseIncomplete(self.phase, why));
        match self.phase {
            Phase::Setup if self.volume.is_none() => return incomplete("no volume setting recorded".into()),
            Phase::Tonepip if self.tonepip.len() < self.tonepip_frequencies.len() => {
                return incomplete(format!(
                    "{} of {} tone-pip counts submitted",
                    self.tonepip.len(),
                    self.tonepip_frequencies.len()
                ))
            }
            Phase::Practice if self.practice_cursor < self.plan.practice.len() => {
                return incomplete("practice blocks remain".into())
            }
            Phase::Main if self.cursor < self.plan.stimuli.len() => return incomplete("main blocks remain".into()),
            _ => {}
        }
        Ok(EventKind::PhaseAdvanced { from: self.phase, to })
    }

    pub fn decide_tonepip(&self, frequency_hz: u32, n_pip: u32) -> Result<EventKind, ServiceError> {
        self.require(Phase::Tonepip)?;
        if !self.tonepip_frequencies.contains(&frequency_hz) {
            return Err(ServiceError::TonePipFrequency(frequency_hz));
        }
        if self.tonepip.iter().any(|r| r.frequency_hz == frequency_hz) {
            return Err(ServiceError::TonePipDuplicate(frequency_hz));
        }
        let result = TonePipResult::new(frequency_hz, n_pip, self.n_pips).map_err(|_| ServiceError::TonePipCount {
            n_pip,
            max: self.n_pips,
        })?;
        Ok(EventKind::TonePipSubmitted { result })
    }

    fn active_practice(&self) -> Result<bool, ServiceError> {
        match self.phase {
            Phase::Practice => Ok(true),
            Phase::Main => Ok(false),
            Phase::Done => Err(ServiceError::SessionDone),
            actual => Err(ServiceError::PhaseMismatch {
                expected: "practice or main".into(),
                actual,
            }),
        }
    }

    pub fn decide_next(&self) -> Result<(EventKind, StimulusDescriptor), ServiceError> {
        let practice = self.active_practice()?;
        let list = self.list(practice);
        let cursor = self.active_cursor(practice);
        if cursor >= list.len() {
            return Err(ServiceError::PhaseIncomplete(
                self.phase,
                "every block is answered; advance the phase".into(),
            ));
        }
        let bs = self.block_size();
        let block = cursor / bs;
        let block_len = self.plan.block(block, practice).len();
        if self.served_in_block >= block_len {
            return Err(ServiceError::AnswersPending(block));
        }
        let index = cursor + self.served_in_block;
        Ok((
            EventKind::StimulusServed { practice, index },
            StimulusDescriptor {
                practice,
                index,
                block,
                position_in_block: self.served_in_block,
                block_size: block_len,
            },
        ))
    }

    /// A stimulus the participant has already been served.
    pub fn served_stimulus(&self, practice: bool, index: usize) -> Result<&Stimulus, ServiceError> {
        let list = self.list(practice);
        let in_current = practice == (self.phase == Phase::Practice)
            && matches!(self.phase, Phase::Practice | Phase::Main)
            && index < self.active_cursor(practice) + self.served_in_block;
        let answered = index < self.active_cursor(practice);
        if index >= list.len() || !(in_current || answered) {
            return Err(ServiceError::StimulusNotServed(index));
        }
        Ok(&list[index])
    }

    pub fn decide_answers(
        &self,
        block: usize,
        answers: &[String],
        client_times_ms: Option<&[u64]>,
        corpus: &Corpus,
    ) -> Result<EventKind, ServiceError> {
        let practice = self.active_practice()?;
        let bs = self.block_size();
        let cursor = self.active_cursor(practice);
        let current = cursor / bs;
        if block < current {
            return Err(ServiceError::BlockAlreadyAccepted(block));
        }
        if block != current || cursor >= self.list(practice).len() {
            return Err(ServiceError::WrongBlock { expected: current, got: block });
        }
        let stimuli = self.plan.block(block, practice);
        if self.served_in_block < stimuli.len() {
            return Err(ServiceError::BlockNotServed {
                block,
                served: self.served_in_block,
                size: stimuli.len(),
            });
        }
        if answers.len() != stimuli.len() {
            return Err(ServiceError::AnswerArity {
                expected: stimuli.len(),
                got: answers.len(),
            });
        }
        if let Some(t) = client_times_ms {
            if t.len() != answers.len() {
                return Err(ServiceError::BadRequest("client_times_ms must match the answers".into()));
            }
        }
        let field_errors: Vec<FieldError> = answers
            .iter()
            .enumerate()
            .filter_map(|(position, a)| {
                self.answer_rules.check(a).map(|message| FieldError { position, message })
            })
            .collect();
        if !field_errors.is_empty() {
            return Err(ServiceError::InvalidAnswers(field_errors));
        }
        let mut records = Vec::with_capacity(answers.len());
        for (i, (s, a)) in stimuli.iter().zip(answers).enumerate() {
            let truth = corpus
                .get(&s.word_id)
                .ok_or_else(|| ServiceError::InvalidCorpus(format!("word `{}` missing from corpus", s.word_id)))?;
            records.push(AnswerRecord {
                practice,
                stimulus_index: s.index,
                block,
                word_id: s.word_id.clone(),
                method: s.method,
                snr_db: s.snr_db,
                response: a.clone(),
                correct: score_answer(a, &truth.transcript)
                    .map_err(|e| ServiceError::InvalidCorpus(e.to_string()))?,
                client_time_ms: client_times_ms.map(|t| t[i]),
            });
        }
        Ok(EventKind::BlockAccepted {
            practice,
            block,
            answers: records,
        })
    }

    /// True when the last main block has been accepted but the phase is
    /// still `main`.
    pub fn main_complete(&self) -> bool {
        self.phase == Phase::Main && self.cursor >= self.plan.stimuli.len()
    }
}
