use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use super::session::{EventKind, SessionEvent, SessionState, SessionView, StimulusDescriptor, VolumeSetting};
use super::{create_session, export_results, Corpus, ExportBundle, Phase, PlanOptions, ServiceError, Stimulus};
use crate::tonepip::{DEFAULT_N_PIPS, PRESET_FREQUENCIES};

/// Milliseconds since the Unix epoch, or any monotone substitute.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

const EVENTS_FILE: &str = "events.ndjson";
const SNAPSHOT_FILE: &str = "snapshot.json";

struct Session {
    state: SessionState,
    events: Vec<SessionEvent>,
}

/// All sessions, each behind its own lock. With a data directory every event
/// is appended to `<dir>/<session_id>/events.ndjson` before it is applied.
pub struct SessionStore {
    corpus: Arc<Corpus>,
    plan_options: PlanOptions,
    tonepip_frequencies: Vec<u32>,
    n_pips: u32,
    data_dir: Option<PathBuf>,
    clock: Clock,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
}

fn system_clock() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn lock(m: &Mutex<Session>) -> MutexGuard<'_, Session> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn session_id(participant_id: &str, seed: u64) -> String {
    let clean: String = participant_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{clean}-{seed}")
}

impl SessionStore {
    pub fn new(corpus: Corpus) -> Result<Self, ServiceError> {
        corpus.validate()?;
        Ok(Self {
            corpus: Arc::new(corpus),
            plan_options: PlanOptions::default(),
            tonepip_frequencies: PRESET_FREQUENCIES.to_vec(),
            n_pips: DEFAULT_N_PIPS,
            data_dir: None,
            clock: Arc::new(system_clock),
            sessions: RwLock::new(BTreeMap::new()),
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_plan_options(mut self, opts: PlanOptions) -> Self {
        self.plan_options = opts;
        self
    }

    /// Persist to `dir`, replaying any sessions already stored there.
    pub fn with_data_dir(mut self, dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut loaded = BTreeMap::new();
        let mut entries: Vec<_> = fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let log = entry.path().join(EVENTS_FILE);
            if !log.is_file() {
                continue;
            }
            let events = read_log(&log)?;
            let state = SessionState::replay(&events).map_err(|message| ServiceError::CorruptLog {
                path: log.display().to_string(),
                line: events.len(),
                message,
            })?;
            loaded.insert(state.session_id.clone(), Arc::new(Mutex::new(Session { state, events })));
        }
        self.sessions = RwLock::new(loaded);
        self.data_dir = Some(dir);
        Ok(self)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect()
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }

    fn persist(&self, id: &str, event: &SessionEvent, state: Option<&SessionState>) -> Result<(), ServiceError> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let dir = dir.join(id);
        fs::create_dir_all(&dir)?;
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join(EVENTS_FILE))?;
        let line = serde_json::to_string(event).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        writeln!(f, "{line}")?;
        f.sync_data()?;
        if let Some(state) = state {
            let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
            fs::write(&tmp, serde_json::to_vec(state).map_err(|e| ServiceError::BadRequest(e.to_string()))?)?;
            fs::rename(tmp, dir.join(SNAPSHOT_FILE))?;
        }
        Ok(())
    }

    fn commit(&self, session: &mut Session, kind: EventKind) -> Result<(), ServiceError> {
        let event = SessionEvent {
            seq: session.events.len() as u64,
            at_ms: (self.clock)(),
            kind,
        };
        let mut next = session.state.clone();
        next.apply(&event.kind).map_err(ServiceError::BadRequest)?;
        let snapshot = matches!(event.kind, EventKind::PhaseAdvanced { .. } | EventKind::BlockAccepted { .. });
        self.persist(&next.session_id, &event, snapshot.then_some(&next))?;
        session.state = next;
        session.events.push(event);
        Ok(())
    }

    pub fn create(&self, participant_id: &str, seed: u64) -> Result<SessionView, ServiceError> {
        let plan = create_session(&self.corpus, participant_id, seed, &self.plan_options)?;
        let id = session_id(participant_id, seed);
        let mut map = self.sessions.write().unwrap_or_else(|e| e.into_inner());
        if map.contains_key(&id) {
            return Err(ServiceError::SessionExists(id));
        }
        let kind = EventKind::Created {
            session_id: id.clone(),
            plan,
            answer_rules: self.corpus.answer_rules,
            tonepip_frequencies: self.tonepip_frequencies.clone(),
            n_pips: self.n_pips,
        };
        let state = SessionState::from_created(&kind).expect("created event");
        let event = SessionEvent {
            seq: 0,
            at_ms: (self.clock)(),
            kind,
        };
        self.persist(&id, &event, Some(&state))?;
        let view = state.view();
        map.insert(id, Arc::new(Mutex::new(Session { state, events: vec![event] })));
        Ok(view)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, ServiceError> {
        let s = self.get(id)?;
        let guard = lock(&s);
        Ok(f(&guard))
    }

    pub fn view(&self, id: &str) -> Result<SessionView, ServiceError> {
        self.read(id, |s| s.state.view())
    }

    /// Full state including the plan; not for participant-facing clients.
    pub fn state(&self, id: &str) -> Result<SessionState, ServiceError> {
        self.read(id, |s| s.state.clone())
    }

    pub fn events(&self, id: &str) -> Result<Vec<SessionEvent>, ServiceError> {
        self.read(id, |s| s.events.clone())
    }

    pub fn record_volume(&self, id: &str, setting: VolumeSetting) -> Result<SessionView, ServiceError> {
        let s = self.get(id)?;
        let mut s = lock(&s);
        let kind = s.state.decide_volume(setting)?;
        self.commit(&mut s, kind)?;
        Ok(s.state.view())
    }

    pub fn advance(&self, id: &str, to: Phase) -> Result<SessionView, ServiceError> {
        let s = self.get(id)?;
        let mut s = lock(&s);
        let kind = s.state.decide_advance(to)?;
        self.commit(&mut s, kind)?;
        Ok(s.state.view())
    }

    pub fn submit_tonepip(&self, id: &str, frequency_hz: u32, n_pip: u32) -> Result<SessionView, ServiceError> {
        let s = self.get(id)?;
        let mut s = lock(&s);
        let kind = s.state.decide_tonepip(frequency_hz, n_pip)?;
        self.commit(&mut s, kind)?;
        Ok(s.state.view())
    }

    pub fn next_stimulus(&self, id: &str) -> Result<(StimulusDescriptor, Stimulus), ServiceError> {
        let s = self.get(id)?;
        let mut s = lock(&s);
        let (kind, desc) = s.state.decide_next()?;
        let stim = s.state.plan.block(desc.block, desc.practice)[desc.position_in_block].clone();
        self.commit(&mut s, kind)?;
        Ok((desc, stim))
    }

    pub fn served_stimulus(&self, id: &str, practice: bool, index: usize) -> Result<Stimulus, ServiceError> {
        self.read(id, |s| s.state.served_stimulus(practice, index).cloned())?
    }

    /// Accept a block; the last main block also closes the session.
    pub fn submit_answers(
        &self,
        id: &str,
        block: usize,
        answers: &[String],
        client_times_ms: Option<&[u64]>,
    ) -> Result<SessionView, ServiceError> {
        let s = self.get(id)?;
        let mut s = lock(&s);
        let kind = s.state.decide_answers(block, answers, client_times_ms, &self.corpus)?;
        self.commit(&mut s, kind)?;
        if s.state.main_complete() {
            let kind = s.state.decide_advance(Phase::Done)?;
            self.commit(&mut s, kind)?;
        }
        Ok(s.state.view())
    }

    /// Snapshot of every session's state, in id order.
    pub fn states(&self) -> Vec<SessionState> {
        let map = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        map.values().map(|s| lock(s).state.clone()).collect()
    }

    pub fn export(&self, allow_partial: bool) -> Result<ExportBundle, ServiceError> {
        export_results(&self.states(), allow_partial)
    }
}

fn read_log(path: &Path) -> Result<Vec<SessionEvent>, ServiceError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ServiceError::CorruptLog {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU64, Ordering};

    fn store() -> SessionStore {
        let tick = Arc::new(AtomicU64::new(0));
        SessionStore::new(Corpus::synthetic(400, 5))
            .unwrap()
            .with_clock(Arc::new(move || tick.fetch_add(1, Ordering::Relaxed)))
    }

    fn truth(store: &SessionStore, id: &str, practice: bool, block: usize) -> Vec<String> {
        let st = store.state(id).unwrap();
        st.plan
            .block(block, practice)
            .iter()
            .map(|s| store.corpus().get(&s.word_id).unwrap().transcript.clone())
            .collect()
    }

    fn serve_block(store: &SessionStore, id: &str) -> usize {
        let mut block = 0;
        loop {
            match store.next_stimulus(id) {
                Ok((d, _)) => block = d.block,
                Err(ServiceError::AnswersPending(b)) => return b.max(block),
                Err(e) => panic!("{e}"),
            }
        }
    }

    fn to_main(store: &SessionStore, id: &str) {
        store
            .record_volume(id, VolumeSetting { descriptor: "70%".into(), level: Some(0.7) })
            .unwrap();
        store.advance(id, Phase::Tonepip).unwrap();
        for f in PRESET_FREQUENCIES {
            store.submit_tonepip(id, f, 11).unwrap();
        }
        store.advance(id, Phase::Practice).unwrap();
        let b = serve_block(store, id);
        store.submit_answers(id, b, &truth(store, id, true, b), None).unwrap();
        store.advance(id, Phase::Main).unwrap();
    }

    #[test]
    fn phase_order_enforced() {
        let s = store();
        let id = s.create("p1", 1).unwrap().session_id;
        assert!(matches!(s.advance(&id, Phase::Practice), Err(ServiceError::PhaseOrder { .. })));
        assert!(matches!(s.advance(&id, Phase::Tonepip), Err(ServiceError::PhaseIncomplete(..))));
        assert!(matches!(s.next_stimulus(&id), Err(ServiceError::PhaseMismatch { .. })));
        assert!(matches!(s.submit_tonepip(&id, 1000, 3), Err(ServiceError::PhaseMismatch { .. })));
        assert!(matches!(s.create("p1", 1), Err(ServiceError::SessionExists(_))));
    }

    #[test]
    fn tonepip_rules() {
        let s = store();
        let id = s.create("p", 2).unwrap().session_id;
        s.record_volume(&id, VolumeSetting { descriptor: "max".into(), level: None }).unwrap();
        s.advance(&id, Phase::Tonepip).unwrap();
        let v = s.submit_tonepip(&id, 1000, 13).unwrap();
        assert_eq!(v.tonepip[0].listening_level_db, Some(60.0));
        assert!(matches!(s.submit_tonepip(&id, 500, 16), Err(ServiceError::TonePipCount { .. })));
        assert!(matches!(s.submit_tonepip(&id, 1000, 12), Err(ServiceError::TonePipDuplicate(1000))));
        assert!(matches!(s.submit_tonepip(&id, 3000, 2), Err(ServiceError::TonePipFrequency(3000))));
        assert!(matches!(s.advance(&id, Phase::Practice), Err(ServiceError::PhaseIncomplete(..))));
    }

    #[test]
    fn block_flow_and_validation() {
        let s = store();
        let id = s.create("p", 3).unwrap().session_id;
        to_main(&s, &id);
        let (d, _) = s.next_stimulus(&id).unwrap();
        assert_eq!((d.index, d.practice), (0, false));
        let answers = truth(&s, &id, false, 0);
        assert!(matches!(
            s.submit_answers(&id, 0, &answers, None),
            Err(ServiceError::BlockNotServed { served: 1, .. })
        ));
        assert_eq!(serve_block(&s, &id), 0);
        assert!(matches!(s.next_stimulus(&id), Err(ServiceError::AnswersPending(0))));
        assert!(matches!(s.submit_answers(&id, 0, &answers[..9], None), Err(ServiceError::AnswerArity { .. })));
        let mut bad = answers.clone();
        bad[3] = "  ".into();
        match s.submit_answers(&id, 0, &bad, None) {
            Err(ServiceError::InvalidAnswers(f)) => assert_eq!(f[0].position, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(s.submit_answers(&id, 1, &answers, None), Err(ServiceError::WrongBlock { .. })));
        s.submit_answers(&id, 0, &answers, Some(&[5; 10])).unwrap();
        assert!(matches!(s.submit_answers(&id, 0, &answers, None), Err(ServiceError::BlockAlreadyAccepted(0))));
        let (d, _) = s.next_stimulus(&id).unwrap();
        assert_eq!(d.index, 10);
        let st = s.state(&id).unwrap();
        assert!(st.answers.iter().filter(|a| !a.practice).all(|a| a.correct));
    }

    #[test]
    fn full_session_reaches_done_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let s = store().with_data_dir(dir.path()).unwrap();
        let id = s.create("p9", 4).unwrap().session_id;
        to_main(&s, &id);
        for _ in 0..40 {
            let b = serve_block(&s, &id);
            let mut a = truth(&s, &id, false, b);
            a[0] = "zzzz".into();
            s.submit_answers(&id, b, &a, None).unwrap();
        }
        let st = s.state(&id).unwrap();
        assert_eq!(st.phase, Phase::Done);
        assert!(matches!(s.next_stimulus(&id), Err(ServiceError::SessionDone)));
        assert_eq!(st.answers.iter().filter(|a| !a.practice).count(), 400);
        assert_eq!(SessionState::replay(&s.events(&id).unwrap()).unwrap(), st);

        let reopened = SessionStore::new(Corpus::synthetic(400, 5))
            .unwrap()
            .with_data_dir(dir.path())
            .unwrap();
        assert_eq!(reopened.state(&id).unwrap(), st);
        let snap: SessionState =
            serde_json::from_slice(&fs::read(dir.path().join(&id).join(SNAPSHOT_FILE)).unwrap()).unwrap();
        assert_eq!(snap, st);
    }

    #[test]
    fn served_audio_access() {
        let s = store();
        let id = s.create("p", 6).unwrap().session_id;
        to_main(&s, &id);
        assert!(s.served_stimulus(&id, false, 0).is_err());
        s.next_stimulus(&id).unwrap();
        assert!(s.served_stimulus(&id, false, 0).is_ok());
        assert!(s.served_stimulus(&id, false, 1).is_err());
        assert!(s.served_stimulus(&id, true, 3).is_ok());
    }

    #[test]
    fn corrupt_log_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let s = store().with_data_dir(dir.path()).unwrap();
        let id = s.create("p", 7).unwrap().session_id;
        let log = dir.path().join(&id).join(EVENTS_FILE);
        let mut text = fs::read_to_string(&log).unwrap();
        text.push_str("{not json}\n");
        fs::write(&log, text).unwrap();
        match SessionStore::new(Corpus::synthetic(400, 5)).unwrap().with_data_dir(dir.path()) {
            Err(ServiceError::CorruptLog { line, .. }) => assert_eq!(line, 2),
            other => panic!("{:?}", other.err()),
        }
    }
}
