use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sitest::cli::analyze_bundle;
use sitest::enhance::EnhancementMethod;
use sitest::psycho::{build_cohort, simulate_tonepip_response, simulate_word_response, CohortSpec, FitOptions};
use sitest::service::{Corpus, ExportBundle, Phase, SessionStore, VolumeSetting};
use sitest::tonepip::{ScreeningRule, TonePipSequenceSpec, PRESET_FREQUENCIES};

fn open(dir: &std::path::Path) -> SessionStore {
    SessionStore::new(Corpus::synthetic(400, 11)).unwrap().with_data_dir(dir).unwrap()
}

fn answer_block(store: &SessionStore, id: &str, profile: &sitest::psycho::ListenerProfile, rng: &mut ChaCha8Rng) {
    let mut served = Vec::new();
    let mut block = 0;
    while let Ok((d, stim)) = store.next_stimulus(id) {
        block = d.block;
        served.push(stim);
    }
    let answers: Vec<String> = served
        .iter()
        .map(|s| {
            let truth = store.corpus().get(&s.word_id).unwrap().transcript.clone();
            if simulate_word_response(profile, s.method, s.snr_db, rng).unwrap() {
                truth
            } else {
                format!("{}q", &truth[..truth.len() - 1])
            }
        })
        .collect();
    store.submit_answers(id, block, &answers, None).unwrap();
}

/// Sessions persisted to disk, interrupted, reopened and finished, then
/// exported, re-read and analysed.
#[test]
fn persisted_sessions_through_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CohortSpec {
        n_listeners: 8,
        n_in_range: 6,
        seed: 5,
        ..CohortSpec::default()
    };
    let cohort = build_cohort(&spec).unwrap();
    let mut ids = Vec::new();
    {
        let store = open(dir.path());
        for l in &cohort {
            let p = &l.profile;
            let id = store.create(&p.participant_id, 3).unwrap().session_id;
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            store.record_volume(&id, VolumeSetting { descriptor: "75%".into(), level: Some(0.75) }).unwrap();
            store.advance(&id, Phase::Tonepip).unwrap();
            for f in PRESET_FREQUENCIES {
                let n = simulate_tonepip_response(p, &TonePipSequenceSpec::at(f), spec.l_ref_db);
                store.submit_tonepip(&id, f, n).unwrap();
            }
            store.advance(&id, Phase::Practice).unwrap();
            answer_block(&store, &id, p, &mut rng);
            store.advance(&id, Phase::Main).unwrap();
            for _ in 0..15 {
                answer_block(&store, &id, p, &mut rng);
            }
            ids.push(id);
        }
        assert!(store.export(false).is_err());
        assert_eq!(store.export(true).unwrap().answers.len(), 8 * 150);
    }

    let store = open(dir.path());
    assert_eq!(store.session_ids().len(), 8);
    for (l, id) in cohort.iter().zip(&ids) {
        let view = store.view(id).unwrap();
        assert_eq!((view.phase, view.main_blocks_done), (Phase::Main, 15));
        // the rng stream restarts, which only changes which words are missed
        let mut rng = ChaCha8Rng::seed_from_u64(l.profile.seed ^ 1);
        while store.view(id).unwrap().phase == Phase::Main {
            answer_block(&store, id, &l.profile, &mut rng);
        }
        assert_eq!(store.view(id).unwrap().phase, Phase::Done);
    }

    let bundle = store.export(false).unwrap();
    let out = dir.path().join("export");
    bundle.write(&out).unwrap();
    let reread = ExportBundle::read(&out).unwrap();
    assert_eq!(reread, bundle);
    assert!(reread.tonepip.iter().all(|t| t.volume.as_deref() == Some("75%")));

    let analysis = analyze_bundle(&reread, &ScreeningRule::default(), &FitOptions::default()).unwrap();
    assert_eq!(analysis.screening.kept.len(), 6);
    let mean: BTreeMap<EnhancementMethod, f64> = analysis.summary.iter().map(|s| (s.method, s.mean_db)).collect();
    assert!(mean[&EnhancementMethod::Mvdr2chIrm] < mean[&EnhancementMethod::Unprocessed]);
    assert!(mean[&EnhancementMethod::Mvdr2chEst] < mean[&EnhancementMethod::Unprocessed]);
    assert!(analysis.summary.iter().all(|s| s.n <= 6));
}
