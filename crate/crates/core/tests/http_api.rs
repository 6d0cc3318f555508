use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sitest::dsp::AudioBuffer;
use sitest::service::http::{router, AppState};
use sitest::service::{Corpus, ServiceError, SessionStore, Stimulus, StimulusSource, SynthStimulusSource};

struct Click;

impl StimulusSource for Click {
    fn render(&self, _: &Stimulus, _: &str) -> Result<AudioBuffer, ServiceError> {
        Ok(AudioBuffer::mono(vec![0.0, 0.5, 0.0], 48000).unwrap())
    }
}

fn app_with(source: Arc<dyn StimulusSource>) -> (Router, Arc<SessionStore>) {
    let store = Arc::new(SessionStore::new(Corpus::synthetic(400, 3)).unwrap());
    (router(AppState { store: store.clone(), source }), store)
}

fn app() -> (Router, Arc<SessionStore>) {
    app_with(Arc::new(Click))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn create(app: &Router, pid: &str) -> String {
    let (s, v) = json_call(app, Method::POST, "/sessions", Some(json!({"participant_id": pid, "seed": 7}))).await;
    assert_eq!(s, StatusCode::CREATED);
    v["session_id"].as_str().unwrap().to_string()
}

async fn to_practice(app: &Router, id: &str) {
    let (s, _) = json_call(app, Method::PUT, &format!("/sessions/{id}/volume"), Some(json!({"descriptor": "60%"}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = json_call(app, Method::POST, &format!("/sessions/{id}/phase"), Some(json!({"to": "tonepip"}))).await;
    assert_eq!(s, StatusCode::OK);
    for f in [500, 1000, 2000, 4000] {
        let (s, _) =
            json_call(app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": f, "n_pip": 11}))).await;
        assert_eq!(s, StatusCode::OK);
    }
    let (s, v) = json_call(app, Method::POST, &format!("/sessions/{id}/phase"), Some(json!({"to": "practice"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["phase"], "practice");
}

/// Serve a whole block and return the correct transcripts.
async fn serve_block(app: &Router, store: &SessionStore, id: &str) -> (usize, Vec<String>) {
    let mut served = Vec::new();
    let mut block = 0;
    loop {
        let (s, v) = json_call(app, Method::POST, &format!("/sessions/{id}/next"), None).await;
        if s == StatusCode::CONFLICT {
            assert_eq!(v["code"], 4002);
            break;
        }
        assert_eq!(s, StatusCode::OK, "{v}");
        block = v["block"].as_u64().unwrap() as usize;
        served.push((v["practice"].as_bool().unwrap(), v["index"].as_u64().unwrap() as usize));
    }
    let truth = served
        .iter()
        .map(|(practice, index)| {
            let stim = store.served_stimulus(id, *practice, *index).unwrap();
            store.corpus().get(&stim.word_id).unwrap().transcript.clone()
        })
        .collect();
    (block, truth)
}

#[tokio::test]
async fn unknown_session_is_404_with_code() {
    let (app, _) = app();
    let (s, v) = json_call(&app, Method::GET, "/sessions/nobody-1", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], 2001);
}

#[tokio::test]
async fn duplicate_session_conflicts() {
    let (app, _) = app();
    create(&app, "dup").await;
    let (s, v) = json_call(&app, Method::POST, "/sessions", Some(json!({"participant_id": "dup", "seed": 7}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], 2002);
}

#[tokio::test]
async fn tonepip_levels_and_errors() {
    let (app, _) = app();
    let id = create(&app, "tp").await;
    let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": 500, "n_pip": 3}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], 3001);

    json_call(&app, Method::PUT, &format!("/sessions/{id}/volume"), Some(json!({"descriptor": "max", "level": 1.0}))).await;
    json_call(&app, Method::POST, &format!("/sessions/{id}/phase"), Some(json!({"to": "tonepip"}))).await;
    let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": 2000, "n_pip": 13}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["tonepip"][0]["listening_level_db"], 60.0);
    let (_, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": 500, "n_pip": 0}))).await;
    assert!(v["tonepip"][1]["listening_level_db"].is_null());

    let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": 3000, "n_pip": 2}))).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(6001)));
    let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": 1000, "n_pip": 16}))).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(6002)));
    let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/tonepip"), Some(json!({"frequency_hz": 2000, "n_pip": 1}))).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::CONFLICT, Some(6003)));
}

#[tokio::test]
async fn tonepip_audio_is_wav() {
    let (app, _) = app();
    let id = create(&app, "wav").await;
    let (s, bytes) = call(&app, Method::GET, &format!("/sessions/{id}/tonepip/1000/audio"), None).await;
    assert_eq!(s, StatusCode::OK);
    let reader = hound::WavReader::new(std::io::Cursor::new(bytes)).unwrap();
    assert_eq!(reader.spec().sample_rate, 48000);
    assert_eq!(reader.duration(), 264_000);
    let (s, v) = json_call(&app, Method::GET, &format!("/sessions/{id}/tonepip/250/audio"), None).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(6001)));
}

#[tokio::test]
async fn invalid_answers_report_positions_then_accept() {
    let (app, store) = app();
    let id = create(&app, "ans").await;
    to_practice(&app, &id).await;
    let (block, truth) = serve_block(&app, &store, &id).await;
    assert_eq!(truth.len(), 10);

    let mut bad = truth.clone();
    bad[2] = "".into();
    let uri = format!("/sessions/{id}/blocks/{block}/answers");
    let (s, v) = json_call(&app, Method::POST, &uri, Some(json!({"answers": bad}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], 5005);
    assert_eq!(v["fields"][0]["position"], 2);

    let (s, v) = json_call(&app, Method::POST, &uri, Some(json!({"answers": &truth[..9]}))).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(5004)));

    let (s, v) = json_call(&app, Method::POST, &uri, Some(json!({"answers": truth, "client_times_ms": vec![900; 10]}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["practice_blocks_done"], 1);
    let (s, v) = json_call(&app, Method::POST, &uri, Some(json!({"answers": truth}))).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::CONFLICT, Some(5002)));
}

#[tokio::test]
async fn stimulus_audio_only_after_serving() {
    let (app, _) = app();
    let id = create(&app, "aud").await;
    to_practice(&app, &id).await;
    let (s, v) = json_call(&app, Method::GET, &format!("/sessions/{id}/stimuli/practice/0/audio"), None).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(4003)));
    let (_, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/next"), None).await;
    let url = v["audio_url"].as_str().unwrap().to_string();
    assert_eq!(url, format!("/sessions/{id}/stimuli/practice/0/audio"));
    let (s, bytes) = call(&app, Method::GET, &url, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&bytes[..4], b"RIFF");
    let (s, v) = json_call(&app, Method::GET, &format!("/sessions/{id}/stimuli/bogus/0/audio"), None).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::UNPROCESSABLE_ENTITY, Some(9000)));
}

#[tokio::test]
async fn synthesized_stimulus_renders() {
    let (app, _) = app_with(Arc::new(SynthStimulusSource::default()));
    let id = create(&app, "synth").await;
    to_practice(&app, &id).await;
    let (_, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/next"), None).await;
    let (s, bytes) = call(&app, Method::GET, v["audio_url"].as_str().unwrap(), None).await;
    assert_eq!(s, StatusCode::OK);
    let reader = hound::WavReader::new(std::io::Cursor::new(bytes)).unwrap();
    assert_eq!(reader.spec().sample_rate, 48000);
    assert!(reader.len() > 48000 / 2);
}

#[tokio::test]
async fn full_session_and_export() {
    let (app, store) = app();
    let id = create(&app, "full").await;
    to_practice(&app, &id).await;
    let (block, truth) = serve_block(&app, &store, &id).await;
    json_call(&app, Method::POST, &format!("/sessions/{id}/blocks/{block}/answers"), Some(json!({"answers": truth}))).await;

    let (s, v) = json_call(&app, Method::GET, "/export", None).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::CONFLICT, Some(7001)));

    json_call(&app, Method::POST, &format!("/sessions/{id}/phase"), Some(json!({"to": "main"}))).await;
    for _ in 0..40 {
        let (block, truth) = serve_block(&app, &store, &id).await;
        let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/blocks/{block}/answers"), Some(json!({"answers": truth}))).await;
        assert_eq!(s, StatusCode::OK, "{v}");
    }
    let (_, v) = json_call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(v["phase"], "done");
    let (s, v) = json_call(&app, Method::POST, &format!("/sessions/{id}/next"), None).await;
    assert_eq!((s, v["code"].as_u64()), (StatusCode::CONFLICT, Some(4001)));

    let (s, v) = json_call(&app, Method::GET, "/export", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["answers"].as_array().unwrap().len(), 400);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 20);
    assert!(results.iter().all(|r| r["n_trials"] == 20 && r["n_correct"] == 20));
    assert_eq!(v["tonepip"].as_array().unwrap().len(), 4);
}
