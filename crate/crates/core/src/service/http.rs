//! JSON-over-HTTP front end for [`SessionStore`].
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | `{participant_id, seed}` |
//! | GET | `/sessions/{id}` | |
//! | PUT | `/sessions/{id}/volume` | `{descriptor, level?}` |
//! | POST | `/sessions/{id}/phase` | `{to}` |
//! | POST | `/sessions/{id}/tonepip` | `{frequency_hz, n_pip}` |
//! | GET | `/sessions/{id}/tonepip/{frequency_hz}/audio` | |
//! | POST | `/sessions/{id}/next` | |
//! | GET | `/sessions/{id}/stimuli/{practice\|main}/{index}/audio` | |
//! | POST | `/sessions/{id}/blocks/{block}/answers` | `{answers, client_times_ms?}` |
//! | GET | `/export?partial=bool` | |
//!
//! Errors are `{code, error, fields?}` with a stable integer `code`.

use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{ErrorBody, Phase, ServiceError, SessionStore, SessionView, StimulusDescriptor, StimulusSource, VolumeSetting};
use crate::dsp::{wav_bytes, PcmFormat, PLAYBACK_RATE};
use crate::tonepip::{gen_tonepip_sequence, TonePipSequenceSpec};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub source: Arc<dyn StimulusSource>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionExists(_)
            | ServiceError::PhaseMismatch { .. }
            | ServiceError::PhaseOrder { .. }
            | ServiceError::PhaseIncomplete(..)
            | ServiceError::SessionDone
            | ServiceError::AnswersPending(_)
            | ServiceError::BlockAlreadyAccepted(_)
            | ServiceError::TonePipDuplicate(_)
            | ServiceError::ExportIncomplete(_) => StatusCode::CONFLICT,
            ServiceError::Io(_) | ServiceError::CorruptLog { .. } | ServiceError::Render(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(ErrorBody::from(&self))).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRequest {
    pub participant_id: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseRequest {
    pub to: Phase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TonePipRequest {
    pub frequency_hz: u32,
    pub n_pip: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswersRequest {
    pub answers: Vec<String>,
    #[serde(default)]
    pub client_times_ms: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextResponse {
    #[serde(flatten)]
    pub stimulus: StimulusDescriptor,
    pub audio_url: String,
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    #[serde(default)]
    partial: bool,
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

/// Run blocking store or DSP work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Render(e.to_string()))?
}

fn wav_response(bytes: Vec<u8>) -> Response {
    Response::builder()
        .header(header::CONTENT_TYPE, "audio/wav")
        .body(Body::from(bytes))
        .expect("static headers")
}

async fn create(State(app): State<AppState>, Json(req): Json<CreateRequest>) -> Result<Response, ServiceError> {
    let view = blocking(move || app.store.create(&req.participant_id, req.seed)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionView> {
    app.store.view(&id).map(Json)
}

async fn set_volume(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(setting): Json<VolumeSetting>,
) -> ApiResult<SessionView> {
    blocking(move || app.store.record_volume(&id, setting)).await.map(Json)
}

async fn set_phase(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<PhaseRequest>,
) -> ApiResult<SessionView> {
    blocking(move || app.store.advance(&id, req.to)).await.map(Json)
}

async fn tonepip(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<TonePipRequest>,
) -> ApiResult<SessionView> {
    blocking(move || app.store.submit_tonepip(&id, req.frequency_hz, req.n_pip)).await.map(Json)
}

async fn tonepip_audio(
    State(app): State<AppState>,
    Path((id, frequency_hz)): Path<(String, u32)>,
) -> Result<Response, ServiceError> {
    let view = app.store.view(&id)?;
    if !view.tonepip_frequencies.contains(&frequency_hz) {
        return Err(ServiceError::TonePipFrequency(frequency_hz));
    }
    let bytes = blocking(move || {
        let seq = gen_tonepip_sequence(&TonePipSequenceSpec::at(frequency_hz), PLAYBACK_RATE)
            .map_err(|e| ServiceError::Render(e.to_string()))?;
        wav_bytes(&seq.audio, PcmFormat::Float32).map_err(|e| ServiceError::Render(e.to_string()))
    })
    .await?;
    Ok(wav_response(bytes))
}

async fn next(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<NextResponse> {
    let sid = id.clone();
    let (desc, _) = blocking(move || app.store.next_stimulus(&sid)).await?;
    let kind = if desc.practice { "practice" } else { "main" };
    Ok(Json(NextResponse {
        audio_url: format!("/sessions/{id}/stimuli/{kind}/{}/audio", desc.index),
        stimulus: desc,
    }))
}

async fn stimulus_audio(
    State(app): State<AppState>,
    Path((id, kind, index)): Path<(String, String, usize)>,
) -> Result<Response, ServiceError> {
    let practice = match kind.as_str() {
        "practice" => true,
        "main" => false,
        other => return Err(ServiceError::BadRequest(format!("unknown stimulus list `{other}`"))),
    };
    let bytes = blocking(move || {
        let stim = app.store.served_stimulus(&id, practice, index)?;
        let entry = app
            .store
            .corpus()
            .get(&stim.word_id)
            .ok_or_else(|| ServiceError::InvalidCorpus(format!("word `{}` missing", stim.word_id)))?;
        let audio = app.source.render(&stim, &entry.transcript)?;
        wav_bytes(&audio, PcmFormat::Int16).map_err(|e| ServiceError::Render(e.to_string()))
    })
    .await?;
    Ok(wav_response(bytes))
}

async fn answers(
    State(app): State<AppState>,
    Path((id, block)): Path<(String, usize)>,
    Json(req): Json<AnswersRequest>,
) -> ApiResult<SessionView> {
    blocking(move || app.store.submit_answers(&id, block, &req.answers, req.client_times_ms.as_deref()))
        .await
        .map(Json)
}

async fn export(State(app): State<AppState>, Query(q): Query<ExportQuery>) -> ApiResult<super::ExportBundle> {
    blocking(move || app.store.export(q.partial)).await.map(Json)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/volume", put(set_volume))
        .route("/sessions/{id}/phase", post(set_phase))
        .route("/sessions/{id}/tonepip", post(tonepip))
        .route("/sessions/{id}/tonepip/{frequency_hz}/audio", get(tonepip_audio))
        .route("/sessions/{id}/next", post(next))
        .route("/sessions/{id}/stimuli/{kind}/{index}/audio", get(stimulus_audio))
        .route("/sessions/{id}/blocks/{block}/answers", post(answers))
        .route("/export", get(export))
        .with_state(state)
}

/// Serve until ctrl-c.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
