//! HTTP service over a single [`Session`].
//!
//! Reads clone the current snapshot and never block on each other.
//! Mutations take the writer lock, work on a copy and publish it, so they
//! apply one at a time. Every JSON body carries the session `generation`.

use std::collections::BTreeSet;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dqi_core::engine::{Component, Granularity};
use dqi_core::splitkit::{Ratios, DEFAULT_SENSITIVITY_MARGIN, DEFAULT_SHRINK};
use dqi_core::viz::{viz, VizOptions};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::session::{Draft, Kind, Session, SessionError};

pub struct AppState {
    current: RwLock<Arc<Session>>,
    writer: Mutex<()>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<AppState> {
        Arc::new(AppState {
            current: RwLock::new(Arc::new(session)),
            writer: Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> Arc<Session> {
        self.current.read().expect("session lock poisoned").clone()
    }

    /// Applies `f` to a copy of the session and publishes the copy only
    /// if `f` succeeds.
    async fn mutate<T>(&self, f: impl FnOnce(&mut Session) -> Result<T, SessionError>) -> Result<(T, u64), ApiError> {
        let _guard = self.writer.lock().await;
        let mut next = (*self.snapshot()).clone();
        let generation = next.generation;
        let out = f(&mut next).map_err(|e| ApiError::from_session(e, generation))?;
        let generation = next.generation;
        *self.current.write().expect("session lock poisoned") = Arc::new(next);
        Ok((out, generation))
    }
}

pub struct ApiError {
    status: StatusCode,
    message: String,
    generation: u64,
}

impl ApiError {
    fn from_session(e: SessionError, generation: u64) -> ApiError {
        let status = match e.kind {
            Kind::BadRequest => StatusCode::BAD_REQUEST,
            Kind::NotFound => StatusCode::NOT_FOUND,
            Kind::Conflict => StatusCode::CONFLICT,
        };
        ApiError {
            status,
            message: e.message,
            generation,
        }
    }

    fn bad_request(message: impl Into<String>, generation: u64) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            generation,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.message, "generation": self.generation });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

/// `body` as a JSON object with `generation` added.
fn reply(generation: u64, body: impl Serialize) -> ApiResult {
    let mut v = serde_json::to_value(body).expect("response types serialize");
    match &mut v {
        Value::Object(map) => {
            map.insert("generation".into(), json!(generation));
        }
        other => {
            v = json!({ "data": other.take(), "generation": generation });
        }
    }
    Ok(Json(v))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes, generation: u64) -> Result<T, ApiError> {
    let text = if body.is_empty() { &b"{}"[..] } else { &body[..] };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request(format!("malformed body: {e}"), generation))
}

/// Worker-facing hint per component, fetched by the UI instead of being
/// hard-coded there.
pub fn messages() -> Vec<(Component, &'static str)> {
    vec![
        (Component::C1, "Try using words the dataset has not seen yet, and keep the sentence length moderate."),
        (Component::C2, "Favor less common words and phrasings over the most frequent ones."),
        (Component::C3, "Make sure the sentences are not near copies of existing ones."),
        (Component::C4, "Check that the words in each sentence fit together naturally."),
        (Component::C5, "Avoid reusing too many premise words in the hypothesis."),
        (Component::C6, "Avoid words that strongly hint at the label on their own."),
        (Component::C7, "Keep test samples distinct from training samples."),
    ]
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", get(session_info))
        .route("/messages", get(get_messages))
        .route("/bands", get(get_bands))
        .route("/samples/review", post(review))
        .route("/samples/submit", post(submit))
        .route("/samples/{id}", get(get_sample))
        .route("/samples/{id}/autofix", post(autofix))
        .route("/review/next", get(next_pending))
        .route("/review/{id}/accept", post(accept))
        .route("/review/{id}/reject", post(reject))
        .route("/viz/{component}", get(get_viz))
        .route("/split/randomize", post(split_randomize))
        .route("/split/undo", post(split_undo))
        .route("/split/save", post(split_save))
        .route("/bands/retune", post(retune))
        .route("/annotators/{id}/stats", get(annotator_stats))
        .with_state(state)
}

async fn session_info(State(st): State<Arc<AppState>>) -> ApiResult {
    let s = st.snapshot();
    reply(
        s.generation,
        json!({
            "samples": s.dataset.len(),
            "pending": s.pending,
            "band_generation": s.config.bands.generation,
            "split_frozen": s.dataset.is_split_frozen(),
            "can_undo_split": s.dataset.can_undo_split(),
        }),
    )
}

async fn get_messages(State(st): State<Arc<AppState>>) -> ApiResult {
    let msgs: serde_json::Map<String, Value> =
        messages().into_iter().map(|(c, m)| (c.key().to_string(), json!(m))).collect();
    reply(st.snapshot().generation, json!({ "messages": msgs }))
}

async fn get_bands(State(st): State<Arc<AppState>>) -> ApiResult {
    let s = st.snapshot();
    reply(s.generation, &s.config.bands)
}

async fn review(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let s = st.snapshot();
    let draft: Draft = parse_body(&body, s.generation)?;
    let r = s.review(draft).map_err(|e| ApiError::from_session(e, s.generation))?;
    reply(s.generation, r)
}

async fn submit(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let draft: Draft = parse_body(&body, st.snapshot().generation)?;
    let ((sample, pending), generation) = st.mutate(|s| Ok((s.submit(draft)?, s.pending.len()))).await?;
    tracing::info!(id = %sample.id, "submitted");
    reply(generation, json!({ "sample": sample, "pending": pending }))
}

async fn get_sample(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = st.snapshot();
    let sample = s
        .dataset
        .get(&id)
        .ok_or_else(|| ApiError::from_session(SessionError::not_found(format!("unknown sample id {id:?}")), s.generation))?;
    let panel = s.panel_for(&id).map_err(|e| ApiError::from_session(e, s.generation))?;
    reply(s.generation, json!({ "sample": sample, "panel": panel }))
}

#[derive(Deserialize, Default)]
struct AutofixBody {
    max_edits: Option<usize>,
}

async fn autofix(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: AutofixBody = parse_body(&body, st.snapshot().generation)?;
    let ((sample, trace), generation) = st.mutate(|s| s.autofix(&id, req.max_edits)).await?;
    reply(generation, json!({ "sample": sample, "trace": trace }))
}

async fn next_pending(State(st): State<Arc<AppState>>) -> ApiResult {
    let s = st.snapshot();
    match s.next_pending() {
        Some(sample) => {
            let panel = s.panel_for(&sample.id).map_err(|e| ApiError::from_session(e, s.generation))?;
            reply(s.generation, json!({ "sample": sample, "panel": panel, "pending": s.pending.len() }))
        }
        None => reply(s.generation, json!({ "sample": null, "pending": 0 })),
    }
}

async fn accept(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let ((decision, pending), generation) = st.mutate(|s| Ok((s.accept(&id)?, s.pending.len()))).await?;
    reply(generation, json!({ "id": id, "decision": decision, "pending": pending }))
}

async fn reject(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let (pending, generation) = st.mutate(|s| s.reject(&id).map(|()| s.pending.len())).await?;
    reply(generation, json!({ "id": id, "decision": "rejected", "pending": pending }))
}

#[derive(Deserialize)]
struct VizQuery {
    bins: Option<usize>,
    granularity: Option<String>,
    focus: Option<String>,
}

async fn get_viz(
    State(st): State<Arc<AppState>>,
    Path(component): Path<String>,
    Query(q): Query<VizQuery>,
) -> ApiResult {
    let s = st.snapshot();
    let g = s.generation;
    let component: Component = component
        .parse()
        .map_err(|_| ApiError::from_session(SessionError::not_found(format!("unknown component {component:?}")), g))?;
    let mut opts = VizOptions::default();
    if let Some(b) = q.bins {
        if b == 0 {
            return Err(ApiError::bad_request("bins must be positive", g));
        }
        opts.bins = b;
    }
    if let Some(gran) = q.granularity {
        opts.granularity = gran
            .parse::<Granularity>()
            .map_err(|_| ApiError::bad_request(format!("unknown granularity {gran:?}"), g))?;
    }
    if let Some(f) = q.focus {
        if !s.dataset.contains(&f) {
            return Err(ApiError::from_session(SessionError::not_found(format!("unknown sample id {f:?}")), g));
        }
        opts.focus = Some(f);
    }
    let series = viz(component, &s.dataset, &s.provider, &s.config.params, &opts)
        .map_err(|e| ApiError::bad_request(e.to_string(), g))?;
    reply(g, series)
}

#[derive(Deserialize, Default)]
struct SplitBody {
    #[serde(default)]
    seed: u64,
    ratios: Option<Ratios>,
}

async fn split_randomize(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: SplitBody = parse_body(&body, st.snapshot().generation)?;
    let (assignment, generation) = st
        .mutate(|s| s.randomize_split(req.seed, req.ratios.unwrap_or_default()))
        .await?;
    reply(generation, assignment)
}

async fn split_undo(State(st): State<Arc<AppState>>) -> ApiResult {
    let ((), generation) = st.mutate(|s| s.undo_split()).await?;
    reply(generation, json!({ "undone": true }))
}

async fn split_save(State(st): State<Arc<AppState>>) -> ApiResult {
    let ((), generation) = st.mutate(|s| s.save_split()).await?;
    reply(generation, json!({ "saved": true }))
}

#[derive(Deserialize)]
struct RetuneBody {
    error_ids: BTreeSet<String>,
    margin: Option<f64>,
    factor: Option<f64>,
}

async fn retune(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: RetuneBody = parse_body(&body, st.snapshot().generation)?;
    let margin = req.margin.unwrap_or(DEFAULT_SENSITIVITY_MARGIN);
    let factor = req.factor.unwrap_or(DEFAULT_SHRINK);
    let (outcome, generation) = st.mutate(|s| s.retune(&req.error_ids, margin, factor)).await?;
    reply(generation, outcome)
}

async fn annotator_stats(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = st.snapshot();
    let stats = s.annotator_stats(&id).map_err(|e| ApiError::from_session(e, s.generation))?;
    reply(s.generation, stats)
}

pub async fn serve(session: Session, address: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(address).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(session))).await
}
