//! HTTP service around the active-learning loop and the model store.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use msem_active::{ActiveError, ActiveLearner, Pool};
use msem_core::{EntityId, Layer, Model, SharedModel};
use msem_extract::{extract_title, JointModelF64, TrainingSample};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PipelineConfig;

pub struct AppState {
    pub config: PipelineConfig,
    pub model: SharedModel,
    pub learner: Mutex<ActiveLearner<f64>>,
    /// Extractor for `/extract` when the loop has not trained one yet.
    pub extractor: Option<JointModelF64>,
}

impl AppState {
    pub fn new(config: PipelineConfig, model: Model, pool: Pool, extractor: Option<JointModelF64>) -> Arc<Self> {
        let learner = ActiveLearner::new(pool, config.loop_config());
        Arc::new(AppState { config, model: SharedModel::new(model), learner: Mutex::new(learner), extractor })
    }

    fn learner(&self) -> MutexGuard<'_, ActiveLearner<f64>> {
        self.learner.lock().unwrap_or_else(|p| p.into_inner())
    }
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<ActiveError> for ApiError {
    fn from(e: ActiveError) -> Self {
        let status = match e {
            ActiveError::NotTrained => return ApiError(StatusCode::CONFLICT, format!("train first: {e}")),
            ActiveError::NoPendingBatch | ActiveError::BatchPending => StatusCode::CONFLICT,
            ActiveError::BatchMismatch(_) | ActiveError::DuplicateId(_) | ActiveError::NotInPool(_) => StatusCode::BAD_REQUEST,
            ActiveError::EmptyPool => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad(e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/al/train", post(train))
        .route("/al/next", get(next))
        .route("/al/label", post(label))
        .route("/al/cost", get(cost))
        .route("/al/status", get(status))
        .route("/model/storyline", get(storyline))
        .route("/model/snapshot", get(snapshot))
        .route("/extract", post(extract))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn train(State(st): State<Arc<AppState>>) -> ApiResult<Json<msem_extract::TrainReport>> {
    blocking(move || Ok(Json(st.learner().train()?))).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Proposed {
    pub id: u64,
    pub phi: f64,
    pub sample: TrainingSample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextBatch {
    pub iteration: usize,
    pub batch: Vec<Proposed>,
}

#[derive(Deserialize)]
struct NextQuery {
    batch: Option<usize>,
}

/// Returns the pending batch, proposing one first if none is open.
async fn next(State(st): State<Arc<AppState>>, Query(q): Query<NextQuery>) -> ApiResult<Json<NextBatch>> {
    blocking(move || {
        let mut learner = st.learner();
        if learner.pending().is_none() {
            if let Some(b) = q.batch {
                if b == 0 {
                    return Err(ApiError::bad("batch must be >= 1"));
                }
                learner.config.batch_size = b;
            }
            learner.propose()?;
        }
        let p = learner.pending().expect("proposed above");
        let batch = p
            .scores
            .iter()
            .zip(&p.pre_annotations)
            .map(|(s, (id, sample))| Proposed { id: *id, phi: s.phi, sample: sample.clone() })
            .collect();
        Ok(Json(NextBatch { iteration: p.iteration, batch }))
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Labeled {
    pub id: u64,
    pub sample: TrainingSample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub labels: Vec<Labeled>,
}

async fn label(
    State(st): State<Arc<AppState>>,
    body: Result<Json<LabelRequest>, JsonRejection>,
) -> ApiResult<Json<msem_active::CostRow>> {
    let Json(req) = body?;
    blocking(move || {
        let mut learner = st.learner();
        let row = learner.submit(req.labels.into_iter().map(|l| (l.id, l.sample)).collect())?;
        if let Some(path) = &st.config.paths.pool {
            persist_pool(learner.pool(), path).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        }
        Ok(Json(row))
    })
    .await
}

/// Writes beside the target and renames, so readers never see a partial file.
pub fn persist_pool(pool: &Pool, path: &Path) -> Result<(), ActiveError> {
    let tmp = path.with_extension("tmp");
    pool.write_jsonl(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn cost(State(st): State<Arc<AppState>>, Query(q): Query<FormatQuery>) -> Response {
    let report = st.learner().report().clone();
    if q.format.as_deref() == Some("csv") {
        return ([(header::CONTENT_TYPE, "text/csv")], report.to_csv()).into_response();
    }
    Json(report).into_response()
}

async fn status(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let l = st.learner();
    Json(json!({
        "iteration": l.iteration(),
        "labeled": l.pool().labeled().len(),
        "unlabeled": l.pool().unlabeled().len(),
        "trained": l.model().is_some(),
        "pending": l.pending().map(|p| p.ids()),
        "strategy": l.config.strategy,
        "batch": l.config.batch_size,
    }))
}

/// Entity by `ent:<n>`, a bare number, or a case-insensitive name within `layer`.
pub fn find_entity(model: &Model, key: &str, layer: Layer) -> Option<EntityId> {
    let key = key.trim();
    if let Ok(n) = key.strip_prefix("ent:").unwrap_or(key).parse::<u32>() {
        return model.entity(EntityId(n)).map(|e| e.id);
    }
    let norm = msem_core::text::normalize(key);
    let layer_match = |e: &&msem_core::Entity| e.layer() == layer;
    model
        .entities()
        .iter()
        .filter(layer_match)
        .find(|e| msem_core::text::normalize(&e.canonical_name) == norm)
        .or_else(|| {
            model
                .entities()
                .iter()
                .filter(layer_match)
                .find(|e| e.aliases.iter().any(|a| msem_core::text::normalize(a) == norm))
        })
        .map(|e| e.id)
}

#[derive(Deserialize)]
struct StorylineQuery {
    stakeholder: String,
    feature: Option<String>,
    format: Option<String>,
}

async fn storyline(State(st): State<Arc<AppState>>, Query(q): Query<StorylineQuery>) -> ApiResult<Response> {
    let model = st.model.read();
    let s = find_entity(&model, &q.stakeholder, Layer::Stakeholder)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown stakeholder `{}`", q.stakeholder)))?;
    let f = match &q.feature {
        Some(f) => Some(
            find_entity(&model, f, Layer::ServiceFeature)
                .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown feature `{f}`")))?,
        ),
        None => None,
    };
    let entries = msem_evolution::storyline(&model, s, f).map_err(|e| ApiError::bad(e.to_string()))?;
    if q.format.as_deref() == Some("text") {
        return Ok(([(header::CONTENT_TYPE, "text/plain")], msem_evolution::render_timeline(&model, &entries)).into_response());
    }
    Ok(Json(entries).into_response())
}

#[derive(Deserialize)]
struct SnapshotQuery {
    at: Option<String>,
}

async fn snapshot(State(st): State<Arc<AppState>>, Query(q): Query<SnapshotQuery>) -> ApiResult<Response> {
    let at: NaiveDate = q
        .at
        .as_deref()
        .ok_or_else(|| ApiError::bad("missing `at`"))?
        .parse()
        .map_err(|e| ApiError::bad(format!("bad `at`: {e}")))?;
    let model = st.model.read();
    Ok(Json(model.snapshot_at(at)).into_response())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractRequest {
    pub title: String,
    #[serde(default)]
    pub doc: Option<String>,
    #[serde(default)]
    pub published_at: Option<NaiveDate>,
}

async fn extract(
    State(st): State<Arc<AppState>>,
    body: Result<Json<ExtractRequest>, JsonRejection>,
) -> ApiResult<Json<Vec<msem_extract::Extraction>>> {
    let Json(req) = body?;
    blocking(move || {
        let trained = st.learner().model().cloned();
        let model = trained
            .as_ref()
            .or(st.extractor.as_ref())
            .ok_or_else(|| ApiError(StatusCode::CONFLICT, "train first: no extractor is loaded".into()))?;
        let doc = req.doc.as_deref().unwrap_or("adhoc");
        extract_title(model, doc, &req.title, req.published_at)
            .map(Json)
            .map_err(|e| ApiError::bad(e.to_string()))
    })
    .await
}
