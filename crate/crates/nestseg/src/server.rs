//! Single-session HTTP service for interactive exploration.
//!
//! Readers always see one complete [`Snapshot`]; rebuilds triggered by
//! clicks or parameter changes run one at a time and publish a new snapshot
//! with the next generation number only once the new sequence is ready.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use nestseg_core::attention::{AttentionMap, Click};
use nestseg_core::hierarchy::{extract_partition, HierarchyParams, MergeSequence};
use nestseg_core::label::LabelMap;
use nestseg_core::metrics::{evaluate, render_overlay};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::io::{self, ClickRecord};
use crate::pipeline::Scene;
use crate::report::ReportRecord;
use crate::seqfile::{ModeName, ParamsRecord};

pub const OVERLAY_COLOR: [u8; 3] = [255, 0, 0];

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub generation: u64,
    pub params: HierarchyParams,
    pub clicks: Vec<Click>,
    pub attention: Option<AttentionMap>,
    pub seq: MergeSequence,
}

pub struct Session {
    scene: Scene,
    gts: Vec<LabelMap>,
    eps: usize,
    current: RwLock<Arc<Snapshot>>,
    rebuild: tokio::sync::Mutex<()>,
}

impl Session {
    /// Builds the initial hierarchy (generation 0).
    pub fn new(scene: Scene, params: HierarchyParams, gts: Vec<LabelMap>, eps: usize) -> crate::Result<Self> {
        let clicks = scene.clicks.clone();
        let built = scene.build(&clicks, &params)?;
        let snapshot = Snapshot {
            generation: 0,
            params,
            clicks,
            attention: built.attention,
            seq: built.seq,
        };
        Ok(Self {
            scene,
            gts,
            eps,
            current: RwLock::new(Arc::new(snapshot)),
            rebuild: tokio::sync::Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }

    /// Applies `change` to the current clicks and params, rebuilds and
    /// publishes the result. Rebuilds are serialized.
    async fn rebuild_with(
        self: &Arc<Self>,
        change: impl FnOnce(&mut Vec<Click>, &mut HierarchyParams) + Send + 'static,
    ) -> Result<u64, ApiError> {
        let _guard = self.rebuild.lock().await;
        let base = self.snapshot();
        let session = Arc::clone(self);
        let next = tokio::task::spawn_blocking(move || {
            let mut clicks = base.clicks.clone();
            let mut params = base.params;
            change(&mut clicks, &mut params);
            params.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
            let built = session
                .scene
                .build(&clicks, &params)
                .map_err(|e| ApiError::bad_request(e.to_string()))?;
            Ok::<_, ApiError>(Snapshot {
                generation: base.generation + 1,
                params,
                clicks,
                attention: built.attention,
                seq: built.seq,
            })
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
        let generation = next.generation;
        *self.current.write().expect("snapshot lock poisoned") = Arc::new(next);
        log::info!("rebuilt hierarchy, generation {generation}");
        Ok(generation)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<crate::Error> for ApiError {
    fn from(e: crate::Error) -> Self {
        ApiError::internal(e.to_string())
    }
}

type AppState = Arc<Session>;

#[derive(Debug, Serialize, Deserialize)]
pub struct Meta {
    pub width: usize,
    pub height: usize,
    pub n_f: usize,
    pub k_max: usize,
    pub generation: u64,
    pub params: ParamsRecord,
}

#[derive(Debug, Deserialize)]
pub struct LevelQuery {
    k: usize,
}

#[derive(Debug, Default, Deserialize)]
pub struct ParamsUpdate {
    w_pos: Option<f64>,
    w_att: Option<f64>,
    attention_mode: Option<ModeName>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenerationReply {
    pub generation: u64,
}

fn png(bytes: Vec<u8>, generation: Option<u64>) -> Response {
    let mut builder = Response::builder().header(header::CONTENT_TYPE, "image/png");
    if let Some(g) = generation {
        builder = builder.header("x-generation", g.to_string());
    }
    builder.body(Body::from(bytes)).expect("static headers are valid")
}

fn level(snapshot: &Snapshot, fine: &LabelMap, k: usize) -> Result<LabelMap, ApiError> {
    if k == 0 || k > snapshot.seq.n_f {
        return Err(ApiError::bad_request(format!(
            "k must be in [1, {}], got {k}",
            snapshot.seq.n_f
        )));
    }
    extract_partition(&snapshot.seq, fine, k).map_err(|e| ApiError::internal(e.to_string()))
}

async fn meta(State(s): State<AppState>) -> Json<Meta> {
    let snap = s.snapshot();
    Json(Meta {
        width: s.scene.image.width(),
        height: s.scene.image.height(),
        n_f: snap.seq.n_f,
        k_max: snap.seq.n_f,
        generation: snap.generation,
        params: (&snap.params).into(),
    })
}

async fn image(State(s): State<AppState>) -> Result<Response, ApiError> {
    Ok(png(io::encode_rgb_png(&s.scene.image)?, None))
}

async fn partition(State(s): State<AppState>, Query(q): Query<LevelQuery>) -> Result<Response, ApiError> {
    let snap = s.snapshot();
    let labels = level(&snap, &s.scene.fine, q.k)?;
    Ok(png(io::encode_label_png(&labels)?, Some(snap.generation)))
}

async fn overlay(State(s): State<AppState>, Query(q): Query<LevelQuery>) -> Result<Response, ApiError> {
    let snap = s.snapshot();
    let labels = level(&snap, &s.scene.fine, q.k)?;
    let painted =
        render_overlay(&s.scene.image, &labels, OVERLAY_COLOR).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(png(io::encode_rgb_png(&painted)?, Some(snap.generation)))
}

async fn attention(State(s): State<AppState>) -> Result<Response, ApiError> {
    let snap = s.snapshot();
    let (w, h) = (s.scene.image.width(), s.scene.image.height());
    let map = match &snap.attention {
        Some(a) => a.clone(),
        None => AttentionMap::constant(w, h, 0.0).map_err(|e| ApiError::internal(e.to_string()))?,
    };
    Ok(png(io::encode_attention_png(&map)?, Some(snap.generation)))
}

async fn metrics(State(s): State<AppState>, Query(q): Query<LevelQuery>) -> Result<Json<ReportRecord>, ApiError> {
    if s.gts.is_empty() {
        return Err(ApiError::not_found("no ground truth was supplied at startup"));
    }
    let snap = s.snapshot();
    let labels = level(&snap, &s.scene.fine, q.k)?;
    let report = evaluate(&labels, &s.gts, s.eps, None).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(ReportRecord::new(None, &report)))
}

async fn post_clicks(
    State(s): State<AppState>,
    Json(records): Json<Vec<ClickRecord>>,
) -> Result<Json<GenerationReply>, ApiError> {
    let (w, h) = (s.scene.image.width(), s.scene.image.height());
    if let Some(c) = records.iter().find(|c| c.x >= w || c.y >= h) {
        return Err(ApiError::bad_request(format!(
            "click ({}, {}) outside the {w}x{h} image",
            c.x, c.y
        )));
    }
    let added: Vec<Click> = records.into_iter().map(Click::from).collect();
    let generation = s.rebuild_with(move |clicks, _| clicks.extend(added)).await?;
    Ok(Json(GenerationReply { generation }))
}

async fn clear_clicks(State(s): State<AppState>) -> Result<Json<GenerationReply>, ApiError> {
    let generation = s.rebuild_with(|clicks, _| clicks.clear()).await?;
    Ok(Json(GenerationReply { generation }))
}

async fn post_params(
    State(s): State<AppState>,
    Json(update): Json<ParamsUpdate>,
) -> Result<Json<GenerationReply>, ApiError> {
    let generation = s
        .rebuild_with(move |_, params| {
            if let Some(v) = update.w_pos {
                params.w_pos = v;
            }
            if let Some(v) = update.w_att {
                params.w_att = v;
            }
            if let Some(m) = update.attention_mode {
                params.attention_mode = m.into();
            }
        })
        .await?;
    Ok(Json(GenerationReply { generation }))
}

const INDEX: &str = "<!doctype html><meta charset=utf-8><title>nestseg</title>\
<p>Hierarchy service is running. Endpoints live under <code>/api</code>; \
start with <code>/api/meta</code>.</p>";

pub fn router(session: Arc<Session>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/meta", get(meta))
        .route("/api/image", get(image))
        .route("/api/partition", get(partition))
        .route("/api/overlay", get(overlay))
        .route("/api/attention", get(attention))
        .route("/api/metrics", get(metrics))
        .route("/api/clicks", axum::routing::post(post_clicks).delete(clear_clicks))
        .route("/api/params", axum::routing::post(post_params))
        .with_state(session);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX) })),
    }
}

pub async fn serve(session: Arc<Session>, static_dir: Option<PathBuf>, port: u16) -> anyhow::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    log::info!("serving on http://{addr}");
    axum::serve(listener, router(session, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
