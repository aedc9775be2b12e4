//! HTTP service for annotation sessions.
//!
//! A session is identified by its sequence id. Reads use immutable
//! snapshots; mutations of one session are serialised and persisted to the
//! annotation file before they are acknowledged. The writer holding a
//! session is named by the `X-Vice-Writer` header and keeps it until it
//! has been idle for the lease duration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use vice_core::depth::DepthMode;
use vice_core::ingestion::{
    load_euroc_sequence, AnnotatedPoint, AnnotationSet, EurocSequence, ImageBounds, CAMERA_INDEX,
};
use vice_core::tracking::KeypointTrack;

use crate::commands::track::{read_frame_map, read_tracks, track_dir};
use crate::error::{CliError, ErrorCode};
use crate::render::base_image;

pub const WRITER_HEADER: &str = "x-vice-writer";
pub const DEFAULT_LEASE: Duration = Duration::from_secs(120);
const ANONYMOUS: &str = "anonymous";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// A sequence directory, or a directory whose subdirectories are sequences.
    pub root: PathBuf,
    /// Tracks are read from `<sequence>/tracks/<source>/<depth>/`.
    pub depth_mode: DepthMode,
    pub token: Option<String>,
    pub lease: Duration,
}

/// Predicted pixels of one source, keyed by on-disk frame index.
type Overlay = BTreeMap<usize, Vec<Value>>;

struct Writer {
    name: String,
    last_seen: Instant,
    /// Track that receives respawns when the request names none.
    active_track: Option<u64>,
}

pub struct Session {
    pub id: String,
    pub sequence: EurocSequence,
    pub annotations_path: PathBuf,
    overlays: BTreeMap<String, Overlay>,
    snapshot: RwLock<Arc<AnnotationSet>>,
    writer: Mutex<Option<Writer>>,
}

pub struct AppState {
    pub sessions: BTreeMap<String, Session>,
    pub token: Option<String>,
    pub lease: Duration,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.status.as_u16(), "message": self.message }))).into_response()
    }
}

fn is_sequence(dir: &Path) -> bool {
    dir.join(CAMERA_INDEX).is_file()
}

fn overlay_of(tracks: &[KeypointTrack], frame_map: Option<&[usize]>) -> Overlay {
    let mut out = Overlay::new();
    for t in tracks {
        for s in &t.segments {
            for (f, p) in s.frames() {
                let Some(p) = p else { continue };
                let frame = match frame_map {
                    Some(m) => match m.get(f) {
                        Some(&f) => f,
                        None => continue,
                    },
                    None => f,
                };
                out.entry(frame)
                    .or_default()
                    .push(json!({ "track": t.track_id, "u": p.u, "v": p.v, "respawn": f == s.start_frame }));
            }
        }
    }
    out
}

fn load_session(dir: &Path, depth_mode: DepthMode) -> Result<Session, CliError> {
    let sequence = load_euroc_sequence(dir)?;
    let id = dir
        .canonicalize()
        .map_err(|e| CliError::io(dir, e))?
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    let annotations_path = dir.join("annotations.json");
    let bounds = ImageBounds { width: sequence.camera.width, height: sequence.camera.height };
    let annotations = if annotations_path.is_file() {
        AnnotationSet::read(&annotations_path, Some(bounds)).map_err(|e| CliError::new(ErrorCode::Ingest, e))?
    } else {
        AnnotationSet { sequence: Some(id.clone()), ..Default::default() }
    };
    let mut overlays = BTreeMap::new();
    for (name, _) in sequence.trajectories() {
        let tdir = track_dir(&dir.join("tracks"), &name, depth_mode);
        if let Some(tracks) = read_tracks(&tdir)? {
            let map = read_frame_map(&tdir)?;
            overlays.insert(name, overlay_of(&tracks, map.as_deref()));
        }
    }
    Ok(Session {
        id,
        sequence,
        annotations_path,
        overlays,
        snapshot: RwLock::new(Arc::new(annotations)),
        writer: Mutex::new(None),
    })
}

pub fn load_state(config: &ServerConfig) -> Result<AppState, CliError> {
    if !config.root.is_dir() {
        return Err(CliError::missing(format!("dataset directory {} not found", config.root.display())));
    }
    let mut dirs = Vec::new();
    if is_sequence(&config.root) {
        dirs.push(config.root.clone());
    } else {
        let entries = std::fs::read_dir(&config.root).map_err(|e| CliError::io(&config.root, e))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::io(&config.root, e))?.path();
            if path.is_dir() && is_sequence(&path) {
                dirs.push(path);
            }
        }
        dirs.sort();
    }
    if dirs.is_empty() {
        return Err(CliError::missing(format!("no sequence found under {}", config.root.display())));
    }
    let mut sessions = BTreeMap::new();
    for d in dirs {
        let s = load_session(&d, config.depth_mode)?;
        sessions.insert(s.id.clone(), s);
    }
    Ok(AppState { sessions, token: config.token.clone(), lease: config.lease })
}

type Shared = Arc<AppState>;

fn session<'a>(state: &'a AppState, id: &str) -> Result<&'a Session, ApiError> {
    state.sessions.get(id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown sequence {id:?}")))
}

fn check_frame(s: &Session, n: usize) -> Result<(), ApiError> {
    let len = s.sequence.frames.len();
    if n >= len {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("frame {n} outside 0..{len}")));
    }
    Ok(())
}

fn bounds(s: &Session) -> ImageBounds {
    ImageBounds { width: s.sequence.camera.width, height: s.sequence.camera.height }
}

async fn list_sequences(State(state): State<Shared>) -> Json<Value> {
    let list: Vec<Value> = state
        .sessions
        .values()
        .map(|s| {
            json!({
                "id": s.id,
                "frames": s.sequence.frames.len(),
                "fps": s.sequence.frames.rate_hz(),
                "width": s.sequence.camera.width,
                "height": s.sequence.camera.height,
                "sources": s.overlays.keys().collect::<Vec<_>>(),
            })
        })
        .collect();
    Json(Value::Array(list))
}

async fn frame_image(State(state): State<Shared>, UrlPath((id, n)): UrlPath<(String, usize)>) -> Result<Response, ApiError> {
    let s = session(&state, &id)?;
    check_frame(s, n)?;
    let record = &s.sequence.frames.frames()[n];
    if let Some(path) = record.image.as_ref().filter(|p| p.is_file()) {
        let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
        let mime = match ext.as_str() {
            "png" => Some("image/png"),
            "jpg" | "jpeg" => Some("image/jpeg"),
            _ => None,
        };
        if let Some(mime) = mime {
            let bytes = tokio::fs::read(path)
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("{}: {e}", path.display())))?;
            return Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response());
        }
    }
    // No readable image: a grey placeholder keeps the annotation UI usable.
    let img = base_image(record.image.as_deref(), s.sequence.camera.width, s.sequence.camera.height);
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

#[derive(Deserialize)]
struct OverlayQuery {
    sources: Option<String>,
}

async fn frame_overlays(
    State(state): State<Shared>,
    UrlPath((id, n)): UrlPath<(String, usize)>,
    Query(q): Query<OverlayQuery>,
) -> Result<Json<Value>, ApiError> {
    let s = session(&state, &id)?;
    check_frame(s, n)?;
    let names: Vec<String> = match &q.sources {
        Some(list) => crate::config::split_list(list),
        None => s.overlays.keys().cloned().collect(),
    };
    let mut sources = serde_json::Map::new();
    for name in names {
        let value = match s.overlays.get(&name) {
            Some(o) => Value::Array(o.get(&n).cloned().unwrap_or_default()),
            None => Value::Null,
        };
        sources.insert(name, value);
    }
    Ok(Json(json!({ "frame": n, "sources": sources })))
}

async fn get_annotations(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let s = session(&state, &id)?;
    let snap = s.snapshot.read().expect("lock poisoned").clone();
    Ok(([(header::CONTENT_TYPE, "application/json")], snap.to_canonical_json()).into_response())
}

fn writer_name(headers: &HeaderMap) -> String {
    headers
        .get(WRITER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .unwrap_or(ANONYMOUS)
        .to_string()
}

/// Apply `mutate` to a copy of the session's annotations under the
/// single-writer lease, persist, then publish the new snapshot.
async fn mutate<F>(state: &AppState, s: &Session, headers: &HeaderMap, mutate: F) -> Result<Response, ApiError>
where
    F: FnOnce(&mut AnnotationSet, &mut Option<u64>) -> Result<(), ApiError>,
{
    let name = writer_name(headers);
    let mut guard = s.writer.lock().await;
    let now = Instant::now();
    let mut active = match guard.as_ref() {
        Some(w) if w.name != name && now.duration_since(w.last_seen) < state.lease => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("session {} is being edited by {:?}", s.id, w.name),
            ));
        }
        Some(w) if w.name == name => w.active_track,
        _ => None,
    };
    let mut next = (**s.snapshot.read().expect("lock poisoned")).clone();
    mutate(&mut next, &mut active)?;
    next.validate(Some(bounds(s))).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    next.write(&s.annotations_path).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let body = next.to_canonical_json();
    *s.snapshot.write().expect("lock poisoned") = Arc::new(next);
    *guard = Some(Writer { name, last_seen: now, active_track: active });
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointBody {
    track: u64,
    frame: usize,
    u: f64,
    v: f64,
    #[serde(default)]
    respawn: bool,
}

fn check_point(s: &Session, frame: usize, u: f64, v: f64) -> Result<(), ApiError> {
    let len = s.sequence.frames.len();
    if frame >= len {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("frame {frame} outside 0..{len}")));
    }
    let b = bounds(s);
    if !(u.is_finite() && v.is_finite() && b.contains(u, v)) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("({u}, {v}) outside the {}x{} image", b.width, b.height),
        ));
    }
    Ok(())
}

/// Accepts either a full annotation set (replacing the stored one) or a
/// single point `{track, frame, u, v, respawn}`.
async fn post_annotations(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let s = session(&state, &id)?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "body is not UTF-8"))?;
    let value: Value = serde_json::from_str(text).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    if value.get("tracks").is_some() {
        let set = AnnotationSet::from_json_str(text, Some(bounds(s)))
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
        let len = s.sequence.frames.len();
        if let Some(p) = set.tracks.iter().flat_map(|t| &t.points).find(|p| p.frame >= len) {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("frame {} outside 0..{len}", p.frame)));
        }
        return mutate(&state, s, &headers, |current, _| {
            *current = set;
            Ok(())
        })
        .await;
    }
    let p: PointBody = serde_json::from_value(value).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    check_point(s, p.frame, p.u, p.v)?;
    mutate(&state, s, &headers, |current, active| {
        current.track_mut(p.track).upsert(AnnotatedPoint::new(p.frame, p.u, p.v, p.respawn));
        *active = Some(p.track);
        Ok(())
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RespawnBody {
    frame: usize,
    u: f64,
    v: f64,
    track: Option<u64>,
}

/// Start a new segment at `frame`: the point is recorded with the respawn
/// flag on the named track, else the writer's active track, else a new one.
async fn respawn(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let s = session(&state, &id)?;
    let r: RespawnBody = serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    check_point(s, r.frame, r.u, r.v)?;
    mutate(&state, s, &headers, |current, active| {
        let track = r
            .track
            .or(*active)
            .unwrap_or_else(|| current.tracks.iter().map(|t| t.id + 1).max().unwrap_or(0));
        current.track_mut(track).upsert(AnnotatedPoint::new(r.frame, r.u, r.v, true));
        *active = Some(track);
        Ok(())
    })
    .await
}

async fn require_token(State(state): State<Shared>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "missing or wrong bearer token").into_response();
        }
    }
    next.run(request).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sequences", get(list_sequences))
        .route("/api/sequences/{id}/frames/{n}", get(frame_image))
        .route("/api/sequences/{id}/frames/{n}/overlays", get(frame_overlays))
        .route("/api/sequences/{id}/annotations", get(get_annotations).post(post_annotations))
        .route("/api/sessions/{id}/respawn", post(respawn))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

/// Serve until interrupted.
pub fn serve(config: &ServerConfig, addr: &str) -> Result<(), CliError> {
    let state = Arc::new(load_state(config)?);
    let serve_err = |e: std::io::Error| CliError::new(ErrorCode::Serve, e);
    let runtime = tokio::runtime::Runtime::new().map_err(serve_err)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(serve_err)?;
        let local = listener.local_addr().map_err(serve_err)?;
        let ids: Vec<&String> = state.sessions.keys().collect();
        eprintln!("serving {} sequence(s) {ids:?} on http://{local}", ids.len());
        axum::serve(listener, router(state.clone()))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(serve_err)
    })
}
