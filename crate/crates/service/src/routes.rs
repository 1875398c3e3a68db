use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use pigment_core::pipeline::{decompose as run_decomposition, DecomposeOptions};
use pigment_core::solver::InitMode;
use pigment_core::{RenderContext, WavelengthGrid};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{ApiError, ApiResult};
use crate::ops;
use crate::state::{AppState, JobResult, JobStatus, LevelSummary, Snapshot, THUMBNAIL_EDGE};

type Shared = State<Arc<AppState>>;

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn hex(c: [f64; 3]) -> String {
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", q(c[0]), q(c[1]), q(c[2]))
}

fn param<T: FromStr>(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<T>> {
    q.get(key)
        .map(|v| v.parse().map_err(|_| ApiError::bad_request(format!("invalid {key}: {v:?}"))))
        .transpose()
}

fn decompose_options(q: &HashMap<String, String>) -> ApiResult<DecomposeOptions> {
    const KNOWN: [&str; 5] = ["m", "wavelengths", "seed", "init", "seeds"];
    if let Some(k) = q.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(ApiError::bad_request(format!("unknown parameter {k:?}")));
    }
    let m: usize = param(q, "m")?.ok_or_else(|| ApiError::bad_request("missing m"))?;
    if m == 0 {
        return Err(ApiError::bad_request("m must be at least 1"));
    }
    let mut opts = DecomposeOptions::new(m);
    opts.grid = match param::<usize>(q, "wavelengths")?.unwrap_or(8) {
        8 => WavelengthGrid::Bands8,
        3 => WavelengthGrid::Bands3,
        l => return Err(ApiError::bad_request(format!("unsupported wavelength count {l} (use 3 or 8)"))),
    };
    let seed = param(q, "seed")?.unwrap_or(0);
    let seeds = param(q, "seeds")?.unwrap_or(1);
    opts.init = match q.get("init").map(String::as_str) {
        None | Some("dictionary") => InitMode::Dictionary,
        Some("random") if seeds > 0 => InitMode::Random { seeds, seed },
        Some(other) => return Err(ApiError::bad_request(format!("invalid init {other:?}"))),
    };
    Ok(opts)
}

pub async fn decompose(
    State(state): Shared,
    Query(q): Query<HashMap<String, String>>,
    body: Bytes,
) -> ApiResult<Response> {
    let opts = decompose_options(&q)?;
    let image = pigment_io::decode_png(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;

    let id = {
        let mut jobs = state.jobs.lock().expect("jobs lock");
        if let Some(id) = jobs.running {
            return Err(ApiError::conflict(format!("decomposition job {id} is still running")));
        }
        jobs.next_id += 1;
        let id = jobs.next_id;
        jobs.running = Some(id);
        jobs.status.insert(id, JobStatus::Running);
        id
    };
    log::info!("job {id}: {}x{} image, M = {}", image.width(), image.height(), opts.palette_size);

    let worker = Arc::clone(&state);
    tokio::task::spawn_blocking(move || {
        let status = match run_decomposition(&image, &worker.dict, &opts) {
            Ok(d) => {
                let summary = |revision| JobResult {
                    width: d.bundle.width(),
                    height: d.bundle.height(),
                    pigments: d.bundle.palette().len(),
                    wavelengths: d.bundle.context().len(),
                    rmse: d.rmse,
                    subset_size: d.subset_size,
                    anls_iterations: d.anls_iterations,
                    anls_converged: d.anls_converged,
                    anls_energy: d.anls_energy.clone(),
                    levels: d
                        .levels
                        .iter()
                        .map(|l| LevelSummary {
                            width: l.width,
                            height: l.height,
                            initial_energy: l.initial_energy,
                            final_energy: l.final_energy,
                            iterations: l.iterations,
                        })
                        .collect(),
                    revision,
                };
                match Snapshot::new(d.bundle.clone()) {
                    Ok(snap) => {
                        let _writer = worker.writer.blocking_lock();
                        let revision = worker.session.write().expect("session lock").reset(Arc::new(snap));
                        JobStatus::Done {
                            result: summary(revision),
                        }
                    }
                    Err(e) => JobStatus::Failed { error: e.message },
                }
            }
            Err(e) => JobStatus::Failed { error: e.to_string() },
        };
        if let JobStatus::Failed { error } = &status {
            log::warn!("job {id} failed: {error}");
        }
        let mut jobs = worker.jobs.lock().expect("jobs lock");
        jobs.status.insert(id, status);
        jobs.running = None;
    });

    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": id }))).into_response())
}

pub async fn job(State(state): Shared, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let jobs = state.jobs.lock().expect("jobs lock");
    let status = jobs
        .status
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no job {id}")))?;
    let mut body = serde_json::to_value(status).map_err(|e| ApiError::internal(e.to_string()))?;
    body["job_id"] = id.into();
    Ok(Json(body))
}

/// Response to every state change: the new render and weight thumbnails.
fn edit_response(snap: &Snapshot, revision: u64) -> ApiResult<Json<Value>> {
    let thumbnails = (0..snap.bundle.palette().len())
        .map(|i| Ok(BASE64.encode(snap.weight_png(i, Some(THUMBNAIL_EDGE))?)))
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(Json(json!({
        "revision": revision,
        "width": snap.bundle.width(),
        "height": snap.bundle.height(),
        "image": BASE64.encode(&snap.png),
        "thumbnails": thumbnails,
    })))
}

pub async fn edit(State(state): Shared, body: Bytes) -> ApiResult<Json<Value>> {
    let body: Value = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid JSON: {e}")))?;
    let op = ops::parse(&body)?;

    let _writer = state.writer.lock().await;
    let (current, _) = state.current()?;
    let worker = Arc::clone(&state);
    let snap = tokio::task::spawn_blocking(move || -> ApiResult<Snapshot> {
        Snapshot::new(ops::apply(&op, &current.bundle, &worker.dict)?)
    })
    .await
    .map_err(|e| ApiError::internal(format!("edit task: {e}")))??;
    let snap = Arc::new(snap);
    let revision = state.session.write().expect("session lock").push(Arc::clone(&snap));
    log::debug!("edit {} -> revision {revision}", body["op"]);
    edit_response(&snap, revision)
}

pub async fn undo(State(state): Shared) -> ApiResult<Json<Value>> {
    let _writer = state.writer.lock().await;
    state.current()?;
    let revision = state.session.write().expect("session lock").undo()?;
    edit_response(&state.current()?.0, revision)
}

pub async fn redo(State(state): Shared) -> ApiResult<Json<Value>> {
    let _writer = state.writer.lock().await;
    state.current()?;
    let revision = state.session.write().expect("session lock").redo()?;
    edit_response(&state.current()?.0, revision)
}

pub async fn palette(State(state): Shared) -> ApiResult<Json<Value>> {
    let (snap, revision) = state.current()?;
    let b = &snap.bundle;
    let pal = b.palette();
    let pigments: Vec<Value> = pal
        .swatches(b.context())
        .into_iter()
        .enumerate()
        .map(|(i, rgb)| {
            json!({
                "index": i,
                "rgb": rgb,
                "hex": hex(rgb),
                "a": pal.a(i),
                "s": pal.s(i),
            })
        })
        .collect();
    Ok(Json(json!({
        "revision": revision,
        "wavelengths_nm": b.context().grid().centers(),
        "pigments": pigments,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightQuery {
    /// Downsample (2×2 boxes) until the longest edge fits.
    max_edge: Option<usize>,
}

pub async fn weights(
    State(state): Shared,
    Path(i): Path<usize>,
    Query(q): Query<WeightQuery>,
) -> ApiResult<Response> {
    let (snap, _) = state.current()?;
    Ok(png(snap.weight_png(i, q.max_edge.map(|e| e.max(1)))?))
}

pub async fn render(State(state): Shared) -> ApiResult<Response> {
    let (snap, _) = state.current()?;
    Ok(png(snap.png.clone()))
}

/// Dictionary swatches on the current bundle's grid (8 bands when nothing
/// is loaded), for picking swap targets.
pub async fn dictionary(State(state): Shared) -> ApiResult<Json<Value>> {
    let ctx = match state.current() {
        Ok((snap, _)) => snap.bundle.context().clone(),
        Err(_) => RenderContext::standard(WavelengthGrid::Bands8),
    };
    let colors = state.dict.rendered(&ctx)?;
    let entries: Vec<Value> = state
        .dict
        .entries()
        .iter()
        .zip(colors)
        .map(|(e, rgb)| json!({ "name": e.name, "rgb": rgb, "hex": hex(rgb) }))
        .collect();
    Ok(Json(json!({ "pigments": entries })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathBody {
    path: PathBuf,
}

fn path_body(body: &[u8]) -> ApiResult<PathBuf> {
    let b: PathBody = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(b.path)
}

pub async fn save(State(state): Shared, body: Bytes) -> ApiResult<Json<Value>> {
    let path = path_body(&body)?;
    let (snap, revision) = state.current()?;
    let dir = path.clone();
    tokio::task::spawn_blocking(move || pigment_io::save_bundle(&snap.bundle, &dir))
        .await
        .map_err(|e| ApiError::internal(format!("save task: {e}")))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    log::info!("saved revision {revision} to {}", path.display());
    Ok(Json(json!({ "revision": revision, "path": path })))
}

pub async fn load(State(state): Shared, body: Bytes) -> ApiResult<Json<Value>> {
    let path = path_body(&body)?;
    let _writer = state.writer.lock().await;
    let dir = path.clone();
    let snap = tokio::task::spawn_blocking(move || -> ApiResult<Snapshot> {
        Snapshot::new(pigment_io::load_bundle(&dir)?)
    })
    .await
    .map_err(|e| ApiError::internal(format!("load task: {e}")))??;
    let snap = Arc::new(snap);
    let revision = state.session.write().expect("session lock").reset(Arc::clone(&snap));
    log::info!("loaded {} as revision {revision}", path.display());
    edit_response(&snap, revision)
}
