//! Local HTTP service: decomposition jobs, read-only views of the current
//! bundle, and pigment-space edits with undo/redo.
//!
//! One writer at a time (edits, undo/redo, finished decompositions, loads);
//! readers clone an `Arc` of the current snapshot, so they see the bundle
//! either before or after an edit, never a mixture.

mod error;
pub mod ops;
mod routes;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;

pub use error::{ApiError, ApiResult};
pub use state::{AppState, JobResult, JobStatus, Snapshot, THUMBNAIL_EDGE, UNDO_DEPTH};

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/decompose", post(routes::decompose))
        .route("/job/{id}", get(routes::job))
        .route("/edit", post(routes::edit))
        .route("/undo", post(routes::undo))
        .route("/redo", post(routes::redo))
        .route("/palette", get(routes::palette))
        .route("/weights/{i}", get(routes::weights))
        .route("/render", get(routes::render))
        .route("/dictionary", get(routes::dictionary))
        .route("/session/save", post(routes::save))
        .route("/session/load", post(routes::load))
        .with_state(state)
}

/// Serve until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
