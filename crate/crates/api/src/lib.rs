//! JSON service over a [`Tracker`]: scoped progress, algorithm comparison,
//! instance listings, plans, exports and batch submissions, all under
//! `/api/v1/`.
//!
//! Reads share a lock; submissions take it exclusively for the whole batch,
//! so no response observes a partially applied batch.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tower_http::compression::CompressionLayer;

use tracker_core::ingest::IngestReport;
use tracker_core::tracking::Tracker;

mod error;
mod handlers;
mod params;

pub use error::ApiError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiConfig {
    /// Largest accepted request body in bytes.
    pub upload_cap: usize,
    /// Batches with more data rows than this are ingested in the background.
    pub async_threshold: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self { upload_cap: 64 << 20, async_threshold: 5_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Done { report: IngestReport },
    Failed { error: String },
}

#[derive(Clone)]
pub struct AppState {
    tracker: Arc<RwLock<Tracker>>,
    config: ApiConfig,
    jobs: Arc<Mutex<BTreeMap<u64, JobState>>>,
}

impl AppState {
    pub fn new(tracker: Tracker, config: ApiConfig) -> Self {
        Self { tracker: Arc::new(RwLock::new(tracker)), config, jobs: Arc::default() }
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    // a panic mid-batch leaves the store unchanged, so a poisoned lock is safe to reuse
    pub fn read(&self) -> RwLockReadGuard<'_, Tracker> {
        self.tracker.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, Tracker> {
        self.tracker.write().unwrap_or_else(|p| p.into_inner())
    }

    pub fn job(&self, id: u64) -> Option<JobState> {
        self.jobs.lock().unwrap_or_else(|p| p.into_inner()).get(&id).cloned()
    }

    fn set_job(&self, id: u64, state: JobState) {
        self.jobs.lock().unwrap_or_else(|p| p.into_inner()).insert(id, state);
    }

    fn new_job(&self) -> u64 {
        let mut jobs = self.jobs.lock().unwrap_or_else(|p| p.into_inner());
        let id = jobs.keys().next_back().map_or(1, |k| k + 1);
        jobs.insert(id, JobState::Pending);
        id
    }
}

pub fn router(state: AppState) -> Router {
    let cap = state.config.upload_cap;
    Router::new()
        .route("/api/v1/progress", get(handlers::progress))
        .route("/api/v1/comparison", get(handlers::comparison))
        .route("/api/v1/instances", get(handlers::instances))
        .route("/api/v1/plan", get(handlers::plan))
        .route("/api/v1/export", get(handlers::export))
        .route("/api/v1/submissions", post(handlers::submit))
        .route("/api/v1/submissions/{id}", get(handlers::job))
        .layer(DefaultBodyLimit::max(cap))
        .layer(CompressionLayer::new())
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
