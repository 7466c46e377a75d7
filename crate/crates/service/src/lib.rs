//! HTTP facade over the acceptance workbench.
//!
//! Artifacts (datasets, posteriors, priors, scenarios) live in a
//! content-addressed file store; fits run as queued background jobs while
//! simulation and ranking answer synchronously.

pub mod error;
pub mod jobs;
mod routes;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use acceptance_core::model::{default_instrument, InstrumentSpec};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::mpsc;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ApiResult};
pub use jobs::{run_fit, FitRequest, JobQueue, JobRecord, JobStatus, Queued, DEFAULT_QUEUE_DEPTH};
pub use store::{ArtifactKind, Provenance, Store};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub instrument: InstrumentSpec,
    pub queue_depth: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            instrument: default_instrument(),
            queue_depth: DEFAULT_QUEUE_DEPTH,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Store,
    pub instrument: Arc<InstrumentSpec>,
    pub jobs: JobQueue,
}

impl AppState {
    /// State plus the receiving end of the fit queue; hand the receiver to
    /// [`AppState::spawn_worker`] to start executing jobs.
    pub fn new(config: &ServiceConfig) -> std::io::Result<(Self, mpsc::Receiver<Queued>)> {
        let store = Store::open(&config.data_dir)?;
        let (jobs, receiver) = JobQueue::new(config.queue_depth);
        let state = Self {
            store,
            instrument: Arc::new(config.instrument.clone()),
            jobs,
        };
        Ok((state, receiver))
    }

    pub fn spawn_worker(&self, receiver: mpsc::Receiver<Queued>) -> tokio::task::JoinHandle<()> {
        tokio::spawn(jobs::worker(
            receiver,
            self.jobs.table().clone(),
            self.store.clone(),
            self.instrument.clone(),
        ))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(routes::health))
        .route("/model/graph", get(routes::graph))
        .route("/datasets", post(routes::upload_dataset))
        .route("/datasets/{id}", get(routes::get_dataset))
        .route("/scenarios", post(routes::upload_scenario))
        .route("/scenarios/{id}", get(routes::get_scenario))
        .route("/jobs/fit", post(routes::submit_fit))
        .route("/jobs/{id}", get(routes::get_job))
        .route("/posteriors/{id}", get(routes::get_posterior))
        .route("/posteriors/{id}/summary", get(routes::summary))
        .route("/posteriors/{id}/provenance", get(routes::posterior_provenance))
        .route("/posteriors/{id}/compress", post(routes::compress))
        .route("/priors/{id}", get(routes::get_prior))
        .route("/simulate", post(routes::simulate))
        .route("/rank", post(routes::rank_scenarios))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Build the app with a running worker. Must be called inside a tokio runtime.
pub fn app(config: &ServiceConfig) -> std::io::Result<Router> {
    let (state, receiver) = AppState::new(config)?;
    state.spawn_worker(receiver);
    Ok(router(state))
}

/// Serve on `addr` until the process is stopped.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let app = app(&config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
