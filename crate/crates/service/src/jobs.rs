//! Fit jobs: a bounded FIFO queue drained by a single worker.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use acceptance_core::inference::{fit, FitOptions, Measurement, Posterior, PriorSpec, SamplerConfig};
use acceptance_core::model::InstrumentSpec;
use acceptance_core::survey::ScoredDataset;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, RwLock};

use crate::error::{ApiError, ApiResult};
use crate::store::{ArtifactKind, Store};

pub const DEFAULT_QUEUE_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitRequest {
    pub dataset_id: String,
    #[serde(default)]
    pub prior_id: Option<String>,
    #[serde(default)]
    pub sampler_config: SamplerConfig,
    #[serde(default)]
    pub measurement: Measurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobRecord {
    pub v: u32,
    pub job_id: String,
    pub kind: String,
    pub status: JobStatus,
    /// Milliseconds since the Unix epoch.
    pub submitted_at: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_at: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior_id: Option<String>,
    /// Whether every parameter met the R-hat and ESS thresholds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<JobError>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub type JobTable = Arc<RwLock<BTreeMap<String, JobRecord>>>;

#[derive(Debug)]
pub struct Queued {
    pub job_id: String,
    pub request: FitRequest,
}

/// Submission side of the queue.
#[derive(Debug, Clone)]
pub struct JobQueue {
    sender: mpsc::Sender<Queued>,
    table: JobTable,
    counter: Arc<std::sync::atomic::AtomicU64>,
}

impl JobQueue {
    pub fn new(depth: usize) -> (Self, mpsc::Receiver<Queued>) {
        let (sender, receiver) = mpsc::channel(depth.max(1));
        let queue = Self {
            sender,
            table: Arc::default(),
            counter: Arc::default(),
        };
        (queue, receiver)
    }

    pub fn table(&self) -> &JobTable {
        &self.table
    }

    /// Enqueue a fit. Fails with 503 when the queue is full.
    pub async fn submit(&self, request: FitRequest) -> ApiResult<JobRecord> {
        let n = self.counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst) + 1;
        let job_id = format!("job-{n:06}");
        let record = JobRecord {
            v: 1,
            job_id: job_id.clone(),
            kind: "fit".into(),
            status: JobStatus::Queued,
            submitted_at: now_ms(),
            started_at: None,
            finished_at: None,
            posterior_id: None,
            converged: None,
            error: None,
        };
        // hold the table lock so the worker cannot look the job up before it exists
        let mut table = self.table.write().await;
        self.sender
            .try_send(Queued {
                job_id: job_id.clone(),
                request,
            })
            .map_err(|_| ApiError::queue_full())?;
        table.insert(job_id, record.clone());
        Ok(record)
    }

    pub async fn get(&self, job_id: &str) -> Option<JobRecord> {
        self.table.read().await.get(job_id).cloned()
    }
}

/// Run one fit and store the posterior. Shared with the command line so
/// both produce the same bytes.
pub fn run_fit(store: &Store, instrument: &InstrumentSpec, request: &FitRequest) -> ApiResult<Posterior> {
    let data_bytes = store
        .get(ArtifactKind::Dataset, &request.dataset_id)?
        .ok_or_else(|| ApiError::not_found("dataset", &request.dataset_id))?;
    let data = ScoredDataset::from_json(&data_bytes)?;
    let prior = match &request.prior_id {
        Some(id) => {
            let bytes = store
                .get(ArtifactKind::Prior, id)?
                .ok_or_else(|| ApiError::not_found("prior", id))?;
            Some(PriorSpec::from_json(&bytes)?)
        }
        None => None,
    };
    let options = FitOptions {
        sampler: request.sampler_config.clone(),
        measurement: request.measurement,
    };
    let posterior = fit(instrument, &data, prior.as_ref(), &options)?;
    let mut links = BTreeMap::from([("dataset".to_string(), request.dataset_id.clone())]);
    if let Some(id) = &request.prior_id {
        links.insert("prior".into(), id.clone());
    }
    store.put_with_provenance(ArtifactKind::Posterior, &posterior.to_json(), links)?;
    Ok(posterior)
}

async fn update(table: &JobTable, job_id: &str, f: impl FnOnce(&mut JobRecord)) {
    if let Some(record) = table.write().await.get_mut(job_id) {
        f(record);
    }
}

/// Drain the queue one job at a time until every sender is dropped.
pub async fn worker(mut receiver: mpsc::Receiver<Queued>, table: JobTable, store: Store, instrument: Arc<InstrumentSpec>) {
    while let Some(Queued { job_id, request }) = receiver.recv().await {
        update(&table, &job_id, |r| {
            r.status = JobStatus::Running;
            r.started_at = Some(now_ms());
        })
        .await;
        let (store, instrument) = (store.clone(), instrument.clone());
        let outcome = tokio::task::spawn_blocking(move || run_fit(&store, &instrument, &request)).await;
        let finished = now_ms();
        update(&table, &job_id, |r| {
            r.finished_at = Some(finished);
            match outcome {
                Ok(Ok(posterior)) => {
                    r.posterior_id = Some(posterior.id());
                    r.converged = Some(posterior.converged());
                    r.status = JobStatus::Done;
                }
                Ok(Err(e)) => {
                    r.error = Some(JobError {
                        code: e.code.into(),
                        message: e.message,
                    });
                    r.status = JobStatus::Failed;
                }
                Err(e) => {
                    r.error = Some(JobError {
                        code: "internal".into(),
                        message: e.to_string(),
                    });
                    r.status = JobStatus::Failed;
                }
            }
        })
        .await;
        log::info!("{job_id} finished");
    }
}
