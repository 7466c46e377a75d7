use std::collections::BTreeMap;

use acceptance_core::inference::{Posterior, PriorProvenance};
use acceptance_core::survey::ScoredDataset;
use acceptance_core::whatif::{rank, RankingResult, Scenario, ScenarioSummary, SimulationOptions, Simulator};
use acceptance_core::workflow::{load_dataset, posterior_summary, DatasetInput, PosteriorSummary};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ApiError, ApiResult};
use crate::jobs::FitRequest;
use crate::store::ArtifactKind;
use crate::AppState;

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(format!("request body: {e}")))
}

fn raw_json(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

impl AppState {
    fn load(&self, kind: ArtifactKind, what: &str, id: &str) -> ApiResult<Vec<u8>> {
        self.store.get(kind, id)?.ok_or_else(|| ApiError::not_found(what, id))
    }

    fn posterior(&self, id: &str) -> ApiResult<Posterior> {
        Ok(Posterior::from_json(&self.load(ArtifactKind::Posterior, "posterior", id)?)?)
    }

    fn dataset(&self, id: &str) -> ApiResult<ScoredDataset> {
        Ok(ScoredDataset::from_json(&self.load(ArtifactKind::Dataset, "dataset", id)?)?)
    }

    /// The posterior plus the dataset it is used with: the one named in the
    /// request, or else the one it was fit to.
    fn posterior_and_data(&self, posterior_id: &str, dataset_id: Option<&str>) -> ApiResult<(Posterior, ScoredDataset)> {
        let posterior = self.posterior(posterior_id)?;
        let data = self.dataset(dataset_id.unwrap_or(&posterior.dataset_hash))?;
        Ok((posterior, data))
    }
}

pub async fn health() -> Json<Value> {
    Json(json!({ "v": 1, "status": "ok" }))
}

pub async fn graph(State(state): State<AppState>) -> Json<Value> {
    let g = state.instrument.graph();
    Json(json!({
        "v": 1,
        "graphHash": state.instrument.graph_hash(),
        "nodes": g.nodes,
        "edges": g.edges,
    }))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct DatasetCreated {
    v: u32,
    dataset_id: String,
    respondents: usize,
    warnings: Vec<String>,
}

/// Accepts long-format CSV, a JSON array of responses, or an already
/// scored dataset.
pub async fn upload_dataset(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::malformed("empty dataset upload"));
    }
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let kind = if content_type.contains("csv") {
        DatasetInput::ResponsesCsv
    } else {
        DatasetInput::detect(None, &body)
    };
    let instrument = state.instrument.clone();
    let data = tokio::task::spawn_blocking(move || load_dataset(&body, kind, &instrument))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let id = state.store.put(ArtifactKind::Dataset, &data.to_json())?;
    let created = DatasetCreated {
        v: 1,
        dataset_id: id,
        respondents: data.len(),
        warnings: data.provenance.warnings.clone(),
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

pub async fn get_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(raw_json(state.load(ArtifactKind::Dataset, "dataset", &id)?))
}

pub async fn upload_scenario(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let scenario: Scenario = parse(&body)?;
    scenario.validate(state.instrument.graph())?;
    let bytes = serde_json::to_vec(&scenario).expect("scenario serializes");
    let id = state.store.put(ArtifactKind::Scenario, &bytes)?;
    Ok((StatusCode::CREATED, Json(json!({ "v": 1, "scenarioId": id }))).into_response())
}

pub async fn get_scenario(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(raw_json(state.load(ArtifactKind::Scenario, "scenario", &id)?))
}

pub async fn submit_fit(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let request: FitRequest = parse(&body)?;
    request.sampler_config.validate()?;
    state.load(ArtifactKind::Dataset, "dataset", &request.dataset_id)?;
    if let Some(id) = &request.prior_id {
        state.load(ArtifactKind::Prior, "prior", id)?;
    }
    let record = state.jobs.submit(request).await?;
    Ok((StatusCode::ACCEPTED, Json(record)).into_response())
}

pub async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let record = state.jobs.get(&id).await.ok_or_else(|| ApiError::not_found("job", &id))?;
    Ok(Json(record).into_response())
}

pub async fn get_posterior(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(raw_json(state.load(ArtifactKind::Posterior, "posterior", &id)?))
}

pub async fn posterior_provenance(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let p = state
        .store
        .provenance(ArtifactKind::Posterior, &id)?
        .ok_or_else(|| ApiError::not_found("posterior", &id))?;
    Ok(Json(p).into_response())
}

pub async fn summary(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<PosteriorSummary>> {
    let (posterior, data) = state.posterior_and_data(&id, None)?;
    Ok(Json(posterior_summary(&posterior, &data)?))
}

pub async fn compress(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let posterior = state.posterior(&id)?;
    let prior = posterior.compress()?;
    debug_assert!(matches!(prior.provenance, PriorProvenance::Chained { .. }));
    let links = BTreeMap::from([("sourcePosterior".to_string(), id)]);
    let prior_id = state
        .store
        .put_with_provenance(ArtifactKind::Prior, &prior.to_json(), links)?;
    Ok((StatusCode::CREATED, Json(json!({ "v": 1, "priorId": prior_id }))).into_response())
}

pub async fn get_prior(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(raw_json(state.load(ArtifactKind::Prior, "prior", &id)?))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SimulateRequest {
    posterior_id: String,
    #[serde(default)]
    dataset_id: Option<String>,
    #[serde(default)]
    scenario: Option<Scenario>,
    #[serde(default)]
    scenario_id: Option<String>,
    /// Simulated outcomes per respondent per posterior draw.
    #[serde(default)]
    draws: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RankRequest {
    posterior_id: String,
    #[serde(default)]
    dataset_id: Option<String>,
    scenarios: Vec<Scenario>,
    #[serde(default)]
    draws: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

fn simulation_options(draws: Option<usize>, seed: Option<u64>) -> SimulationOptions {
    let defaults = SimulationOptions::default();
    SimulationOptions {
        draws_per_sample: draws.unwrap_or(defaults.draws_per_sample),
        seed: seed.unwrap_or(defaults.seed),
    }
}

#[derive(Debug, Serialize)]
pub struct Versioned<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

pub async fn simulate(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Versioned<ScenarioSummary>>> {
    let request: SimulateRequest = parse(&body)?;
    let scenario = match (request.scenario, &request.scenario_id) {
        (Some(s), None) => s,
        (None, Some(id)) => parse(&state.load(ArtifactKind::Scenario, "scenario", id)?)?,
        (None, None) => Scenario::baseline(),
        (Some(_), Some(_)) => return Err(ApiError::malformed("give either scenario or scenarioId, not both")),
    };
    scenario.validate(state.instrument.graph())?;
    let (posterior, data) = state.posterior_and_data(&request.posterior_id, request.dataset_id.as_deref())?;
    let options = simulation_options(request.draws, request.seed);
    let instrument = state.instrument.clone();
    let summary = tokio::task::spawn_blocking(move || {
        Simulator::new(&posterior, &data, &instrument)?.simulate(&scenario, &options)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(Versioned { v: 1, body: summary }))
}

pub async fn rank_scenarios(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Versioned<RankingResult>>> {
    let request: RankRequest = parse(&body)?;
    let (posterior, data) = state.posterior_and_data(&request.posterior_id, request.dataset_id.as_deref())?;
    let options = simulation_options(request.draws, request.seed);
    let instrument = state.instrument.clone();
    let result = tokio::task::spawn_blocking(move || rank(&posterior, &data, &instrument, &request.scenarios, &options))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(Versioned { v: 1, body: result }))
}
