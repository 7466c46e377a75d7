use std::time::Duration;

use acceptance_core::inference::{fit, FitOptions, Posterior, SamplerConfig};
use acceptance_core::model::{default_instrument, ConstructId};
use acceptance_core::survey::{to_csv, ScoredDataset};
use acceptance_core::synthetic::Generator;
use acceptance_core::whatif::{self, InterventionScale, Scenario, SimulationOptions};
use acceptance_core::workflow::{load_dataset, DatasetInput};
use acceptance_service::{router, AppState, ServiceConfig};
use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    app: Router,
    _dir: tempfile::TempDir,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let (state, receiver) = AppState::new(&ServiceConfig::new(dir.path())).unwrap();
    state.spawn_worker(receiver);
    Harness {
        app: router(state),
        _dir: dir,
    }
}

async fn send(app: &Router, method: Method, uri: &str, body: Vec<u8>, content_type: &str) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Method::GET, uri, Vec::new(), "application/json").await
}

async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (status, bytes) = send(app, Method::POST, uri, serde_json::to_vec(&body).unwrap(), "application/json").await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn fixture_csv(seed: u64, respondents: usize) -> String {
    let g = Generator {
        seed,
        respondents,
        ..Generator::default()
    };
    to_csv(&g.responses(&default_instrument()))
}

fn quick_sampler(seed: u64) -> SamplerConfig {
    SamplerConfig {
        warmup_draws: 400,
        kept_draws: 400,
        seed,
        ..SamplerConfig::default()
    }
}

async fn upload(app: &Router, csv: &str) -> String {
    let (status, body) = send(app, Method::POST, "/datasets", csv.as_bytes().to_vec(), "text/csv").await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&body));
    let v: Value = serde_json::from_slice(&body).unwrap();
    v["datasetId"].as_str().unwrap().to_string()
}

async fn wait_for(app: &Router, job_id: &str) -> Value {
    for _ in 0..600 {
        let (status, body) = get(app, &format!("/jobs/{job_id}")).await;
        assert_eq!(status, StatusCode::OK);
        let v: Value = serde_json::from_slice(&body).unwrap();
        if v["status"] == "done" || v["status"] == "failed" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {job_id} did not finish");
}

async fn fit_via_service(app: &Router, dataset_id: &str, prior_id: Option<&str>, sampler: SamplerConfig) -> Value {
    let mut body = json!({ "datasetId": dataset_id, "samplerConfig": sampler });
    if let Some(p) = prior_id {
        body["priorId"] = json!(p);
    }
    let (status, record) = post_json(app, "/jobs/fit", body).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{record}");
    assert_eq!(record["status"], "queued");
    wait_for(app, record["jobId"].as_str().unwrap()).await
}

#[tokio::test]
async fn graph_has_twelve_nodes_and_thirteen_edges() {
    let h = harness();
    let (status, body) = get(&h.app, "/model/graph").await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["v"], 1);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 12);
    let edges = v["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 13);
    let mut into_use: Vec<&str> = edges
        .iter()
        .filter(|e| e["to"] == "USE")
        .map(|e| e["from"].as_str().unwrap())
        .collect();
    into_use.sort();
    assert_eq!(into_use, vec!["BI", "FC", "HB"]);
}

#[tokio::test]
async fn uploads_are_idempotent_and_content_addressed() {
    let h = harness();
    let csv = fixture_csv(42, 60);
    let a = upload(&h.app, &csv).await;
    let b = upload(&h.app, &csv).await;
    assert_eq!(a, b);
    let (status, stored) = get(&h.app, &format!("/datasets/{a}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(acceptance_core::hashing::sha256_hex(&stored), a);
    // same scores as scoring the file directly
    let direct = load_dataset(csv.as_bytes(), DatasetInput::ResponsesCsv, &default_instrument()).unwrap();
    assert_eq!(direct.hash(), a);
    // a scored dataset uploaded as JSON lands on the same id
    let (status, body) = send(&h.app, Method::POST, "/datasets", stored, "application/json").await;
    assert_eq!(status, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["datasetId"], a.as_str());
}

#[tokio::test]
async fn input_errors_map_to_status_codes() {
    let h = harness();
    let (status, _) = send(&h.app, Method::POST, "/datasets", b"  ".to_vec(), "text/csv").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let bad_value = "respondent_id,wave,item_id,value\nr1,1,PE1,9\n";
    let (status, body) = send(&h.app, Method::POST, "/datasets", bad_value.as_bytes().to_vec(), "text/csv").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{}", String::from_utf8_lossy(&body));
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["v"], 1);
    assert!(v["error"]["message"].as_str().unwrap().contains("PE1"));

    let (status, _) = send(&h.app, Method::POST, "/jobs/fit", b"{not json".to_vec(), "application/json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let missing = "0".repeat(64);
    let (status, _) = post_json(&h.app, "/jobs/fit", json!({ "datasetId": missing })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let id = upload(&h.app, &fixture_csv(42, 40)).await;
    let (status, _) = post_json(&h.app, "/jobs/fit", json!({ "datasetId": id, "samplerConfig": { "chains": 1 } })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    for uri in ["/jobs/job-999999", "/posteriors/abc/summary", "/priors/abc"] {
        assert_eq!(get(&h.app, uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (status, _) = post_json(&h.app, "/simulate", json!({ "posteriorId": missing })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn fit_job_matches_direct_fit_byte_for_byte() {
    let h = harness();
    let csv = fixture_csv(42, 120);
    let dataset_id = upload(&h.app, &csv).await;
    let job = fit_via_service(&h.app, &dataset_id, None, quick_sampler(7)).await;
    assert_eq!(job["status"], "done", "{job}");
    assert!(job["finishedAt"].as_u64().unwrap() >= job["submittedAt"].as_u64().unwrap());
    let posterior_id = job["posteriorId"].as_str().unwrap();
    let (status, served) = get(&h.app, &format!("/posteriors/{posterior_id}")).await;
    assert_eq!(status, StatusCode::OK);

    let inst = default_instrument();
    let data = load_dataset(csv.as_bytes(), DatasetInput::ResponsesCsv, &inst).unwrap();
    let options = FitOptions {
        sampler: quick_sampler(7),
        ..FitOptions::default()
    };
    let direct = fit(&inst, &data, None, &options).unwrap();
    assert_eq!(served, direct.to_json());
    assert_eq!(direct.id(), posterior_id);

    let (status, body) = get(&h.app, &format!("/posteriors/{posterior_id}/summary")).await;
    assert_eq!(status, StatusCode::OK);
    let summary: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(summary["coefficients"].as_array().unwrap().len(), 17);
    assert_eq!(summary["constructRawMeans"].as_array().unwrap().len(), 12);
    assert_eq!(summary["constructRawMeans"][0]["mean"].as_f64().unwrap(), data.column_stats[0].mean);

    let (_, body) = get(&h.app, &format!("/posteriors/{posterior_id}/provenance")).await;
    let p: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(p["links"]["dataset"], dataset_id.as_str());
}

#[tokio::test]
async fn simulate_and_rank_match_the_library() {
    let h = harness();
    let csv = fixture_csv(42, 100);
    let dataset_id = upload(&h.app, &csv).await;
    let job = fit_via_service(&h.app, &dataset_id, None, quick_sampler(3)).await;
    let posterior_id = job["posteriorId"].as_str().unwrap().to_string();

    let inst = default_instrument();
    let (_, bytes) = get(&h.app, &format!("/posteriors/{posterior_id}")).await;
    let posterior = Posterior::from_json(&bytes).unwrap();
    let (_, bytes) = get(&h.app, &format!("/datasets/{dataset_id}")).await;
    let data = ScoredDataset::from_json(&bytes).unwrap();

    let (status, served) = post_json(&h.app, "/simulate", json!({ "posteriorId": posterior_id, "scenario": { "name": "baseline", "set": {} } })).await;
    assert_eq!(status, StatusCode::OK, "{served}");
    let baseline = whatif::baseline(&posterior, &data, &inst, &SimulationOptions::default()).unwrap();
    let mut expected = serde_json::to_value(&baseline).unwrap();
    expected["v"] = json!(1);
    assert_eq!(served, expected);

    let scenarios = vec![
        Scenario::new("tc").with(ConstructId::TC, 6.0, InterventionScale::Raw),
        Scenario::new("fc").with(ConstructId::FC, 6.0, InterventionScale::Raw),
        Scenario::new("tr").with(ConstructId::TR, 6.0, InterventionScale::Raw),
        Scenario::new("pi").with(ConstructId::PI, 6.0, InterventionScale::Raw),
    ];
    let (status, served) = post_json(
        &h.app,
        "/rank",
        json!({ "posteriorId": posterior_id, "scenarios": scenarios, "seed": 11 }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{served}");
    let options = SimulationOptions {
        seed: 11,
        ..SimulationOptions::default()
    };
    let direct = whatif::rank(&posterior, &data, &inst, &scenarios, &options).unwrap();
    let mut expected = serde_json::to_value(&direct).unwrap();
    expected["v"] = json!(1);
    assert_eq!(served, expected);

    // stored scenarios can be referenced by id
    let (status, created) = post_json(&h.app, "/scenarios", serde_json::to_value(&scenarios[0]).unwrap()).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, by_id) = post_json(&h.app, "/simulate", json!({ "posteriorId": posterior_id, "scenarioId": created["scenarioId"] })).await;
    let (_, inline) = post_json(&h.app, "/simulate", json!({ "posteriorId": posterior_id, "scenario": scenarios[0] })).await;
    assert_eq!(by_id, inline);

    let (status, _) = post_json(
        &h.app,
        "/simulate",
        json!({ "posteriorId": posterior_id, "scenario": { "name": "x", "set": { "BI": { "value": 1.0 } } } }),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn posterior_used_with_another_dataset_conflicts() {
    let h = harness();
    let first = upload(&h.app, &fixture_csv(42, 80)).await;
    let second = upload(&h.app, &fixture_csv(43, 80)).await;
    let job = fit_via_service(&h.app, &first, None, quick_sampler(5)).await;
    let posterior_id = job["posteriorId"].as_str().unwrap();
    let (status, body) = post_json(&h.app, "/simulate", json!({ "posteriorId": posterior_id, "datasetId": second })).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["error"]["code"], "hash_mismatch");
}

#[tokio::test]
async fn compress_then_chain_into_the_next_wave() {
    let h = harness();
    let wave1 = upload(&h.app, &fixture_csv(42, 150)).await;
    let wave2 = upload(&h.app, &fixture_csv(43, 150)).await;
    let job = fit_via_service(&h.app, &wave1, None, SamplerConfig::default().with_seed(1)).await;
    assert_eq!(job["converged"], true, "{job}");
    let posterior_id = job["posteriorId"].as_str().unwrap().to_string();
    let (status, body) = post_json(&h.app, &format!("/posteriors/{posterior_id}/compress"), json!({})).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let prior_id = body["priorId"].as_str().unwrap().to_string();
    let (_, prior) = get(&h.app, &format!("/priors/{prior_id}")).await;
    let prior: Value = serde_json::from_slice(&prior).unwrap();
    assert_eq!(prior["provenance"]["sourcePosteriorId"], posterior_id.as_str());

    let chained = fit_via_service(&h.app, &wave2, Some(&prior_id), SamplerConfig::default().with_seed(2)).await;
    assert_eq!(chained["status"], "done", "{chained}");
    let (_, body) = get(&h.app, &format!("/posteriors/{}/provenance", chained["posteriorId"].as_str().unwrap())).await;
    let p: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(p["links"]["prior"], prior_id.as_str());
    assert_eq!(p["links"]["dataset"], wave2.as_str());
}

#[tokio::test]
async fn full_queue_answers_503() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig::new(dir.path());
    config.queue_depth = 2;
    // no worker: jobs stay queued
    let (state, _receiver) = AppState::new(&config).unwrap();
    let app = router(state);
    let id = upload(&app, &fixture_csv(42, 30)).await;
    let mut statuses = Vec::new();
    for _ in 0..3 {
        statuses.push(post_json(&app, "/jobs/fit", json!({ "datasetId": id })).await.0);
    }
    assert_eq!(statuses, vec![StatusCode::ACCEPTED, StatusCode::ACCEPTED, StatusCode::SERVICE_UNAVAILABLE]);
    let (_, body) = get(&app, "/jobs/job-000001").await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "queued");
}

#[tokio::test]
async fn cross_origin_requests_are_allowed() {
    let h = harness();
    let request = Request::builder()
        .uri("/health")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let response = h.app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    assert_eq!(response.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}
