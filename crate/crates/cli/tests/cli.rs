use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acceptance_core::inference::{Posterior, PriorProvenance, PriorSpec};
use acceptance_core::model::default_instrument;
use acceptance_core::whatif::{self, SimulationOptions};
use acceptance_core::workflow::{load_dataset, DatasetInput};
use serde_json::Value;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn data(name: &str) -> String {
    data_dir().join(name).display().to_string()
}

fn acceptance<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acceptance"))
        .args(args)
        .env_remove("ACCEPTANCE_DATA_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn fit_wave1(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "fit".to_string(),
        "--data".into(),
        data("survey_wave1.csv"),
        "--instrument".into(),
        data("instrument.json"),
        "--seed".into(),
        "17".into(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    acceptance(&args)
}

#[test]
fn fit_on_bundled_dataset_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("posterior.json");
    let o = fit_wave1(&out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let post = Posterior::from_json(&std::fs::read(&out).unwrap()).unwrap();
    for p in &post.diagnostics_summary.parameters {
        assert!(p.r_hat.unwrap() <= 1.05, "{} R-hat {:?}", p.parameter, p.r_hat);
    }
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("R-hat") && table.contains("BI<-TC"));
}

#[test]
fn fit_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let oa = fit_wave1(&a, &["--json"]);
    let ob = fit_wave1(&b, &["--json"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ja: Value = serde_json::from_slice(&oa.stdout).unwrap();
    let jb: Value = serde_json::from_slice(&ob.stdout).unwrap();
    assert_eq!(ja["posteriorId"], jb["posteriorId"]);
    assert_eq!(ja["v"], 1);
}

#[test]
fn missing_data_file_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("posterior.json");
    let o = acceptance(&["fit", "--data", "no/such/file.csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no/such/file.csv"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(acceptance(&["fit", "--data", "x.csv"]).status.code(), Some(1));
    assert_eq!(acceptance(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(acceptance::<&str>(&[]).status.code(), Some(1));
    assert_eq!(acceptance(&["--help"]).status.code(), Some(0));
}

#[test]
fn short_run_exits_3_but_writes_the_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("posterior.json");
    let o = fit_wave1(&out, &["--warmup", "20", "--draws", "30"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let post = Posterior::from_json(&std::fs::read(&out).unwrap()).unwrap();
    assert!(!post.converged());
    assert!(post.warnings.iter().any(|w| w.contains("diagnostics")));
    let o = acceptance(&["diagnose", "--posterior", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    // compression refuses an unconverged posterior
    let prior = dir.path().join("prior.json");
    let o = acceptance(&["compress", "--posterior", out.to_str().unwrap(), "--out", prior.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!prior.exists());
}

#[test]
fn workflow_simulate_report_rank_compress_and_chain() {
    let dir = tempfile::tempdir().unwrap();
    let post_path = dir.path().join("posterior.json");
    assert_eq!(fit_wave1(&post_path, &[]).status.code(), Some(0));
    let post_arg = post_path.to_str().unwrap();
    let wave1 = data("survey_wave1.csv");

    // empty scenario equals the library baseline
    let o = acceptance(&[
        "simulate",
        "--posterior",
        post_arg,
        "--data",
        &wave1,
        "--scenario",
        &data("scenarios/baseline.json"),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let inst = default_instrument();
    let dataset = load_dataset(&std::fs::read(&wave1).unwrap(), DatasetInput::ResponsesCsv, &inst).unwrap();
    let post = Posterior::from_json(&std::fs::read(&post_path).unwrap()).unwrap();
    let baseline = whatif::baseline(&post, &dataset, &inst, &SimulationOptions::default()).unwrap();
    let mut expected = serde_json::to_value(&baseline).unwrap();
    expected["v"] = 1.into();
    assert_eq!(serde_json::from_slice::<Value>(&o.stdout).unwrap(), expected);

    // report raw means are the scoring output
    let o = acceptance(&["report", "--posterior", post_arg, "--data", &wave1, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    for (row, stats) in summary["constructRawMeans"].as_array().unwrap().iter().zip(&dataset.column_stats) {
        assert_eq!(row["mean"].as_f64().unwrap(), stats.mean);
    }
    let o = acceptance(&["report", "--posterior", post_arg, "--data", &wave1]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("raw mean"), "{text}");

    let o = acceptance(&[
        "rank",
        "--posterior",
        post_arg,
        "--data",
        &wave1,
        "--scenarios",
        &data("scenarios/candidates.json"),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ranking: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(ranking["ranking"].as_array().unwrap().len(), 4);

    let o = acceptance(&[
        "compare",
        "--posterior",
        post_arg,
        "--data",
        &wave1,
        "--scenarios",
        &data("scenarios/training.json"),
        &data("scenarios/ide-integration.json"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("ide-integration"));

    // several scenarios in a simulate call is a usage error
    let o = acceptance(&[
        "simulate",
        "--posterior",
        post_arg,
        "--data",
        &wave1,
        "--scenario",
        &data("scenarios/candidates.json"),
    ]);
    assert_eq!(o.status.code(), Some(1));

    // the posterior belongs to wave 1
    let o = acceptance(&[
        "report",
        "--posterior",
        post_arg,
        "--data",
        &data("survey_wave2.csv"),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let prior_path = dir.path().join("prior.json");
    let o = acceptance(&["compress", "--posterior", post_arg, "--out", prior_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let prior = PriorSpec::from_json(&std::fs::read(&prior_path).unwrap()).unwrap();
    assert_eq!(
        prior.provenance,
        PriorProvenance::Chained {
            source_posterior_id: post.id()
        }
    );
    let chained = dir.path().join("wave2.json");
    let o = acceptance(&[
        "fit",
        "--data",
        &data("survey_wave2.csv"),
        "--prior",
        prior_path.to_str().unwrap(),
        "--out",
        chained.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let wave2 = Posterior::from_json(&std::fs::read(&chained).unwrap()).unwrap();
    assert_eq!(wave2.prior_hash, prior.hash());
}

#[test]
fn relative_paths_fall_back_to_the_data_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("posterior.json");
    let o = Command::new(env!("CARGO_BIN_EXE_acceptance"))
        .current_dir(dir.path())
        .env("ACCEPTANCE_DATA_DIR", data_dir())
        .args(["fit", "--data", "survey_wave1.csv", "--warmup", "50", "--draws", "50", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(matches!(o.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
}
