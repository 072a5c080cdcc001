use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use typeprobe_client::{evaluate_manifest, Client, ClientError, EndpointConfig, EvalOptions};
use typeprobe_core::dataset::{build_dataset, Dataset};
use typeprobe_core::generator::{GeneratorConfig, Quota, TextCorpus};
use typeprobe_core::registry::FontRegistry;
use typeprobe_core::runlog::TransportStatus;
use typeprobe_core::assets_dir;

#[derive(Default)]
struct Mock {
    requests: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    /// Number of leading requests answered with 500.
    fail_first: usize,
    always_fail: Option<u16>,
}

async fn handler(State(mock): State<Arc<Mock>>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = mock.requests.fetch_add(1, Ordering::SeqCst);
    let now = mock.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    mock.max_in_flight.fetch_max(now, Ordering::SeqCst);
    tokio::time::sleep(std::time::Duration::from_millis(2)).await;
    mock.in_flight.fetch_sub(1, Ordering::SeqCst);
    if let Some(code) = mock.always_fail {
        return (StatusCode::from_u16(code).unwrap(), Json(json!({"error": "nope"})));
    }
    if n < mock.fail_first {
        return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "flaky"})));
    }
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 100);
    let url = body["messages"][0]["content"][0]["image_url"]["url"].as_str().unwrap();
    assert!(url.starts_with("data:image/png;base64,iVBOR"));
    (StatusCode::OK, Json(json!({"choices": [{"message": {"role": "assistant", "content": "B"}}]})))
}

async fn serve(mock: Arc<Mock>) -> String {
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(mock);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/v1")
}

fn config(base_url: String, max_retries: u32, max_in_flight: usize) -> EndpointConfig {
    EndpointConfig {
        name: "mock".into(),
        base_url,
        key_env: "UNUSED".into(),
        model: "mock-model".into(),
        timeout_secs: 10,
        max_retries,
        max_in_flight,
        backoff_ms: 1,
    }
}

/// A small generated dataset, written once per test binary.
fn dataset(samples: usize) -> Dataset {
    static DIRS: OnceLock<std::sync::Mutex<Vec<(usize, tempfile::TempDir)>>> = OnceLock::new();
    let dirs = DIRS.get_or_init(Default::default);
    let mut guard = dirs.lock().unwrap();
    if let Some((_, d)) = guard.iter().find(|(n, _)| *n == samples) {
        return Dataset::open(d.path()).unwrap();
    }
    let registry = FontRegistry::load(assets_dir().join("registry.toml")).unwrap();
    let corpus = TextCorpus::load(assets_dir().join("corpus/eval.toml")).unwrap();
    let cfg = GeneratorConfig {
        quota: Quota::reference().scaled_to(samples),
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let ds = build_dataset(&cfg, &registry, &corpus).unwrap().write(dir.path(), false).unwrap();
    guard.push((samples, dir));
    ds
}

async fn run(client: &Client, ds: &Dataset, log: &Path, opts: EvalOptions) -> Result<typeprobe_core::runlog::RunLog, ClientError> {
    evaluate_manifest(client, ds, log, &opts, None).await
}

#[tokio::test]
async fn echo_endpoint_answers_verbatim() {
    let mock = Arc::new(Mock::default());
    let client = Client::with_key(config(serve(mock.clone()).await, 0, 2), "k".into()).unwrap();
    let out = client.ask(b"\x89PNG", "Q").await;
    assert_eq!(out.result.as_deref(), Ok("B"));
    assert_eq!(out.attempts, 1);
}

#[tokio::test]
async fn retries_then_succeeds() {
    let mock = Arc::new(Mock {
        fail_first: 2,
        ..Default::default()
    });
    let client = Client::with_key(config(serve(mock.clone()).await, 3, 1), "k".into()).unwrap();
    let out = client.ask(b"\x89PNG", "Q").await;
    assert_eq!(out.result.as_deref(), Ok("B"));
    assert_eq!(out.attempts, 3);
}

#[tokio::test]
async fn gives_up_after_max_retries() {
    let mock = Arc::new(Mock {
        always_fail: Some(500),
        ..Default::default()
    });
    let client = Client::with_key(config(serve(mock.clone()).await, 2, 1), "k".into()).unwrap();
    let out = client.ask(b"\x89PNG", "Q").await;
    assert!(out.result.is_err());
    assert_eq!(out.attempts, 3);
    assert_eq!(out.http_status, Some(500));
}

#[tokio::test]
async fn auth_errors_fail_fast() {
    let mock = Arc::new(Mock {
        always_fail: Some(401),
        ..Default::default()
    });
    let client = Client::with_key(config(serve(mock.clone()).await, 5, 1), "k".into()).unwrap();
    let out = client.ask(b"\x89PNG", "Q").await;
    assert!(out.result.is_err());
    assert_eq!(out.attempts, 1);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn full_run_with_resume() {
    let ds = dataset(250);
    assert_eq!(ds.questions.len(), 1000);
    let mock = Arc::new(Mock::default());
    let client = Client::with_key(config(serve(mock.clone()).await, 1, 8), "k".into()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("runs/mock.log");

    let partial = run(&client, &ds, &log_path, EvalOptions { limit: Some(400), ..Default::default() }).await.unwrap();
    assert_eq!(partial.records.len(), 400);
    assert!(partial.footer.is_none());
    assert_eq!(mock.requests.load(Ordering::SeqCst), 400);

    let log = run(&client, &ds, &log_path, EvalOptions { resume: true, ..Default::default() }).await.unwrap();
    assert_eq!(mock.requests.load(Ordering::SeqCst), 1000, "resume must issue exactly 600 requests");
    assert_eq!(log.records.len(), 1000);
    assert!(log.records.iter().enumerate().all(|(i, r)| r.index == i && r.status == TransportStatus::Ok));
    assert!(log.records.iter().all(|r| r.raw_response.as_deref() == Some("B")));
    assert_eq!(log.footer.as_ref().unwrap().answered, 1000);
    assert!(mock.max_in_flight.load(Ordering::SeqCst) <= 8);
}

#[tokio::test]
async fn resume_against_other_dataset_is_refused() {
    let small = dataset(4);
    let mock = Arc::new(Mock::default());
    let client = Client::with_key(config(serve(mock.clone()).await, 0, 2), "k".into()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("run.log");
    run(&client, &small, &log_path, EvalOptions::default()).await.unwrap();
    let before = mock.requests.load(Ordering::SeqCst);

    let other = dataset(8);
    let err = run(&client, &other, &log_path, EvalOptions { resume: true, ..Default::default() }).await.unwrap_err();
    assert!(matches!(err, ClientError::ManifestMismatch { .. }));
    assert_eq!(mock.requests.load(Ordering::SeqCst), before);
}

#[tokio::test]
async fn permanent_failures_are_recorded() {
    let ds = dataset(4);
    let mock = Arc::new(Mock {
        always_fail: Some(503),
        ..Default::default()
    });
    let client = Client::with_key(config(serve(mock.clone()).await, 1, 2), "k".into()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let log = run(&client, &ds, &dir.path().join("run.log"), EvalOptions::default()).await.unwrap();
    assert_eq!(log.records.len(), 16);
    assert!(log.records.iter().all(|r| r.status == TransportStatus::Failed && r.attempts == 2));
    assert_eq!(log.footer.unwrap().failed, 16);
}
