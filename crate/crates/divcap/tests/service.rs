mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use divcap::service::{router, AppState, ResponseLog};
use divcap_core::survey::{SurveyDoc, SurveyKey};
use serde_json::Value;
use tower::ServiceExt;

struct Fixture {
    dir: tempfile::TempDir,
    docs: Vec<SurveyDoc>,
    keys: Vec<SurveyKey>,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (docs, keys) = common::study(dir.path());
        Fixture { dir, docs, keys }
    }

    fn log_path(&self) -> std::path::PathBuf {
        self.dir.path().join("responses.jsonl")
    }

    fn state(&self, with_keys: bool) -> Arc<AppState> {
        let log = ResponseLog::open(&self.log_path()).unwrap();
        Arc::new(AppState::new(self.docs.clone(), with_keys.then(|| self.keys.clone()), log))
    }

    fn app(&self) -> (Router, Arc<AppState>) {
        let state = self.state(true);
        (router(state.clone(), None), state)
    }
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, String) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(body: String) -> Request<Body> {
    Request::post("/api/responses")
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap()
}

fn keys_in(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.push(k.clone());
                keys_in(x, out);
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| keys_in(x, out)),
        _ => {}
    }
}

#[tokio::test]
async fn surveys_are_served_without_hidden_tags() {
    let fx = Fixture::new();
    let (app, _) = fx.app();
    let (status, body) = call(&app, get("/api/surveys/3")).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["items"].as_array().unwrap().len(), 15);
    for doc in &fx.docs {
        let (status, body) = call(&app, get(&format!("/api/surveys/{}", doc.version_id))).await;
        assert_eq!(status, StatusCode::OK);
        let mut keys = Vec::new();
        keys_in(&serde_json::from_str(&body).unwrap(), &mut keys);
        for banned in ["source", "sources", "level", "levels", "hidden", "kind", "neighbor_id", "random_id"] {
            assert!(!keys.iter().any(|k| k == banned), "leaked key {banned}");
        }
    }
    assert_eq!(call(&app, get("/api/surveys/9")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, get("/api/surveys/abc")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, get("/healthz")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn responses_are_validated_and_deduplicated() {
    let fx = Fixture::new();
    let (app, _) = fx.app();
    let doc = &fx.docs[0];
    let rec = &common::scripted_responses(doc, "ann1", 0)[0];
    let body = serde_json::to_string(rec).unwrap();
    assert_eq!(call(&app, post(body.clone())).await.0, StatusCode::CREATED);
    assert_eq!(call(&app, post(body)).await.0, StatusCode::CONFLICT);

    let simplify = doc.items.iter().find(|i| i.item_id.contains("simplify")).unwrap();
    let bad_rank = serde_json::json!({
        "annotator_id": "ann1", "version_id": doc.version_id, "item_id": simplify.item_id, "answers": {"ranks": [1, 1, 2]}
    });
    assert_eq!(call(&app, post(bad_rank.to_string())).await.0, StatusCode::BAD_REQUEST);

    let meaning = doc.items.iter().find(|i| i.item_id.contains("meaning")).unwrap();
    let short = serde_json::json!({
        "annotator_id": "ann2", "version_id": doc.version_id, "item_id": meaning.item_id, "answers": {"labels": ["matches"]}
    });
    assert_eq!(call(&app, post(short.to_string())).await.0, StatusCode::BAD_REQUEST);

    let wrong_kind = serde_json::json!({
        "annotator_id": "ann2", "version_id": doc.version_id, "item_id": meaning.item_id, "answers": {"ranks": [1, 2, 3]}
    });
    assert_eq!(call(&app, post(wrong_kind.to_string())).await.0, StatusCode::BAD_REQUEST);

    let unknown = serde_json::json!({
        "annotator_id": "ann2", "version_id": doc.version_id, "item_id": "nope", "answers": {"labels": []}
    });
    assert_eq!(call(&app, post(unknown.to_string())).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, post("{\"annotator_id\":1}".into())).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, post("not json".into())).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn empty_log_reports_zero_counts() {
    let fx = Fixture::new();
    let (app, _) = fx.app();
    let (status, body) = call(&app, get("/api/aggregate")).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["n"], 0);
    assert_eq!(v["unanimous"]["meaning"]["items"], 0);

    let keyless = router(fx.state(false), None);
    assert_eq!(call(&keyless, get("/api/aggregate")).await.0, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_annotators_are_all_recorded() {
    let fx = Fixture::new();
    let (app, state) = fx.app();
    let doc = fx.docs[1].clone();
    let mut tasks = Vec::new();
    for a in 0..6 {
        for rec in common::scripted_responses(&doc, &format!("ann{a}"), a) {
            let app = app.clone();
            tasks.push(tokio::spawn(async move { call(&app, post(serde_json::to_string(&rec).unwrap())).await.0 }));
        }
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::CREATED);
    }
    assert_eq!(state.log.len(), 6 * 15);
    let (_, body) = call(&app, get("/api/aggregate")).await;
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["unanimous"]["meaning"]["items"], 5);
    let lines = std::fs::read_to_string(fx.log_path()).unwrap();
    assert_eq!(lines.lines().count(), 90);
}

#[tokio::test]
async fn acknowledged_records_survive_restart() {
    let fx = Fixture::new();
    let before = {
        let (app, _) = fx.app();
        for rec in common::scripted_responses(&fx.docs[2], "a", 0).into_iter().take(7) {
            assert_eq!(call(&app, post(serde_json::to_string(&rec).unwrap())).await.0, StatusCode::CREATED);
        }
        call(&app, get("/api/aggregate")).await.1
    };
    // a crash mid-write leaves an unacknowledged partial line behind
    let mut raw = std::fs::read(fx.log_path()).unwrap();
    raw.extend_from_slice(b"{\"annotator_id\":\"a\",\"vers");
    std::fs::write(fx.log_path(), raw).unwrap();

    let (app, state) = fx.app();
    assert_eq!(state.log.len(), 7);
    assert_eq!(call(&app, get("/api/aggregate")).await.1, before);
    let dup = &common::scripted_responses(&fx.docs[2], "a", 0)[3];
    assert_eq!(call(&app, post(serde_json::to_string(dup).unwrap())).await.0, StatusCode::CONFLICT);
    let next = &common::scripted_responses(&fx.docs[2], "a", 0)[7];
    assert_eq!(call(&app, post(serde_json::to_string(next).unwrap())).await.0, StatusCode::CREATED);
    let text = std::fs::read_to_string(fx.log_path()).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));
}

#[tokio::test]
async fn service_aggregate_matches_cli_output() {
    let fx = Fixture::new();
    let (app, _) = fx.app();
    for (a, doc) in fx.docs.iter().enumerate().take(2) {
        for ann in 0..3 {
            for rec in common::scripted_responses(doc, &format!("v{a}-ann{ann}"), ann + a) {
                assert_eq!(call(&app, post(serde_json::to_string(&rec).unwrap())).await.0, StatusCode::CREATED);
            }
        }
    }
    let (_, served) = call(&app, get("/api/aggregate")).await;

    let surveys = fx.dir.path().join("surveys");
    let keys = fx.dir.path().join("keys");
    divcap::io::write_surveys(&surveys, &fx.docs).unwrap();
    divcap::io::write_keys(&keys, &fx.keys).unwrap();
    let out = fx.dir.path().join("report.json");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_divcap"))
        .args(["survey", "aggregate", "--responses"])
        .arg(fx.log_path())
        .arg("--surveys")
        .arg(&surveys)
        .arg("--keys")
        .arg(&keys)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(out).unwrap(), served);
}
