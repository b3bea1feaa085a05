use std::path::Path;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use retshield_service::api::{router, ServiceConfig};
use retshield_service::options::ModelArgs;

fn app(runs_dir: &Path) -> Router {
    router(ServiceConfig {
        template: ModelArgs::default().template().unwrap(),
        runs_dir: runs_dir.to_path_buf(),
        max_concurrent: 2,
        static_dir: None,
    })
    .unwrap()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, String) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, body) = get(app, uri).await;
    (s, serde_json::from_str(&body).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, body) = send(app, req).await;
    (s, serde_json::from_str(&body).unwrap())
}

async fn wait_finished(app: &Router, id: u64) -> Value {
    for _ in 0..2400 {
        let (_, d) = get_json(app, &format!("/api/v1/runs/{id}")).await;
        if d["status"] == "done" || d["status"] == "failed" {
            return d;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("run {id} did not finish");
}

#[derive(Debug, PartialEq)]
struct Sse {
    id: Option<u64>,
    event: String,
    data: Value,
}

fn parse_sse(text: &str) -> Vec<Sse> {
    text.split("\n\n")
        .filter(|block| !block.trim().is_empty() && !block.starts_with(':'))
        .map(|block| {
            let mut ev = Sse {
                id: None,
                event: "message".into(),
                data: Value::Null,
            };
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("id: ") {
                    ev.id = Some(v.parse().unwrap());
                } else if let Some(v) = line.strip_prefix("event: ") {
                    ev.event = v.into();
                } else if let Some(v) = line.strip_prefix("data: ") {
                    ev.data = serde_json::from_str(v).unwrap();
                }
            }
            ev
        })
        .collect()
}

async fn events(app: &Router, id: u64, last: Option<u64>) -> Vec<Sse> {
    let mut req = Request::get(format!("/api/v1/runs/{id}/events"));
    if let Some(l) = last {
        req = req.header("last-event-id", l.to_string());
    }
    let (s, body) = send(app, req.body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    parse_sse(&body)
}

#[tokio::test]
async fn intents_are_parsed_checked_and_exported() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());

    let (s, list) = get_json(&app, "/api/v1/intents").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(list[0]["formula"], "G cov_ok");

    let (s, rec) = post(&app, "/api/v1/intents", json!({"formula": "G cov_ok"})).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(rec["id"], 2);
    assert_eq!(rec["automaton_id"], "2-phi");
    assert_eq!(rec["verdict"], "satisfiable");
    assert_eq!(rec["features"], json!(["coverage"]));
    assert_eq!(rec["ast_hash"], list[0]["ast_hash"]);

    let (s, err) = post(&app, "/api/v1/intents", json!({"formula": "G (cov_ok"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "parse_error");
    assert_eq!(err["offset"], 9);

    let (s, err) = post(&app, "/api/v1/intents", json!({"text": "G cov_ok"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(err["message"].is_string());

    let (s, rec) = post(&app, "/api/v1/intents", json!({"formula": "G (cov_ok & !cov_ok)"})).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(rec["verdict"], "unsatisfiable_on_model");
    assert!(rec["message"].as_str().unwrap().contains("Modify or relax"));

    let (s, graph) = get_json(&app, "/api/v1/intents/1/automaton?which=phi&format=graph").await;
    assert_eq!(s, StatusCode::OK);
    assert!(graph["states"].as_array().is_some_and(|n| !n.is_empty()), "{graph}");
    let (s, dot) = get(&app, "/api/v1/intents/1/automaton?which=negphi&format=dot").await;
    assert_eq!(s, StatusCode::OK);
    assert!(dot.starts_with("digraph"));
    let (s, _) = get(&app, "/api/v1/intents/1/automaton?format=text").await;
    assert_eq!(s, StatusCode::OK);
    let (s, err) = get_json(&app, "/api/v1/intents/1/automaton?which=psi").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "bad_parameter");

    let (s, product) = get_json(&app, "/api/v1/intents/1/product").await;
    assert_eq!(s, StatusCode::OK);
    assert!(product.is_object());
    let (s, dot) = get(&app, "/api/v1/intents/1/product?format=dot").await;
    assert_eq!(s, StatusCode::OK);
    assert!(dot.starts_with("digraph"));

    let (s, err) = get_json(&app, "/api/v1/intents/99/automaton").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
}

#[tokio::test]
async fn cells_and_models_are_served() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());

    let (s, cells) = get_json(&app, "/api/v1/cells").await;
    assert_eq!(s, StatusCode::OK);
    let cells = cells.as_array().unwrap();
    assert!(cells.len() > 1);
    assert_eq!(cells[0]["tilt_deg"], 7);
    assert!(cells[0]["kpis"]["coverage"].is_number());

    let (s, h) = get_json(&app, "/api/v1/cells/0/kpis").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h["history"].as_array().unwrap().len(), 1);
    let (s, _) = get_json(&app, "/api/v1/cells/999/kpis").await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, m) = get_json(&app, "/api/v1/mdp?features=coverage,quality").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["features"], json!(["coverage", "quality"]));
    let (s, m) = get_json(&app, "/api/v1/mdp").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["features"].as_array().unwrap().len(), 4);
    let (s, err) = get_json(&app, "/api/v1/mdp?features=latency").await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "bad_parameter");

    let (s, err) = get_json(&app, "/nowhere").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
}

#[tokio::test]
async fn run_requests_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, err) = post(&app, "/api/v1/runs", json!({"intent": 42})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
    let (s, _) = post(&app, "/api/v1/runs", json!({"intent": 1, "cell": 999})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = post(&app, "/api/v1/runs", json!({"intent": 1, "episodes": 0})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, "/api/v1/runs", json!({"intent": "G cov_ok"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = get_json(&app, "/api/v1/runs/7").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = get(&app, "/api/v1/runs/7/events").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn event_stream_follows_replays_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, d) = post(
        &app,
        "/api/v1/runs",
        json!({"intent": 1, "cell": 0, "shield": true, "episodes": 4, "seed": 1}),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(d["status"], "pending");
    let id = d["id"].as_u64().unwrap();

    // subscribed before the run ends: follows live and closes at the end
    let live = events(&app, id, None).await;
    let done = wait_finished(&app, id).await;
    assert_eq!(done["status"], "done");
    let report = &done["report"];
    assert_eq!(report["steps"], 200);

    let replay = events(&app, id, None).await;
    assert_eq!(live, replay);
    let (last, body) = replay.split_last().unwrap();
    assert_eq!(last.event, "run_status");
    assert_eq!(last.data["status"], "done");
    assert_eq!(body.len(), 200 + 4);
    for (i, e) in body.iter().enumerate() {
        assert_eq!(e.id, Some(i as u64));
        assert_eq!(e.data["id"], i as u64);
        assert_eq!(e.data["type"], e.event.as_str());
    }
    let blocked = body
        .iter()
        .filter(|e| e.event == "step" && e.data["shield_decision"]["kind"] == "blocked")
        .count();
    assert_eq!(blocked as u64, report["blocked_action_count"].as_u64().unwrap());

    let resumed = events(&app, id, Some(100)).await;
    assert_eq!(resumed.first().unwrap().id, Some(101));
    assert_eq!(&resumed[..], &replay[101..]);

    let (s, names) = get_json(&app, &format!("/api/v1/runs/{id}/artifacts")).await;
    assert_eq!(s, StatusCode::OK);
    assert!(names.as_array().unwrap().iter().any(|n| n == "events.jsonl"));
    let (s, on_disk) = get(&app, &format!("/api/v1/runs/{id}/artifacts/events.jsonl")).await;
    assert_eq!(s, StatusCode::OK);
    let on_disk: Vec<Value> = on_disk.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let streamed: Vec<Value> = body.iter().map(|e| e.data.clone()).collect();
    assert_eq!(on_disk, streamed);
    let (s, _) = get(&app, &format!("/api/v1/runs/{id}/artifacts/..%2Fsecret")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    // the cell board picked up the trajectory
    let (_, h) = get_json(&app, "/api/v1/cells/0/kpis").await;
    assert_eq!(h["history"].as_array().unwrap().len(), 1 + 200);
    let (_, runs) = get_json(&app, "/api/v1/runs").await;
    assert_eq!(runs.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn shield_switch_controls_blocking() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut blocked = Vec::new();
    for shield in [true, false] {
        let (_, d) = post(
            &app,
            "/api/v1/runs",
            json!({"intent": 1, "shield": shield, "episodes": 5}),
        )
        .await;
        let id = d["id"].as_u64().unwrap();
        assert_eq!(wait_finished(&app, id).await["status"], "done");
        let evs = events(&app, id, None).await;
        let steps: Vec<_> = evs.iter().filter(|e| e.event == "step").collect();
        assert!(!steps.is_empty());
        blocked.push(
            steps
                .iter()
                .filter(|e| e.data["shield_decision"]["kind"] == "blocked")
                .count(),
        );
    }
    assert!(blocked[0] >= 1, "shielded run blocked nothing");
    assert_eq!(blocked[1], 0);
}

#[tokio::test]
async fn unsatisfiable_run_fails_with_a_code() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, rec) = post(&app, "/api/v1/intents", json!({"formula": "G (cov_ok & !cov_ok)"})).await;
    let (_, d) = post(&app, "/api/v1/runs", json!({"intent": rec["id"], "episodes": 2})).await;
    let done = wait_finished(&app, d["id"].as_u64().unwrap()).await;
    assert_eq!(done["status"], "failed");
    assert_eq!(done["error"]["code"], "unsatisfiable_on_model");
    assert!(done["report"].is_null());
    let evs = events(&app, d["id"].as_u64().unwrap(), None).await;
    assert_eq!(evs.len(), 1);
    assert_eq!(evs[0].event, "run_status");
}

#[tokio::test]
async fn api_and_cli_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("runs"));
    let (_, d) = post(
        &app,
        "/api/v1/runs",
        json!({"intent": 1, "cell": 0, "shield": true, "episodes": 10, "seed": 3}),
    )
    .await;
    let id = d["id"].as_u64().unwrap();
    assert_eq!(wait_finished(&app, id).await["status"], "done");
    let (_, api_report) = get(&app, &format!("/api/v1/runs/{id}/artifacts/report.json")).await;

    let out = dir.path().join("cli");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_retshield"))
        .args([
            "run",
            "--simulate",
            "--intent",
            "G cov_ok",
            "--shield",
            "on",
            "--episodes",
            "10",
            "--seed",
            "3",
            "--cell",
            "0",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let cli_report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert_eq!(api_report, cli_report);
}

#[tokio::test]
async fn run_ids_continue_after_existing_directories() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("5")).unwrap();
    let app = app(dir.path());
    let (_, d) = post(&app, "/api/v1/runs", json!({"intent": 1, "episodes": 1})).await;
    assert_eq!(d["id"], 6);
    wait_finished(&app, 6).await;
}

#[tokio::test]
async fn static_assets_are_served_beside_the_api() {
    let dir = tempfile::tempdir().unwrap();
    let assets = dir.path().join("ui");
    std::fs::create_dir_all(&assets).unwrap();
    std::fs::write(assets.join("index.html"), "<html>console</html>").unwrap();
    let app = router(ServiceConfig {
        template: ModelArgs::default().template().unwrap(),
        runs_dir: dir.path().join("runs"),
        max_concurrent: 1,
        static_dir: Some(assets),
    })
    .unwrap();
    let (s, body) = get(&app, "/").await;
    assert_eq!(s, StatusCode::OK);
    assert!(body.contains("console"));
    let (s, err) = get_json(&app, "/api/v1/missing").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "not_found");
}
