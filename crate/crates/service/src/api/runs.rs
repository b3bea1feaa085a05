//! Training runs: background workers, run descriptors, artifacts and the
//! event stream.
//!
//! Each run owns its event log. Stream subscribers keep their own cursor
//! into it and are woken through a watch channel, so a late subscriber
//! replays from the start (or from `Last-Event-ID`) and then follows live.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Semaphore};

use retshield::agent::{AgentEvent, EventSink, SinkError, TrainingReport};
use retshield::pipeline::{run_pipeline, PipelineError, PipelineOutcome};
use retshield::sim::KpiRecord;

use super::{ApiError, ApiResult, Shared};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
}

impl RunStatus {
    pub fn is_finished(self) -> bool {
        matches!(self, RunStatus::Done | RunStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDescriptor {
    pub id: u64,
    pub cell: usize,
    pub intent: u64,
    pub shield_enabled: bool,
    pub episodes: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub report: Option<TrainingReport>,
    pub error: Option<RunFailure>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    #[serde(default)]
    pub cell: usize,
    pub intent: u64,
    #[serde(default = "default_true")]
    pub shield: bool,
    pub episodes: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

struct StoredEvent {
    id: u64,
    kind: &'static str,
    data: String,
}

struct RunLog {
    descriptor: RunDescriptor,
    events: Vec<StoredEvent>,
}

pub(crate) struct RunHandle {
    log: Mutex<RunLog>,
    wake: watch::Sender<()>,
}

impl RunHandle {
    fn descriptor(&self) -> RunDescriptor {
        self.log.lock().expect("run lock").descriptor.clone()
    }

    fn update(&self, f: impl FnOnce(&mut RunLog)) {
        f(&mut self.log.lock().expect("run lock"));
        self.wake.send_replace(());
    }
}

/// Pushes training events into the run log as they are emitted.
struct LogSink(Arc<RunHandle>);

impl EventSink for LogSink {
    fn emit(&mut self, e: &AgentEvent) -> Result<(), SinkError> {
        let data = serde_json::to_string(e).map_err(|e| SinkError(e.to_string()))?;
        self.0.update(|log| {
            log.events.push(StoredEvent {
                id: e.id(),
                kind: e.kind(),
                data,
            })
        });
        Ok(())
    }
}

pub(crate) struct RunTable {
    next: AtomicU64,
    runs: RwLock<BTreeMap<u64, Arc<RunHandle>>>,
    permits: Arc<Semaphore>,
}

impl RunTable {
    pub(crate) fn new(max_concurrent: usize, runs_dir: &std::path::Path) -> Self {
        // run directories from earlier processes are left alone
        let last = fs::read_dir(runs_dir)
            .into_iter()
            .flatten()
            .filter_map(|e| e.ok()?.file_name().to_str()?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        RunTable {
            next: AtomicU64::new(last + 1),
            runs: RwLock::new(BTreeMap::new()),
            permits: Arc::new(Semaphore::new(max_concurrent.max(1))),
        }
    }

    fn get(&self, id: u64) -> ApiResult<Arc<RunHandle>> {
        self.runs
            .read()
            .expect("run table lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("run"))
    }
}

pub(crate) fn routes() -> Router<Shared> {
    Router::new()
        .route("/runs", post(create_run).get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/events", get(run_events))
        .route("/runs/{id}/artifacts", get(list_artifacts))
        .route("/runs/{id}/artifacts/{name}", get(get_artifact))
}

fn run_dir(st: &Shared, id: u64) -> PathBuf {
    st.cfg.runs_dir.join(id.to_string())
}

fn failure(e: &PipelineError) -> RunFailure {
    let code = match e {
        PipelineError::Parse(_) => "parse_error",
        PipelineError::Env(_) | PipelineError::Train(_) | PipelineError::Io(_) => "internal",
        _ => "input_error",
    };
    RunFailure {
        code: code.into(),
        message: e.to_string(),
    }
}

async fn create_run(
    State(st): State<Shared>,
    body: Result<Json<RunRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<RunDescriptor>)> {
    let Json(req) = body?;
    let (text, _) = st
        .intent_formula(req.intent)
        .ok_or_else(|| ApiError::not_found("intent"))?;
    if req.cell >= st.n_cells() {
        return Err(ApiError::not_found("cell"));
    }
    let mut cfg = st.cfg.template.clone();
    cfg.intent = text;
    cfg.shield = req.shield;
    cfg.seed = req.seed;
    if let Some(n) = req.episodes {
        cfg.agent.episodes = n;
    }
    cfg.agent
        .validate()
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_parameter", e.to_string()))?;
    if let Some(sim) = cfg.simulation.as_mut() {
        sim.cells = vec![req.cell];
    }

    let id = st.runs.next.fetch_add(1, Ordering::Relaxed);
    let descriptor = RunDescriptor {
        id,
        cell: req.cell,
        intent: req.intent,
        shield_enabled: req.shield,
        episodes: cfg.agent.episodes,
        seed: req.seed,
        status: RunStatus::Pending,
        report: None,
        error: None,
    };
    let handle = Arc::new(RunHandle {
        log: Mutex::new(RunLog {
            descriptor: descriptor.clone(),
            events: Vec::new(),
        }),
        wake: watch::channel(()).0,
    });
    st.runs
        .runs
        .write()
        .expect("run table lock")
        .insert(id, Arc::clone(&handle));

    let permits = Arc::clone(&st.runs.permits);
    let st = Arc::clone(&st);
    tokio::spawn(async move {
        let _permit = permits.acquire_owned().await.expect("semaphore is never closed");
        handle.update(|log| log.descriptor.status = RunStatus::Running);
        let out = run_dir(&st, id);
        let worker = Arc::clone(&handle);
        let result = tokio::task::spawn_blocking(move || {
            let mut sink = LogSink(worker);
            run_pipeline(&cfg, &out, &mut sink)
        })
        .await;
        let result = match result {
            Ok(r) => r,
            Err(e) => Err(PipelineError::Input(format!("run worker stopped: {e}"))),
        };
        if let Ok(PipelineOutcome { report: Some(_), .. }) = &result {
            if let Ok(text) = fs::read_to_string(run_dir(&st, id).join("trajectory.jsonl")) {
                let records: Vec<KpiRecord> = text.lines().filter_map(|l| serde_json::from_str(l).ok()).collect();
                st.record_trajectory(req.cell, records);
            }
        }
        handle.update(|log| {
            let d = &mut log.descriptor;
            match result {
                Ok(o) if o.exit_code() == 0 => {
                    d.status = RunStatus::Done;
                    d.report = o.report;
                }
                Ok(o) => {
                    d.status = RunStatus::Failed;
                    d.error = Some(RunFailure {
                        code: "unsatisfiable_on_model".into(),
                        message: o.summary.message.unwrap_or_default(),
                    });
                }
                Err(e) => {
                    d.status = RunStatus::Failed;
                    d.error = Some(failure(&e));
                }
            }
        });
    });
    Ok((StatusCode::CREATED, Json(descriptor)))
}

async fn list_runs(State(st): State<Shared>) -> Json<Vec<RunDescriptor>> {
    let runs = st.runs.runs.read().expect("run table lock");
    Json(runs.values().map(|h| h.descriptor()).collect())
}

async fn get_run(State(st): State<Shared>, Path(id): Path<u64>) -> ApiResult<Json<RunDescriptor>> {
    Ok(Json(st.runs.get(id)?.descriptor()))
}

struct Cursor {
    handle: Arc<RunHandle>,
    wake: watch::Receiver<()>,
    next: usize,
    closed: bool,
}

enum Next {
    Event(Event),
    Wait,
    End,
}

impl Cursor {
    fn poll(&mut self) -> Next {
        // marks the current value seen before looking, so a push after
        // this point wakes the next `changed()`
        self.wake.borrow_and_update();
        let log = self.handle.log.lock().expect("run lock");
        if let Some(e) = log.events.get(self.next) {
            self.next += 1;
            return Next::Event(Event::default().id(e.id.to_string()).event(e.kind).data(&e.data));
        }
        if log.descriptor.status.is_finished() && !self.closed {
            self.closed = true;
            let data = serde_json::to_string(&log.descriptor).expect("descriptor serializes");
            return Next::Event(Event::default().event("run_status").data(data));
        }
        if self.closed {
            Next::End
        } else {
            Next::Wait
        }
    }
}

fn event_stream(cursor: Cursor) -> impl Stream<Item = Result<Event, Infallible>> {
    stream::unfold(cursor, |mut c| async move {
        loop {
            match c.poll() {
                Next::Event(e) => return Some((Ok(e), c)),
                Next::End => return None,
                Next::Wait => {
                    if c.wake.changed().await.is_err() {
                        return None;
                    }
                }
            }
        }
    })
}

async fn run_events(
    State(st): State<Shared>,
    Path(id): Path<u64>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let handle = st.runs.get(id)?;
    let resume = match headers.get("last-event-id") {
        None => None,
        Some(v) => Some(
            v.to_str()
                .ok()
                .and_then(|s| s.trim().parse::<u64>().ok())
                .ok_or_else(|| {
                    ApiError::new(
                        StatusCode::BAD_REQUEST,
                        "bad_parameter",
                        "Last-Event-ID must be an event id",
                    )
                })?,
        ),
    };
    let next = match resume {
        None => 0,
        Some(last) => {
            let log = handle.log.lock().expect("run lock");
            log.events.partition_point(|e| e.id <= last)
        }
    };
    let cursor = Cursor {
        wake: handle.wake.subscribe(),
        handle,
        next,
        closed: false,
    };
    Ok(Sse::new(event_stream(cursor)).keep_alive(KeepAlive::default()))
}

async fn list_artifacts(State(st): State<Shared>, Path(id): Path<u64>) -> ApiResult<Json<Vec<String>>> {
    st.runs.get(id)?;
    let mut names: Vec<String> = fs::read_dir(run_dir(&st, id))
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .collect();
    names.sort();
    Ok(Json(names))
}

fn content_type(name: &str) -> &'static str {
    match name.rsplit('.').next() {
        Some("json") => "application/json",
        Some("jsonl") => "application/x-ndjson",
        Some("dot") => "text/vnd.graphviz; charset=utf-8",
        _ => "text/plain; charset=utf-8",
    }
}

async fn get_artifact(State(st): State<Shared>, Path((id, name)): Path<(u64, String)>) -> ApiResult<Response> {
    st.runs.get(id)?;
    let plain = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if !plain {
        return Err(ApiError::not_found("artifact"));
    }
    let bytes = fs::read(run_dir(&st, id).join(&name)).map_err(|_| ApiError::not_found("artifact"))?;
    Ok(([(header::CONTENT_TYPE, content_type(&name))], bytes).into_response())
}
