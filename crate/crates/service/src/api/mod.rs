//! HTTP API under `/api/v1`.
//!
//! Error bodies are `{"code": ..., "message": ...}`; intent parse errors
//! also carry the byte `offset`.

mod runs;

use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use retshield::ltl::{format_ltl, LtlFormula};
use retshield::mdp::{CmdpRegistry, Discretizer};
use retshield::pipeline::{compile_intent, simulated_experience, CompiledIntent, PipelineConfig, PipelineError};
use retshield::shield::{
    build_product, check_satisfiable, classify, export_product, product_to_dot, ProductExport, VerdictKind,
};
use retshield::sim::{compute_kpis, init_network, KpiRecord, KpiVector, NetworkState};
use retshield::FeatureSet;

pub use runs::{RunDescriptor, RunRequest, RunStatus};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Settings every run starts from; runs override intent, cell, shield,
    /// episodes and seed.
    pub template: PipelineConfig,
    pub runs_dir: PathBuf,
    pub max_concurrent: usize,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            offset: None,
        }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_request", r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentVerdict {
    Satisfiable,
    UnsatisfiableOnModel,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRecord {
    pub id: u64,
    pub formula: String,
    pub ast_hash: String,
    pub automaton_id: String,
    pub features: FeatureSet,
    pub verdict: IntentVerdict,
    pub message: Option<String>,
}

struct IntentEntry {
    record: IntentRecord,
    compiled: CompiledIntent,
    product: ProductExport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellView {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub tilt_deg: i32,
    pub kpis: KpiVector,
}

struct CellBoard {
    network: NetworkState,
    latest: Vec<KpiVector>,
    history: Vec<Vec<KpiRecord>>,
}

pub(crate) struct AppState {
    cfg: ServiceConfig,
    registry: CmdpRegistry,
    board: Mutex<CellBoard>,
    intents: RwLock<Vec<IntentEntry>>,
    runs: runs::RunTable,
}

type Shared = Arc<AppState>;

fn fnv(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    format!("{h:016x}")
}

impl AppState {
    fn new(cfg: ServiceConfig) -> Result<Self, PipelineError> {
        let t = &cfg.template;
        let sim = t
            .simulation
            .as_ref()
            .ok_or_else(|| PipelineError::Input("the service needs the simulator".into()))?;
        let buffer = simulated_experience(sim, t.agent.episode_len, t.seed)?;
        let registry = CmdpRegistry::new(Arc::new(buffer), Discretizer::new(t.nb, t.ranges), t.gamma)?
            .with_action_feature(t.include_action_feature);
        let network = init_network(&sim.network)?;
        let latest: Vec<KpiVector> = (0..network.cells.len())
            .map(|c| compute_kpis(&network, c, &sim.network))
            .collect();
        let history = latest
            .iter()
            .enumerate()
            .map(|(c, k)| {
                vec![KpiRecord {
                    step: 0,
                    cell: c,
                    tilt: network.cells[c].tilt_deg,
                    coverage: k.coverage,
                    capacity: k.capacity,
                    quality: k.quality,
                    reward: k.reward(&sim.network),
                }]
            })
            .collect();
        let state = AppState {
            runs: runs::RunTable::new(cfg.max_concurrent, &cfg.runs_dir),
            cfg,
            registry,
            board: Mutex::new(CellBoard {
                network,
                latest,
                history,
            }),
            intents: RwLock::new(Vec::new()),
        };
        state.add_intent(&state.cfg.template.intent.clone())?;
        Ok(state)
    }

    fn add_intent(&self, text: &str) -> Result<IntentRecord, PipelineError> {
        let catalog = &self.cfg.template.catalog;
        let compiled = compile_intent(text, catalog)?;
        let cmdp = self.registry.match_cmdp(&compiled.formula, catalog);
        let g = build_product(&cmdp, &compiled.phi, catalog)?;
        let c = classify(&g);
        let verdict = check_satisfiable(&c);
        let formula = format_ltl(&compiled.formula);
        let product = export_product(&cmdp, &g, &c, verdict, &formula);
        let mut intents = self.intents.write().expect("intent lock");
        let id = intents.len() as u64 + 1;
        let record = IntentRecord {
            id,
            ast_hash: fnv(&formula),
            automaton_id: format!("{id}-phi"),
            features: cmdp.features(),
            verdict: match verdict.verdict {
                VerdictKind::Satisfiable => IntentVerdict::Satisfiable,
                VerdictKind::UnsatisfiableOnModel => IntentVerdict::UnsatisfiableOnModel,
            },
            message: (!verdict.is_satisfiable()).then(|| retshield::pipeline::modify_relax_message(&formula)),
            formula,
        };
        intents.push(IntentEntry {
            record: record.clone(),
            compiled,
            product,
        });
        Ok(record)
    }

    fn intent_formula(&self, id: u64) -> Option<(String, LtlFormula)> {
        let intents = self.intents.read().expect("intent lock");
        let e = intents.get((id as usize).checked_sub(1)?)?;
        Some((e.record.formula.clone(), e.compiled.formula.clone()))
    }

    fn n_cells(&self) -> usize {
        self.board.lock().expect("board lock").network.cells.len()
    }

    fn record_trajectory(&self, cell: usize, records: Vec<KpiRecord>) {
        const KEEP: usize = 20_000;
        let mut board = self.board.lock().expect("board lock");
        let Some(last) = records.last().cloned() else {
            return;
        };
        let offset = board.history[cell].last().map_or(0, |r| r.step + 1);
        let h = &mut board.history[cell];
        h.extend(records.into_iter().map(|mut r| {
            r.step += offset;
            r
        }));
        if h.len() > KEEP {
            let cut = h.len() - KEEP;
            h.drain(..cut);
        }
        board.network.cells[cell].tilt_deg = last.tilt;
        board.latest[cell] = KpiVector {
            coverage: last.coverage,
            capacity: last.capacity,
            quality: last.quality,
            no_served_ues: false,
        };
    }
}

/// Builds the application. Collects the exploration experience the
/// `/mdp` and intent endpoints answer from, so it is not instant.
pub fn router(cfg: ServiceConfig) -> Result<Router, PipelineError> {
    let static_dir = cfg.static_dir.clone();
    let state: Shared = Arc::new(AppState::new(cfg)?);
    let api = Router::new()
        .route("/cells", get(list_cells))
        .route("/cells/{id}/kpis", get(cell_kpis))
        .route("/intents", get(list_intents).post(create_intent))
        .route("/intents/{id}", get(get_intent))
        .route("/intents/{id}/automaton", get(intent_automaton))
        .route("/intents/{id}/product", get(intent_product))
        .route("/mdp", get(get_mdp))
        .merge(runs::routes())
        .fallback(|| async { ApiError::not_found("route") });
    let app = Router::new().nest("/api/v1", api).with_state(state);
    Ok(match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(|| async { ApiError::not_found("route") }),
    })
}

async fn list_cells(State(st): State<Shared>) -> Json<Vec<CellView>> {
    let board = st.board.lock().expect("board lock");
    Json(
        board
            .network
            .cells
            .iter()
            .map(|c| CellView {
                id: c.id,
                x_m: c.x_m,
                y_m: c.y_m,
                tilt_deg: c.tilt_deg,
                kpis: board.latest[c.id],
            })
            .collect(),
    )
}

#[derive(Serialize)]
struct KpiHistory {
    cell: usize,
    history: Vec<KpiRecord>,
}

async fn cell_kpis(State(st): State<Shared>, Path(id): Path<usize>) -> ApiResult<Json<KpiHistory>> {
    let board = st.board.lock().expect("board lock");
    let history = board.history.get(id).ok_or_else(|| ApiError::not_found("cell"))?;
    Ok(Json(KpiHistory {
        cell: id,
        history: history.clone(),
    }))
}

async fn list_intents(State(st): State<Shared>) -> Json<Vec<IntentRecord>> {
    let intents = st.intents.read().expect("intent lock");
    Json(intents.iter().map(|e| e.record.clone()).collect())
}

#[derive(Deserialize)]
struct NewIntent {
    formula: String,
}

async fn create_intent(
    State(st): State<Shared>,
    body: Result<Json<NewIntent>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<IntentRecord>)> {
    let Json(body) = body?;
    match st.add_intent(&body.formula) {
        Ok(r) => Ok((StatusCode::CREATED, Json(r))),
        Err(PipelineError::Parse(e)) => Err(ApiError {
            offset: Some(e.offset()),
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "parse_error", e.to_string())
        }),
        Err(e) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "model_error",
            e.to_string(),
        )),
    }
}

async fn get_intent(State(st): State<Shared>, Path(id): Path<u64>) -> ApiResult<Json<IntentRecord>> {
    let intents = st.intents.read().expect("intent lock");
    let i = (id as usize).wrapping_sub(1);
    intents
        .get(i)
        .map(|e| Json(e.record.clone()))
        .ok_or_else(|| ApiError::not_found("intent"))
}

#[derive(Deserialize)]
struct AutomatonQuery {
    which: Option<String>,
    format: Option<String>,
}

fn dot_response(dot: String) -> Response {
    ([(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")], dot).into_response()
}

fn bad_param(message: String) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_parameter", message)
}

async fn intent_automaton(
    State(st): State<Shared>,
    Path(id): Path<u64>,
    Query(q): Query<AutomatonQuery>,
) -> ApiResult<Response> {
    let intents = st.intents.read().expect("intent lock");
    let e = intents
        .get((id as usize).wrapping_sub(1))
        .ok_or_else(|| ApiError::not_found("intent"))?;
    let a = match q.which.as_deref().unwrap_or("phi") {
        "phi" => &e.compiled.phi,
        "negphi" => &e.compiled.neg_phi,
        other => return Err(bad_param(format!("which must be phi or negphi, got `{other}`"))),
    };
    match q.format.as_deref().unwrap_or("graph") {
        "graph" => Ok(Json(a.to_graph()).into_response()),
        "dot" => Ok(dot_response(retshield::buchi::to_dot(a))),
        "text" => Ok(a.to_text().into_response()),
        other => Err(bad_param(format!("format must be graph, dot or text, got `{other}`"))),
    }
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn intent_product(
    State(st): State<Shared>,
    Path(id): Path<u64>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let intents = st.intents.read().expect("intent lock");
    let e = intents
        .get((id as usize).wrapping_sub(1))
        .ok_or_else(|| ApiError::not_found("intent"))?;
    match q.format.as_deref().unwrap_or("graph") {
        "graph" | "json" => Ok(Json(&e.product).into_response()),
        "dot" => Ok(dot_response(product_to_dot(&e.product))),
        other => Err(bad_param(format!("format must be graph or dot, got `{other}`"))),
    }
}

#[derive(Deserialize)]
struct MdpQuery {
    features: Option<String>,
}

async fn get_mdp(State(st): State<Shared>, Query(q): Query<MdpQuery>) -> ApiResult<Response> {
    let features = match q.features.as_deref() {
        None | Some("") => FeatureSet::all(),
        Some(text) => text.parse::<FeatureSet>().map_err(bad_param)?,
    };
    if features.is_empty() {
        return Err(bad_param("at least one feature is required".into()));
    }
    let m = st
        .registry
        .get(features)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "model_error", e.to_string()))?;
    Ok(Json(m.export(&st.cfg.template.catalog)).into_response())
}
