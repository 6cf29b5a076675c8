//! JSON over HTTP. Handlers parse their inputs, hand the work to the
//! [`Engine`] on the blocking pool, and render through [`render_json`], the
//! same function the CLI prints with.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use super::{
    render_json, BaselineRequest, ContrastQuery, EnergyQuery, Engine, ErrorKind, EvaluateRequest, ProgressQuery,
    ServiceError, WasteQuery,
};
use crate::ingest::authorize;
use crate::methodology::{BuildingProfile, DaySet};
use crate::timeseries::BuildingId;

const MAX_INGEST_BYTES: usize = 64 * 1024 * 1024;

#[derive(Clone)]
struct AppState {
    engine: Arc<Engine>,
    token: Option<Arc<str>>,
}

type Params = Query<HashMap<String, String>>;

pub fn status_of(kind: ErrorKind) -> StatusCode {
    match kind {
        ErrorKind::NotFound => StatusCode::NOT_FOUND,
        ErrorKind::Validation => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
        ErrorKind::Unauthorized => StatusCode::UNAUTHORIZED,
        ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn respond<T: Serialize>(status: StatusCode, result: Result<T, ServiceError>) -> Response {
    match result {
        Ok(v) => json_response(status, render_json(&v)),
        Err(e) => json_response(status_of(e.kind), e.body()),
    }
}

async fn blocking<T, F>(state: &AppState, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> Result<T, ServiceError> + Send + 'static,
{
    let engine = state.engine.clone();
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .unwrap_or_else(|e| Err(ServiceError::io(format!("worker failed: {e}"))))
}

fn bad_request(code: &str, message: impl Into<String>) -> ServiceError {
    ServiceError::new(ErrorKind::BadRequest, code, message)
}

fn building_id(raw: &str) -> Result<BuildingId, ServiceError> {
    BuildingId::new(raw)
        .map_err(|_| ServiceError::new(ErrorKind::NotFound, "UnknownBuilding", format!("unknown building {raw}")))
}

fn param<T: FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ServiceError>
where
    T::Err: std::fmt::Display,
{
    q.get(key)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| bad_request("InvalidParameter", format!("{key}: {e}"))))
        .transpose()
}

fn body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| bad_request("InvalidBody", e.to_string()))
}

pub fn router(engine: Arc<Engine>, token: Option<String>, dashboard_dir: Option<PathBuf>) -> Router {
    let state = AppState { engine, token: token.filter(|t| !t.is_empty()).map(Arc::from) };
    let api = Router::new()
        .route("/v1/buildings", get(list_buildings))
        .route("/v1/buildings/{id}/energy", get(energy))
        .route("/v1/buildings/{id}/baseline", post(baseline))
        .route("/v1/buildings/{id}/profile", post(profile))
        .route("/v1/buildings/{id}/weeks/{week}/analysis", post(week_analysis))
        .route("/v1/buildings/{id}/interventions", post(interventions))
        .route("/v1/buildings/{id}/waste", get(waste))
        .route("/v1/buildings/{id}/contrast", get(contrast))
        .route("/v1/buildings/{id}/progress", get(progress))
        .route("/v1/buildings/{id}/live", get(live))
        .route("/v1/buildings/{id}/report", get(report))
        .route("/v1/readings", post(readings).layer(DefaultBodyLimit::max(MAX_INGEST_BYTES)))
        .with_state(state);
    match dashboard_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(router: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn list_buildings(State(s): State<AppState>) -> Response {
    respond(StatusCode::OK, blocking(&s, |e| Ok(e.buildings())).await)
}

async fn energy(State(s): State<AppState>, Path(id): Path<String>, Query(q): Params) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let query =
            EnergyQuery { resolution: param(&q, "resolution")?, from: param(&q, "from")?, to: param(&q, "to")? };
        blocking(&s, move |e| e.energy(&id, &query)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn baseline(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let req: BaselineRequest = body(&bytes)?;
        blocking(&s, move |e| e.baseline(&id, req)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn profile(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let profile: BuildingProfile = body(&bytes)?;
        if profile.building_id != id {
            return Err(bad_request("BuildingMismatch", "profile names a different building"));
        }
        blocking(&s, move |e| e.register_profile(profile)).await
    };
    respond(StatusCode::CREATED, run.await)
}

#[derive(Deserialize, Default)]
struct WeekBody {
    day_set: Option<DaySet>,
}

async fn week_analysis(State(s): State<AppState>, Path((id, week)): Path<(String, String)>, bytes: Bytes) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let req: WeekBody = if bytes.iter().all(u8::is_ascii_whitespace) { WeekBody::default() } else { body(&bytes)? };
        blocking(&s, move |e| e.week_analysis(&id, &week, req.day_set)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn interventions(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let req: EvaluateRequest = body(&bytes)?;
        blocking(&s, move |e| e.evaluate(&id, req)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn waste(State(s): State<AppState>, Path(id): Path<String>, Query(q): Params) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let threshold =
            param(&q, "threshold")?.ok_or_else(|| bad_request("MissingParameter", "threshold (lux) is required"))?;
        let query = WasteQuery {
            day: param(&q, "day")?,
            threshold,
            zone: q.get("zone").cloned(),
            aggregation: param(&q, "aggregation")?,
            resolution: param(&q, "resolution")?,
            lookback_days: param(&q, "lookback_days")?,
        };
        blocking(&s, move |e| e.waste(&id, &query)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn contrast(State(s): State<AppState>, Path(id): Path<String>, Query(q): Params) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let query =
            ContrastQuery { from: param(&q, "from")?, to: param(&q, "to")?, alert_ratio: param(&q, "alert_ratio")? };
        blocking(&s, move |e| e.contrast(&id, &query)).await
    };
    respond(StatusCode::OK, run.await)
}

/// `weeks=2018-W50,2018-W51&groups=2018-W50:team-a,2018-W51:team-b`
fn progress_query(q: &HashMap<String, String>) -> Result<ProgressQuery, ServiceError> {
    let list = |key: &str| {
        q.get(key).filter(|v| !v.is_empty()).map(|v| v.split(',').map(|s| s.trim().to_owned()).collect::<Vec<_>>())
    };
    let mut groups = BTreeMap::new();
    for pair in list("groups").unwrap_or_default() {
        let (week, tag) = pair
            .split_once(':')
            .ok_or_else(|| bad_request("InvalidParameter", format!("groups: expected WEEK:TAG, got {pair:?}")))?;
        groups.insert(week.to_owned(), tag.to_owned());
    }
    Ok(ProgressQuery { weeks: list("weeks"), groups })
}

async fn progress(State(s): State<AppState>, Path(id): Path<String>, Query(q): Params) -> Response {
    let run = async {
        let id = building_id(&id)?;
        let query = progress_query(&q)?;
        blocking(&s, move |e| e.progress(&id, &query)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn live(State(s): State<AppState>, Path(id): Path<String>) -> Response {
    let run = async {
        let id = building_id(&id)?;
        blocking(&s, move |e| e.live(&id)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn report(State(s): State<AppState>, Path(id): Path<String>) -> Response {
    let run = async {
        let id = building_id(&id)?;
        blocking(&s, move |e| e.report(&id)).await
    };
    respond(StatusCode::OK, run.await)
}

async fn readings(State(s): State<AppState>, headers: HeaderMap, bytes: Bytes) -> Response {
    let presented = headers.get(header::AUTHORIZATION).and_then(|h| h.to_str().ok());
    let authorized = s.token.as_deref().is_some_and(|t| authorize(t, presented));
    if !authorized {
        let e = ServiceError::new(ErrorKind::Unauthorized, "Unauthorized", "missing or invalid bearer token");
        return json_response(StatusCode::UNAUTHORIZED, e.body());
    }
    match blocking(&s, move |e| e.ingest(&bytes[..])).await {
        Ok(summary) if summary.aborted.is_some() => json_response(StatusCode::BAD_REQUEST, render_json(&summary)),
        other => respond(StatusCode::ACCEPTED, other),
    }
}
