//! HTTP API over the controller.
//!
//! Controller calls block (simulation and storage), so every handler runs
//! them on the blocking pool. Errors are JSON error documents.

use std::convert::Infallible;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use edgeflow_core::Error as CoreError;
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ControlError;
use crate::plan::PlanRequest;
use crate::service::{CompareRequest, Controller};

/// Environment variable holding the service port.
pub const PORT_ENV: &str = "EDGEFLOW_PORT";
pub const DEFAULT_PORT: u16 = 8080;

pub fn status_of(e: &ControlError) -> StatusCode {
    match e {
        ControlError::PlanNotFound(_) | ControlError::RunNotFound(_) => StatusCode::NOT_FOUND,
        ControlError::PlanNotSimulated(..)
        | ControlError::RunAlreadyActive { .. }
        | ControlError::RunNotTerminal(_)
        | ControlError::Core(CoreError::UnboundTask(_)) => StatusCode::CONFLICT,
        ControlError::Core(CoreError::WorkerPoolUnavailable(_)) => StatusCode::SERVICE_UNAVAILABLE,
        ControlError::Core(_) | ControlError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
        ControlError::RunFailed { .. } | ControlError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

pub struct ApiError(pub ControlError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(self.0.body())).into_response()
    }
}

impl From<ControlError> for ApiError {
    fn from(e: ControlError) -> Self {
        ApiError(e)
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> crate::Result<T> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(ControlError::Storage(format!("worker task failed: {e}")))),
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError(ControlError::InvalidRequest(e.to_string())))
}

#[derive(Debug, Default, Deserialize)]
pub struct SeedQuery {
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct ReportQuery {
    pub run: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStarted {
    pub run_id: String,
}

pub fn router(controller: Controller) -> Router {
    Router::new()
        .route("/plans", post(create_plan))
        .route("/plans/{id}", get(get_plan))
        .route("/plans/{id}/simulate", post(simulate))
        .route("/plans/{id}/execute", post(execute))
        .route("/plans/{id}/report", get(report))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/events", get(events))
        .route("/compare", post(compare))
        .with_state(controller)
}

async fn create_plan(State(c): State<Controller>, body: Bytes) -> ApiResult<Response> {
    let request: PlanRequest = parse(&body)?;
    let plan = blocking(move || c.build_plan(&request)).await?;
    Ok((StatusCode::CREATED, Json(plan)).into_response())
}

async fn get_plan(State(c): State<Controller>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(move || c.get_plan(&id)).await?).into_response())
}

async fn simulate(
    State(c): State<Controller>,
    Path(id): Path<String>,
    Query(q): Query<SeedQuery>,
) -> ApiResult<Response> {
    Ok(Json(blocking(move || c.simulate_plan(&id, q.seed)).await?).into_response())
}

async fn execute(
    State(c): State<Controller>,
    Path(id): Path<String>,
    Query(q): Query<SeedQuery>,
) -> ApiResult<Response> {
    let run_id = blocking(move || c.execute_plan_real(&id, q.seed)).await?;
    Ok((StatusCode::ACCEPTED, Json(RunStarted { run_id })).into_response())
}

async fn report(
    State(c): State<Controller>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> ApiResult<Response> {
    Ok(Json(blocking(move || c.build_report(&id, q.run.as_deref(), q.seed)).await?).into_response())
}

async fn get_run(State(c): State<Controller>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(move || c.get_run(&id)).await?).into_response())
}

async fn compare(State(c): State<Controller>, body: Bytes) -> ApiResult<Response> {
    let request: CompareRequest = parse(&body)?;
    Ok(Json(blocking(move || c.compare_algorithms(&request)).await?).into_response())
}

/// One `status` message per run event in log order, then a single `end`
/// message.
async fn events(
    State(c): State<Controller>,
    Path(id): Path<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let events = blocking(move || c.stream_events(&id)).await?;
    let (tx, rx) = tokio::sync::mpsc::channel(64);
    tokio::task::spawn_blocking(move || {
        for e in events {
            // A closed channel means the client went away.
            if tx.blocking_send(e).is_err() {
                break;
            }
        }
    });
    let body = stream::unfold(rx, |mut rx| async move { rx.recv().await.map(|e| (e, rx)) })
        .map(|e| {
            let data = serde_json::to_string(&e).unwrap_or_default();
            Ok(Event::default().event("status").data(data))
        })
        .chain(stream::once(async { Ok(Event::default().event("end").data("{}")) }));
    Ok(Sse::new(body).keep_alive(KeepAlive::default()))
}

pub async fn serve(controller: Controller, addr: SocketAddr) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(controller)).await?;
    Ok(())
}
