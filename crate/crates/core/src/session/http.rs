//! HTTP and WebSocket control surface for the console.
//!
//! | Route | |
//! |---|---|
//! | `GET /state` | current [`StateView`](super::StateView) |
//! | `POST /event` | apply a [`SessionEvent`] (optionally with `"t"`) |
//! | `GET /metrics` | [`SessionMetrics`](super::SessionMetrics) |
//! | `GET /model/report` | last fit report, 404 before fitting |
//! | `GET /feed` | WebSocket: predictions and state snapshots |
//!
//! Anything else is served from the static directory when one is given.

use super::runtime::{EngineError, EngineHandle};
use super::state::SessionEvent;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use std::path::PathBuf;
use tokio::sync::broadcast::error::RecvError;

#[derive(Debug, Deserialize)]
pub struct EventRequest {
    #[serde(flatten)]
    pub event: SessionEvent,
    #[serde(default)]
    pub t: Option<f64>,
}

fn error_response(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(serde_json::json!({ "error": message.to_string() }))).into_response()
}

async fn get_state(State(engine): State<EngineHandle>) -> Response {
    Json(engine.view().as_ref().clone()).into_response()
}

async fn post_event(State(engine): State<EngineHandle>, Json(req): Json<EventRequest>) -> Response {
    match engine.submit(req.event, req.t).await {
        Ok(view) => Json(view).into_response(),
        Err(e @ EngineError::Transition(_)) => error_response(StatusCode::CONFLICT, e),
        Err(e @ EngineError::Design(_)) => error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
        Err(e @ EngineError::Closed) => error_response(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

async fn get_metrics(State(engine): State<EngineHandle>) -> Response {
    Json(engine.metrics()).into_response()
}

async fn get_report(State(engine): State<EngineHandle>) -> Response {
    match engine.report() {
        Some(report) => Json(report).into_response(),
        None => error_response(StatusCode::NOT_FOUND, "no model has been fitted"),
    }
}

async fn feed(State(engine): State<EngineHandle>, ws: WebSocketUpgrade) -> Response {
    match engine.emitter().subscribe() {
        Some(rx) => ws.on_upgrade(move |socket| forward_feed(socket, rx)),
        None => error_response(StatusCode::NOT_FOUND, "WebSocket feed is disabled"),
    }
}

async fn forward_feed(mut socket: WebSocket, mut rx: tokio::sync::broadcast::Receiver<std::sync::Arc<str>>) {
    loop {
        match rx.recv().await {
            Ok(text) => {
                if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                    return;
                }
            }
            Err(RecvError::Lagged(n)) => tracing::warn!(skipped = n, "feed client lagging; oldest messages skipped"),
            Err(RecvError::Closed) => return,
        }
    }
}

/// Builds the router. `static_dir` is served as a fallback.
pub fn router(engine: EngineHandle, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/state", get(get_state))
        .route("/event", post(post_event))
        .route("/metrics", get(get_metrics))
        .route("/model/report", get(get_report))
        .route("/feed", get(feed))
        .with_state(engine);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}
