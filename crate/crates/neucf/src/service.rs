//! HTTP and WebSocket front end for live sessions.
//!
//! Each session runs on its own task. Client commands reach it through a
//! queue and are applied between ticks; snapshots leave through a watch
//! channel, so a slow client only ever sees the newest one.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use neucf_core::scenario::{builtin_scenarios, ScenarioScript};
use neucf_core::sim::SimConfig;
use serde::Deserialize;
use tokio::sync::{mpsc, oneshot, watch};

use crate::session::{ClientCommand, ServerMessage, Session, SessionError, Snapshot};

/// Snapshot publication period (20 Hz).
pub const SNAPSHOT_PERIOD: Duration = Duration::from_millis(50);
const PACING_PERIOD: Duration = Duration::from_millis(5);
/// Simulated time a session may fall behind the wall clock before it skips.
const MAX_BACKLOG_S: f64 = 0.5;

enum Request {
    Command(ClientCommand, oneshot::Sender<ServerMessage>),
    Record(oneshot::Sender<Result<ScenarioScript, SessionError>>),
}

#[derive(Clone)]
struct SessionHandle {
    requests: mpsc::Sender<Request>,
    snapshots: watch::Receiver<Snapshot>,
}

#[derive(Clone)]
pub struct AppState {
    cfg: SimConfig,
    next_id: Arc<AtomicU64>,
    sessions: Arc<Mutex<HashMap<u64, SessionHandle>>>,
}

impl AppState {
    pub fn new(cfg: SimConfig) -> Self {
        AppState { cfg, next_id: Arc::new(AtomicU64::new(1)), sessions: Arc::default() }
    }

    fn handle(&self, id: u64) -> Option<SessionHandle> {
        self.sessions.lock().expect("session table poisoned").get(&id).cloned()
    }

    fn create(&self) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut session = Session::new(id, self.cfg);
        let (snap_tx, snap_rx) = watch::channel(session.snapshot());
        let (req_tx, req_rx) = mpsc::channel(64);
        tokio::spawn(drive_session(session, req_rx, snap_tx));
        self.sessions
            .lock()
            .expect("session table poisoned")
            .insert(id, SessionHandle { requests: req_tx, snapshots: snap_rx });
        id
    }
}

async fn drive_session(mut session: Session, mut requests: mpsc::Receiver<Request>, snapshots: watch::Sender<Snapshot>) {
    let mut pacing = tokio::time::interval(PACING_PERIOD);
    let mut publish = tokio::time::interval(SNAPSHOT_PERIOD);
    let mut last = Instant::now();
    let mut owed = 0.0;
    loop {
        tokio::select! {
            req = requests.recv() => match req {
                None => break,
                Some(Request::Command(cmd, reply)) => {
                    let _ = reply.send(session.apply_client_command(cmd));
                }
                Some(Request::Record(reply)) => {
                    let _ = reply.send(session.record_session());
                }
            },
            _ = pacing.tick() => {
                let now = Instant::now();
                owed = (owed + (now - last).as_secs_f64() * session.speed()).min(MAX_BACKLOG_S);
                last = now;
                while owed >= session.dt() && session.phase() == crate::session::Phase::Running {
                    if let Err(e) = session.tick() {
                        log::warn!("session {} stopped: {e}", session.id);
                    }
                    owed -= session.dt();
                }
            }
            _ = publish.tick() => {
                snapshots.send_replace(session.snapshot());
            }
        }
    }
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let router = Router::new()
        .route("/session", post(create_session))
        .route("/scenarios", get(list_scenarios))
        .route("/session/{id}/record", get(record))
        .route("/ws/session/{id}", get(ws_upgrade))
        .with_state(state);
    match static_dir {
        Some(dir) => router.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => router,
    }
}

async fn create_session(State(state): State<AppState>) -> impl IntoResponse {
    let id = state.create();
    (StatusCode::CREATED, Json(serde_json::json!({ "id": id })))
}

async fn list_scenarios() -> Json<Vec<ScenarioScript>> {
    Json(builtin_scenarios())
}

fn error(status: StatusCode, msg: &str) -> Response {
    (status, Json(serde_json::json!({ "error": msg }))).into_response()
}

async fn record(State(state): State<AppState>, Path(id): Path<u64>) -> Response {
    let Some(handle) = state.handle(id) else {
        return error(StatusCode::NOT_FOUND, "unknown session");
    };
    let (tx, rx) = oneshot::channel();
    if handle.requests.send(Request::Record(tx)).await.is_err() {
        return error(StatusCode::GONE, "session ended");
    }
    match rx.await {
        Ok(Ok(script)) => Json(script).into_response(),
        Ok(Err(e)) => error(StatusCode::CONFLICT, &e.to_string()),
        Err(_) => error(StatusCode::GONE, "session ended"),
    }
}

#[derive(Debug, Default, Deserialize)]
struct WsParams {
    #[serde(default)]
    detail: bool,
}

async fn ws_upgrade(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Query(params): Query<WsParams>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Response {
    let Some(handle) = state.handle(id) else {
        return error(StatusCode::NOT_FOUND, "unknown session");
    };
    match ws {
        Ok(ws) => ws.on_upgrade(move |socket| client_loop(socket, handle, params.detail)),
        Err(rejection) => rejection.into_response(),
    }
}

fn encode(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("wire serialization cannot fail").into())
}

async fn client_loop(mut socket: WebSocket, mut handle: SessionHandle, detail: bool) {
    loop {
        tokio::select! {
            changed = handle.snapshots.changed() => {
                if changed.is_err() {
                    break;
                }
                let snap = handle.snapshots.borrow_and_update().clone();
                let snap = if detail { snap } else { snap.downsampled() };
                if socket.send(encode(&ServerMessage::Snapshot(snap))).await.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(text))) => text,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<ClientCommand>(&text) {
                    Ok(cmd) => {
                        let (tx, rx) = oneshot::channel();
                        if handle.requests.send(Request::Command(cmd, tx)).await.is_err() {
                            break;
                        }
                        match rx.await {
                            Ok(reply) => reply,
                            Err(_) => break,
                        }
                    }
                    Err(e) => ServerMessage::Nack { command: "unknown".into(), reason: e.to_string() },
                };
                if socket.send(encode(&reply)).await.is_err() {
                    break;
                }
            }
        }
    }
}

/// Serves until the process is stopped. Returns the bound address through
/// `on_bound` before accepting connections.
pub async fn serve(
    addr: SocketAddr,
    cfg: SimConfig,
    static_dir: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(AppState::new(cfg), static_dir)).await
}
