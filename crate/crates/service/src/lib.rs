//! Live typing sessions over WebSocket.
//!
//! `GET /ws` upgrades to the JSON frame protocol in [`protocol`], one
//! session per connection. `GET /layout` returns the keyboard layout and
//! every other path is served from the optional UI directory. When a log
//! directory is set, each connection's events are written to
//! `<log_dir>/<connection>/session_events.jsonl` once it closes.

pub mod connection;
pub mod protocol;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use gazeswipe::{dataio, TypingEngine};
use tokio::sync::{watch, Notify};
use tower_http::services::ServeDir;

pub use connection::Connection;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    /// Static files served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Where per-connection event logs go; no logs when unset.
    pub log_dir: Option<PathBuf>,
}

#[derive(Clone)]
struct AppState {
    engine: Arc<TypingEngine>,
    log_dir: Option<PathBuf>,
    connections: Arc<AtomicU64>,
    started: u64,
    /// Flips to true when the server shuts down.
    stopping: watch::Receiver<bool>,
    /// Sockets still open; notified as each one finishes.
    open: Arc<(AtomicUsize, Notify)>,
}

pub fn router(engine: Arc<TypingEngine>, options: &ServiceOptions) -> Router {
    let (_, stopping) = watch::channel(false);
    build(engine, options, stopping, Arc::default())
}

fn build(engine: Arc<TypingEngine>, options: &ServiceOptions, stopping: watch::Receiver<bool>, open: Arc<(AtomicUsize, Notify)>) -> Router {
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default();
    let state = AppState { engine, log_dir: options.log_dir.clone(), connections: Arc::default(), started, stopping, open };
    let app = Router::new().route("/ws", get(upgrade)).route("/layout", get(layout)).with_state(state);
    match &options.ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

async fn layout(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.engine.decoder.layout().to_json_value())
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| serve_socket(socket, state))
}

async fn stopped(stopping: &mut watch::Receiver<bool>) {
    let _ = stopping.wait_for(|s| *s).await;
}

async fn serve_socket(socket: WebSocket, mut state: AppState) {
    state.open.0.fetch_add(1, Ordering::SeqCst);
    run_socket(socket, &mut state).await;
    state.open.0.fetch_sub(1, Ordering::SeqCst);
    state.open.1.notify_waiters();
}

async fn run_socket(mut socket: WebSocket, state: &mut AppState) {
    let id = state.connections.fetch_add(1, Ordering::Relaxed) + 1;
    let mut conn = Connection::new(Arc::clone(&state.engine));
    tracing::info!(connection = id, "connected");
    loop {
        let message = tokio::select! {
            m = socket.recv() => match m {
                Some(Ok(m)) => m,
                _ => break,
            },
            _ = stopped(&mut state.stopping) => {
                let _ = socket.send(Message::Close(None)).await;
                break;
            }
        };
        let reply = match message {
            Message::Text(text) => conn.handle_text(&text),
            Message::Binary(_) => Some(protocol::ServerFrame::error(None, "binary frames are not supported")),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => None,
        };
        if let Some(frame) = reply {
            let json = serde_json::to_string(&frame).expect("frames serialize");
            if socket.send(Message::Text(json)).await.is_err() {
                break;
            }
        }
    }
    tracing::info!(connection = id, events = conn.log().len(), "disconnected");
    if let Some(dir) = &state.log_dir {
        let path = dir.join(format!("{}-{id:04}", state.started)).join("session_events.jsonl");
        let events = conn.log().to_vec();
        let written = tokio::task::spawn_blocking(move || {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| e.to_string())?;
            }
            dataio::write_events(&path, &events).map_err(|e| e.to_string()).map(|_| path)
        })
        .await;
        match written {
            Ok(Ok(path)) => tracing::info!(connection = id, path = %path.display(), "event log written"),
            Ok(Err(e)) => tracing::warn!(connection = id, "event log not written: {e}"),
            Err(e) => tracing::warn!(connection = id, "event log task failed: {e}"),
        }
    }
}

/// A bound, not yet running server.
pub struct Server {
    listener: tokio::net::TcpListener,
    app: Router,
    stop: watch::Sender<bool>,
    open: Arc<(AtomicUsize, Notify)>,
}

impl Server {
    /// Binds `addr`; a port already in use is an error here rather than
    /// at first connection.
    pub async fn bind(addr: SocketAddr, engine: Arc<TypingEngine>, options: &ServiceOptions) -> Result<Self, ServiceError> {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })?;
        let (stop, stopping) = watch::channel(false);
        let open: Arc<(AtomicUsize, Notify)> = Arc::default();
        let app = build(engine, options, stopping, Arc::clone(&open));
        Ok(Self { listener, app, stop, open })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, ServiceError> {
        Ok(self.listener.local_addr()?)
    }

    pub async fn run(self) -> Result<(), ServiceError> {
        Ok(axum::serve(self.listener, self.app).await?)
    }

    /// Runs until `signal` resolves, then closes every open socket and
    /// returns once their event logs are written.
    pub async fn run_until(self, signal: impl std::future::Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        let stop = self.stop;
        let shutdown = async move {
            signal.await;
            let _ = stop.send(true);
        };
        axum::serve(self.listener, self.app).with_graceful_shutdown(shutdown).await?;
        let (open, done) = &*self.open;
        loop {
            let finished = done.notified();
            if open.load(Ordering::SeqCst) == 0 {
                return Ok(());
            }
            finished.await;
        }
    }
}
