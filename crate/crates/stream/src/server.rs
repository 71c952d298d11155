use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use stereoportal::Scene;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, watch};
use tower_http::services::ServeDir;

use crate::protocol::{Hello, InputEvent};
use crate::session::{Session, SessionConfig};

/// Frames buffered per viewer before a slow viewer starts losing frames.
const FRAME_BACKLOG: usize = 4;

const FALLBACK_PAGE: &str = include_str!("index.html");

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot listen on port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    pub session: SessionConfig,
    /// Directory with the viewer's static files. Without one a minimal
    /// built-in page is served.
    pub static_dir: Option<PathBuf>,
}

/// State shared by connection handlers and the simulation thread.
pub struct ServerState {
    inputs: mpsc::UnboundedSender<InputEvent>,
    frames: broadcast::Sender<Bytes>,
    authority: Mutex<Option<u64>>,
    next_id: AtomicU64,
    shutdown: watch::Sender<bool>,
    hello: Hello,
}

impl ServerState {
    /// Connected viewers.
    pub fn viewers(&self) -> usize {
        self.frames.receiver_count()
    }
}

pub fn router(state: Arc<ServerState>, static_dir: Option<PathBuf>) -> Router {
    let router = Router::new()
        .route("/healthz", get(|| async { "ok\n" }))
        .route("/ws", get(upgrade));
    let router = match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router.route("/", get(|| async { Html(FALLBACK_PAGE) })),
    };
    router.with_state(state)
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<ServerState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: Arc<ServerState>) {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let authority = {
        let mut holder = state.authority.lock().unwrap();
        holder.get_or_insert(id);
        *holder == Some(id)
    };
    let mut frames = state.frames.subscribe();
    let mut shutdown = state.shutdown.subscribe();
    let (mut tx, mut rx) = socket.split();
    let hello = Hello {
        authority,
        ..state.hello
    };
    if tx.send(Message::Binary(hello.encode().into())).await.is_ok() {
        loop {
            tokio::select! {
                frame = frames.recv() => match frame {
                    Ok(bytes) => {
                        if tx.send(Message::Binary(bytes)).await.is_err() {
                            break;
                        }
                    }
                    Err(broadcast::error::RecvError::Lagged(skipped)) => {
                        tracing::debug!(viewer = id, skipped, "slow viewer dropped frames");
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                incoming = rx.next() => {
                    let event = match incoming {
                        Some(Ok(Message::Binary(bytes))) => InputEvent::decode(&bytes),
                        Some(Ok(Message::Text(text))) => InputEvent::from_json(text.as_str()),
                        Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                        Some(Ok(_)) => continue,
                    };
                    match event {
                        Ok(event) if *state.authority.lock().unwrap() == Some(id) => {
                            let _ = state.inputs.send(event);
                        }
                        Ok(_) => {}
                        Err(e) => tracing::debug!(viewer = id, "ignored malformed input: {e}"),
                    }
                }
                _ = shutdown.changed() => break,
            }
        }
    }
    let _ = tx.close().await;
    let mut holder = state.authority.lock().unwrap();
    if *holder == Some(id) {
        *holder = None;
    }
}

/// Fixed-rate loop owning the session. Renders only while someone watches.
fn simulate(
    mut session: Session,
    rate_hz: u32,
    state: Arc<ServerState>,
    mut inputs: mpsc::UnboundedReceiver<InputEvent>,
    stop: Arc<AtomicBool>,
) {
    let period = Duration::from_secs_f64(1.0 / rate_hz.max(1) as f64);
    let mut next = Instant::now();
    while !stop.load(Ordering::Relaxed) {
        next += period;
        if state.viewers() > 0 {
            let mut events = Vec::new();
            while let Ok(event) = inputs.try_recv() {
                events.push(event);
            }
            match session.tick(&events, period.as_secs_f64()) {
                Ok(frame) => {
                    let _ = state.frames.send(Bytes::from(frame.encode()));
                }
                Err(e) => tracing::error!("frame failed: {e}"),
            }
        }
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}

/// Runs the server on an already bound listener until `shutdown` resolves.
pub async fn serve_listener(
    listener: TcpListener,
    scene: Scene,
    config: ServerConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServerError> {
    let (inputs_tx, inputs_rx) = mpsc::unbounded_channel();
    let (frames, _) = broadcast::channel(FRAME_BACKLOG);
    let (shutdown_tx, _) = watch::channel(false);
    let session_config = config.session;
    let state = Arc::new(ServerState {
        inputs: inputs_tx,
        frames,
        authority: Mutex::new(None),
        next_id: AtomicU64::new(0),
        shutdown: shutdown_tx,
        hello: Hello {
            authority: false,
            width: session_config.width,
            height: session_config.height,
            rate_hz: session_config.rate_hz,
        },
    });
    let stop = Arc::new(AtomicBool::new(false));
    let sim = {
        let (state, stop) = (state.clone(), stop.clone());
        let session = Session::new(scene, session_config);
        thread::spawn(move || simulate(session, session_config.rate_hz, state, inputs_rx, stop))
    };
    let app = router(state.clone(), config.static_dir);
    let signal_state = state.clone();
    let result = axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            shutdown.await;
            let _ = signal_state.shutdown.send(true);
        })
        .await;
    stop.store(true, Ordering::Relaxed);
    let _ = tokio::task::spawn_blocking(move || sim.join()).await;
    result.map_err(ServerError::from)
}

/// Listens on `port` on all interfaces until Ctrl-C.
pub async fn serve(scene: Scene, config: ServerConfig, port: u16) -> Result<(), ServerError> {
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind { port, source })?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    serve_listener(listener, scene, config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
