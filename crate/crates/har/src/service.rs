//! Stream service: one test-then-train pipeline per connection.
//!
//! WebSocket clients connect to `/stream` and exchange the JSON messages of
//! [`crate::wire`]. `GET /health` reports session counts. An optional raw
//! TCP listener speaks the same messages as newline-delimited JSON.
//!
//! Each connection gets a bounded inbox. When it overflows, the oldest
//! queued samples are dropped and the client receives an
//! `inbox_overflow` warning. Labels, hellos and ends are never dropped.

use std::collections::VecDeque;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::serve::ListenerExt;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use har_core::{Pipeline, PipelineConfig, SensorSample};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch, Notify};
use tokio::task::JoinHandle;

use crate::bench::MonotonicClock;
use crate::wire::{ClientBody, ClientMessage, MetricsEvent, PredictionEvent, ServerBody, ServerMessage};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub addr: String,
    pub port: u16,
    pub tcp_port: Option<u16>,
    pub inbox: usize,
    /// Pipeline settings for sessions whose `hello` does not override them.
    pub defaults: PipelineConfig,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1".into(),
            port: 8080,
            tcp_port: None,
            inbox: 4096,
            defaults: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: &'static str,
    pub sessions_active: usize,
    pub sessions_total: u64,
}

struct Shared {
    defaults: PipelineConfig,
    inbox: usize,
    active: AtomicUsize,
    total: AtomicU64,
    shutdown: watch::Receiver<bool>,
    clock: MonotonicClock,
}

impl Shared {
    fn health(&self) -> Health {
        Health {
            status: "ok",
            sessions_active: self.active.load(Ordering::SeqCst),
            sessions_total: self.total.load(Ordering::SeqCst),
        }
    }
}

enum Inbound {
    Message(ClientMessage),
    Malformed(String),
}

impl Inbound {
    fn parse(text: &str) -> Self {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(m) => Inbound::Message(m),
            Err(e) => Inbound::Malformed(e.to_string()),
        }
    }

    fn is_sample(&self) -> bool {
        matches!(self, Inbound::Message(ClientMessage { body: ClientBody::Sample { .. }, .. }))
    }
}

#[derive(Default)]
struct InboxState {
    queue: VecDeque<Inbound>,
    dropped: u64,
    closed: bool,
}

/// Bounded queue between a connection's reader and its session worker.
struct Inbox {
    state: Mutex<InboxState>,
    notify: Notify,
    capacity: usize,
}

impl Inbox {
    fn new(capacity: usize) -> Self {
        Self {
            state: Mutex::new(InboxState::default()),
            notify: Notify::new(),
            capacity: capacity.max(1),
        }
    }

    fn push(&self, item: Inbound) {
        let mut st = self.state.lock().expect("inbox lock");
        if st.queue.len() >= self.capacity {
            if let Some(i) = st.queue.iter().position(Inbound::is_sample) {
                st.queue.remove(i);
                st.dropped += 1;
            }
        }
        st.queue.push_back(item);
        drop(st);
        self.notify.notify_one();
    }

    fn close(&self) {
        self.state.lock().expect("inbox lock").closed = true;
        self.notify.notify_one();
    }

    /// Next message plus the number of samples dropped since the last call.
    /// `None` once closed and drained.
    async fn pop(&self) -> Option<(Inbound, u64)> {
        loop {
            {
                let mut st = self.state.lock().expect("inbox lock");
                if let Some(item) = st.queue.pop_front() {
                    let dropped = std::mem::take(&mut st.dropped);
                    return Some((item, dropped));
                }
                if st.closed {
                    return None;
                }
            }
            self.notify.notified().await;
        }
    }
}

/// Per-connection state machine. Events go to `out` in processing order.
struct Session {
    id: String,
    pipeline: Option<Pipeline>,
    active_label: Option<String>,
    out: mpsc::UnboundedSender<String>,
    shared: Arc<Shared>,
}

impl Session {
    fn send(&self, msg: ServerMessage) {
        let _ = self.out.send(msg.to_json());
    }

    fn error(&self, code: &str, message: impl Into<String>) {
        let message = message.into();
        tracing::warn!(session = %self.id, code, %message, "error event");
        self.send(ServerMessage::error(&self.id, code, message));
    }

    fn metrics(&self, train_ms: Option<f64>, is_final: bool) {
        let Some(p) = &self.pipeline else { return };
        let r = p.report();
        self.send(ServerMessage::new(
            &self.id,
            ServerBody::Metrics(MetricsEvent {
                windows: r.windows,
                correct: r.correct,
                accuracy: r.accuracy,
                macro_precision: r.macro_metrics.precision,
                macro_recall: r.macro_metrics.recall,
                macro_f1: r.macro_metrics.f1,
                none: r.confusion.total_none(),
                train_ms,
                is_final,
            }),
        ));
    }

    fn ack(&self, of: &str) {
        let (algorithm, seed) = match (&self.pipeline, of) {
            (Some(p), "hello") => (Some(p.config().algorithm), Some(p.config().seed)),
            _ => (None, None),
        };
        self.send(ServerMessage::new(
            &self.id,
            ServerBody::Ack {
                of: of.into(),
                label: if of == "label" { self.active_label.clone() } else { None },
                algorithm,
                seed,
            },
        ));
    }

    /// Returns false when the session is over.
    fn handle(&mut self, msg: ClientMessage) -> bool {
        if msg.v != crate::wire::WIRE_VERSION {
            self.error("unsupported_version", format!("wire version {} is not supported", msg.v));
            return true;
        }
        if let ClientBody::Hello {
            algorithm,
            seed,
            window,
            rate_hz,
        } = msg.body
        {
            if self.pipeline.is_some() {
                self.error("session_exists", "hello was already received on this connection");
                return true;
            }
            let mut cfg = self.shared.defaults.clone();
            if let Some(a) = algorithm {
                cfg.algorithm = a;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = window {
                if w < 2 {
                    self.error("invalid_config", "window must hold at least 2 samples");
                    return true;
                }
                cfg.window.size = w;
            }
            if let Some(r) = rate_hz.filter(|r| *r > 0.0) {
                cfg.window.rate_hz = r;
            }
            if let Some(id) = msg.session.filter(|s| !s.is_empty()) {
                self.id = id;
            }
            tracing::info!(session = %self.id, algorithm = cfg.algorithm.as_str(), seed = cfg.seed, "session started");
            self.pipeline = Some(Pipeline::new(cfg));
            self.ack("hello");
            return true;
        }
        if self.pipeline.is_none() || msg.session.as_deref().is_some_and(|s| s != self.id) {
            self.error(
                "unknown_session",
                format!("no session {:?} on this connection; send hello first", msg.session.unwrap_or_default()),
            );
            return true;
        }
        match msg.body {
            ClientBody::Hello { .. } => unreachable!(),
            ClientBody::Label { label } => {
                let label = label.filter(|l| !l.is_empty());
                if let (Some(p), Some(l)) = (self.pipeline.as_mut(), &label) {
                    p.register_label(l);
                }
                tracing::info!(session = %self.id, label = ?label, "label");
                self.active_label = label;
                self.ack("label");
            }
            ClientBody::Sample {
                t_ms,
                ax,
                ay,
                az,
                gx,
                gy,
                gz,
            } => self.sample(SensorSample::new(t_ms, [ax, ay, az], [gx, gy, gz], self.active_label.clone())),
            ClientBody::End => {
                self.metrics(None, true);
                self.ack("end");
                return false;
            }
        }
        true
    }

    fn sample(&mut self, sample: SensorSample) {
        let Some(p) = self.pipeline.as_mut() else { return };
        let out = &self.out;
        let id = &self.id;
        let result = p.push_sample_with(sample, &self.shared.clock, |record, timing| {
            let ev = PredictionEvent::new(record, timing.predict_ns as f64 / 1e6);
            let _ = out.send(ServerMessage::new(id, ServerBody::Prediction(ev)).to_json());
        });
        match result {
            Ok(outcome) => {
                if let Some(reg) = outcome.regression {
                    self.send(ServerMessage::new(
                        &self.id,
                        ServerBody::Warning {
                            code: "timestamp_regression".into(),
                            message: format!("t_ms went from {} to {}", reg.previous_ms, reg.current_ms),
                            dropped: 0,
                        },
                    ));
                }
                if let Some((record, timing)) = outcome.prediction {
                    tracing::debug!(
                        session = %self.id,
                        window = record.window,
                        predicted = ?record.predicted,
                        truth = ?record.truth,
                        "prediction"
                    );
                    if record.truth.is_some() {
                        self.metrics(Some(timing.train_ns as f64 / 1e6), false);
                    }
                }
            }
            Err(e) => self.error("invalid_sample", e.to_string()),
        }
    }
}

/// Drives one connection: reads from the inbox until `end`, close or
/// server shutdown. Final metrics are flushed on shutdown.
async fn run_session(shared: Arc<Shared>, inbox: Arc<Inbox>, out: mpsc::UnboundedSender<String>) {
    let n = shared.total.fetch_add(1, Ordering::SeqCst) + 1;
    shared.active.fetch_add(1, Ordering::SeqCst);
    let mut shutdown = shared.shutdown.clone();
    let mut session = Session {
        id: format!("s{n}"),
        pipeline: None,
        active_label: None,
        out,
        shared: shared.clone(),
    };
    loop {
        let next = tokio::select! {
            next = inbox.pop() => next,
            _ = shutdown.wait_for(|s| *s) => {
                session.metrics(None, true);
                break;
            }
        };
        let Some((item, dropped)) = next else { break };
        if dropped > 0 {
            tracing::warn!(session = %session.id, dropped, "inbox overflow");
            session.send(ServerMessage::new(
                &session.id,
                ServerBody::Warning {
                    code: "inbox_overflow".into(),
                    message: format!("inbox full; dropped {dropped} oldest samples"),
                    dropped,
                },
            ));
        }
        match item {
            Inbound::Malformed(e) => session.error("malformed", e),
            Inbound::Message(m) => {
                if !session.handle(m) {
                    break;
                }
            }
        }
    }
    tracing::info!(session = %session.id, "session closed");
    shared.active.fetch_sub(1, Ordering::SeqCst);
}

async fn handle_socket(socket: WebSocket, shared: Arc<Shared>) {
    let (mut tx, mut rx) = socket.split();
    let inbox = Arc::new(Inbox::new(shared.inbox));
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if tx.send(Message::Text(text.into())).await.is_err() {
                return;
            }
        }
        let _ = tx.send(Message::Close(None)).await;
    });
    let worker = tokio::spawn(run_session(shared.clone(), inbox.clone(), out_tx));
    let mut shutdown = shared.shutdown.clone();
    let reader = async {
        while let Some(Ok(msg)) = rx.next().await {
            match msg {
                Message::Text(t) => inbox.push(Inbound::parse(t.as_str())),
                Message::Binary(b) => inbox.push(match std::str::from_utf8(&b) {
                    Ok(t) => Inbound::parse(t),
                    Err(_) => Inbound::Malformed("binary frame is not utf-8".into()),
                }),
                Message::Close(_) => break,
                _ => {}
            }
        }
    };
    tokio::select! {
        _ = reader => {}
        _ = shutdown.wait_for(|s| *s) => {}
    }
    inbox.close();
    let _ = worker.await;
    let _ = writer.await;
}

async fn handle_tcp(stream: TcpStream, shared: Arc<Shared>) {
    let (read, mut write) = stream.into_split();
    let inbox = Arc::new(Inbox::new(shared.inbox));
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(mut text) = out_rx.recv().await {
            text.push('\n');
            if write.write_all(text.as_bytes()).await.is_err() {
                return;
            }
        }
        let _ = write.shutdown().await;
    });
    let worker = tokio::spawn(run_session(shared.clone(), inbox.clone(), out_tx));
    let mut shutdown = shared.shutdown.clone();
    let mut lines = BufReader::new(read).lines();
    let reader = async {
        while let Ok(Some(line)) = lines.next_line().await {
            if !line.trim().is_empty() {
                inbox.push(Inbound::parse(&line));
            }
        }
    };
    tokio::select! {
        _ = reader => {}
        _ = shutdown.wait_for(|s| *s) => {}
    }
    inbox.close();
    let _ = worker.await;
    let _ = writer.await;
}

async fn ws_route(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| handle_socket(socket, shared))
}

async fn health_route(State(shared): State<Arc<Shared>>) -> Json<Health> {
    Json(shared.health())
}

/// A running server. Dropping the handle does not stop it; call
/// [`ServerHandle::shutdown`].
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub tcp_addr: Option<SocketAddr>,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<Result<(), std::io::Error>>>,
}

impl ServerHandle {
    /// Asks every session to flush final metrics and close, then waits for
    /// the listeners to finish.
    pub async fn shutdown(self) -> Result<(), ServiceError> {
        let _ = self.stop.send(true);
        self.wait().await
    }

    pub async fn wait(self) -> Result<(), ServiceError> {
        for t in self.tasks {
            match t.await {
                Ok(r) => r?,
                Err(e) => return Err(ServiceError::Io(std::io::Error::other(e))),
            }
        }
        Ok(())
    }

    pub fn stopper(&self) -> watch::Sender<bool> {
        self.stop.clone()
    }
}

async fn bind(addr: &str, port: u16) -> Result<TcpListener, ServiceError> {
    let target = format!("{addr}:{port}");
    TcpListener::bind(&target)
        .await
        .map_err(|source| ServiceError::Bind { addr: target, source })
}

/// Binds the listeners and starts serving in the background. Port 0 picks
/// a free port; see [`ServerHandle::addr`].
pub async fn start(opts: ServiceOptions) -> Result<ServerHandle, ServiceError> {
    let (stop, shutdown) = watch::channel(false);
    let shared = Arc::new(Shared {
        defaults: opts.defaults.clone(),
        inbox: opts.inbox,
        active: AtomicUsize::new(0),
        total: AtomicU64::new(0),
        shutdown: shutdown.clone(),
        clock: MonotonicClock::new(),
    });
    let listener = bind(&opts.addr, opts.port).await?;
    let addr = listener.local_addr()?;
    let app = Router::new()
        .route("/stream", get(ws_route))
        .route("/health", get(health_route))
        .with_state(shared.clone());
    let mut tasks = Vec::new();
    let mut http_stop = shutdown.clone();
    tasks.push(tokio::spawn(async move {
        let listener = listener.tap_io(|tcp| {
            if let Err(e) = tcp.set_nodelay(true) {
                tracing::warn!(error = %e, "set_nodelay failed");
            }
        });
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = http_stop.wait_for(|s| *s).await;
            })
            .await
    }));
    let mut tcp_addr = None;
    if let Some(port) = opts.tcp_port {
        let tcp = bind(&opts.addr, port).await?;
        tcp_addr = Some(tcp.local_addr()?);
        let mut tcp_stop = shutdown.clone();
        let shared = shared.clone();
        tasks.push(tokio::spawn(async move {
            let mut conns = Vec::new();
            loop {
                tokio::select! {
                    accepted = tcp.accept() => {
                        let (stream, _) = accepted?;
                        stream.set_nodelay(true)?;
                        conns.push(tokio::spawn(handle_tcp(stream, shared.clone())));
                    }
                    _ = tcp_stop.wait_for(|s| *s) => break,
                }
            }
            for c in conns {
                let _ = c.await;
            }
            Ok(())
        }));
    }
    tracing::info!(%addr, tcp = ?tcp_addr, "listening");
    Ok(ServerHandle {
        addr,
        tcp_addr,
        stop,
        tasks,
    })
}

/// Serves until `signal` resolves, then shuts down gracefully.
pub async fn serve(opts: ServiceOptions, signal: impl Future<Output = ()>) -> Result<(), ServiceError> {
    let handle = start(opts).await?;
    signal.await;
    tracing::info!("shutting down");
    handle.shutdown().await
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: i64) -> Inbound {
        Inbound::Message(ClientMessage::sample(
            "s",
            &SensorSample::new(t, [0.0; 3], [0.0; 3], None),
        ))
    }

    #[tokio::test]
    async fn inbox_drops_oldest_samples_only() {
        let inbox = Inbox::new(3);
        inbox.push(Inbound::Message(ClientMessage::new(Some("s"), ClientBody::Label { label: Some("A".into()) })));
        for t in 0..4 {
            inbox.push(sample(t));
        }
        let (first, dropped) = inbox.pop().await.unwrap();
        assert!(!first.is_sample());
        assert_eq!(dropped, 2);
        let mut ts = Vec::new();
        inbox.close();
        while let Some((Inbound::Message(m), d)) = inbox.pop().await {
            assert_eq!(d, 0);
            if let ClientBody::Sample { t_ms, .. } = m.body {
                ts.push(t_ms);
            }
        }
        assert_eq!(ts, vec![2, 3]);
    }
}
