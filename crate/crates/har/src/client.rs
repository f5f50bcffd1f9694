//! Client side of the stream service: connections and CSV replay.

use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use har_core::{Algorithm, PredictionRecord, SensorSample};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;

use crate::wire::{ClientBody, ClientMessage, MetricsEvent, ServerBody, ServerMessage};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("unsupported url {0:?}; expected ws://host:port/stream or tcp://host:port")]
    Url(String),
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("connection closed")]
    Closed,
    #[error("invalid server message: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("timed out waiting for the server")]
    Timeout,
}

/// A message pipe to the service over WebSocket (`ws://`) or
/// newline-delimited JSON over TCP (`tcp://`).
pub struct Connection {
    tx: Option<mpsc::UnboundedSender<String>>,
    rx: mpsc::UnboundedReceiver<String>,
    writer: tokio::task::JoinHandle<()>,
}

impl Connection {
    pub async fn connect(url: &str) -> Result<Self, ClientError> {
        let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
        let (in_tx, in_rx) = mpsc::unbounded_channel::<String>();
        let writer = if url.starts_with("ws://") || url.starts_with("wss://") {
            let (ws, _) = tokio_tungstenite::connect_async_with_config(url, None, true)
                .await
                .map_err(|e| ClientError::Connect(e.to_string()))?;
            let (mut sink, mut stream) = ws.split();
            tokio::spawn(async move {
                while let Some(Ok(msg)) = stream.next().await {
                    match msg {
                        Message::Text(t) => {
                            if in_tx.send(t.to_string()).is_err() {
                                break;
                            }
                        }
                        Message::Close(_) => break,
                        _ => {}
                    }
                }
            });
            tokio::spawn(async move {
                while let Some(text) = out_rx.recv().await {
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                let _ = sink.send(Message::Close(None)).await;
            })
        } else if let Some(hostport) = url.strip_prefix("tcp://") {
            let stream = TcpStream::connect(hostport.trim_end_matches('/'))
                .await
                .map_err(|e| ClientError::Connect(e.to_string()))?;
            stream.set_nodelay(true).map_err(|e| ClientError::Connect(e.to_string()))?;
            let (read, mut write) = stream.into_split();
            tokio::spawn(async move {
                let mut lines = BufReader::new(read).lines();
                while let Ok(Some(line)) = lines.next_line().await {
                    if in_tx.send(line).is_err() {
                        break;
                    }
                }
            });
            tokio::spawn(async move {
                while let Some(mut text) = out_rx.recv().await {
                    text.push('\n');
                    if write.write_all(text.as_bytes()).await.is_err() {
                        return;
                    }
                }
                let _ = write.shutdown().await;
            })
        } else {
            return Err(ClientError::Url(url.to_string()));
        };
        Ok(Self {
            tx: Some(out_tx),
            rx: in_rx,
            writer,
        })
    }

    pub fn send(&self, msg: &ClientMessage) -> Result<(), ClientError> {
        self.send_raw(msg.to_json())
    }

    /// Sends a text frame as is, valid or not.
    pub fn send_raw(&self, text: String) -> Result<(), ClientError> {
        self.tx.as_ref().ok_or(ClientError::Closed)?.send(text).map_err(|_| ClientError::Closed)
    }

    /// Next server message; `None` once the server closed the connection.
    pub async fn recv(&mut self) -> Option<Result<ServerMessage, ClientError>> {
        let text = self.rx.recv().await?;
        Some(serde_json::from_str(&text).map_err(ClientError::from))
    }

    pub async fn recv_timeout(&mut self, limit: Duration) -> Result<ServerMessage, ClientError> {
        match tokio::time::timeout(limit, self.recv()).await {
            Err(_) => Err(ClientError::Timeout),
            Ok(None) => Err(ClientError::Closed),
            Ok(Some(r)) => r,
        }
    }

    /// Stops sending and waits until queued messages are flushed.
    pub async fn finish_sending(&mut self) {
        self.tx = None;
        let _ = (&mut self.writer).await;
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub url: String,
    /// Playback speed relative to the recorded timestamps; 0 sends as fast
    /// as possible.
    pub speed: f64,
    pub session: Option<String>,
    pub algorithm: Option<Algorithm>,
    pub seed: Option<u64>,
    pub window: Option<usize>,
    /// Give up if the server stays silent this long after the last message.
    pub idle_timeout: Duration,
    /// Most samples sent ahead of the server's last prediction. Keeps a
    /// fast replay inside the server's inbox.
    pub max_in_flight: usize,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self {
            url: "ws://127.0.0.1:8080/stream".into(),
            speed: 1.0,
            session: None,
            algorithm: None,
            seed: None,
            window: None,
            idle_timeout: Duration::from_secs(30),
            max_in_flight: 1024,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplayOutcome {
    pub session: String,
    pub records: Vec<PredictionRecord>,
    pub final_metrics: Option<MetricsEvent>,
    pub warnings: Vec<ServerMessage>,
    pub errors: Vec<ServerMessage>,
}

impl ReplayOutcome {
    /// Records one server message; true once the session has ended.
    fn absorb(&mut self, msg: ServerMessage) -> bool {
        match msg.body {
            ServerBody::Prediction(ref p) => self.records.push(p.record()),
            ServerBody::Metrics(ref m) if m.is_final => self.final_metrics = Some(m.clone()),
            ServerBody::Ack { ref of, .. } if of == "end" => return true,
            ServerBody::Warning { .. } => self.warnings.push(msg),
            ServerBody::Error { .. } => self.errors.push(msg),
            _ => {}
        }
        false
    }
}

/// Streams recorded samples to the service. Labels are sent as `label`
/// messages whenever the recorded label changes; the end of the recording
/// sends `end` and waits for the final metrics.
pub async fn replay(samples: &[SensorSample], opts: &ReplayOptions) -> Result<ReplayOutcome, ClientError> {
    let mut conn = Connection::connect(&opts.url).await?;
    conn.send(&ClientMessage::new(
        opts.session.as_deref(),
        ClientBody::Hello {
            algorithm: opts.algorithm,
            seed: opts.seed,
            window: opts.window,
            rate_hz: None,
        },
    ))?;
    let first = conn.recv_timeout(opts.idle_timeout).await?;
    let session = first.session.clone();
    let mut outcome = ReplayOutcome {
        session: session.clone(),
        ..ReplayOutcome::default()
    };
    if let ServerBody::Error { .. } = first.body {
        outcome.errors.push(first);
        return Ok(outcome);
    }

    let start = Instant::now();
    let t0 = samples.first().map(|s| s.t_ms).unwrap_or(0);
    let window = opts.window.unwrap_or(40).max(1);
    let max_in_flight = opts.max_in_flight.max(2 * window);
    let mut label: Option<&str> = None;
    for (i, s) in samples.iter().enumerate() {
        while i.saturating_sub(window * outcome.records.len()) >= max_in_flight {
            let msg = conn.recv_timeout(opts.idle_timeout).await?;
            outcome.absorb(msg);
        }
        if opts.speed > 0.0 {
            let due = Duration::from_secs_f64((s.t_ms - t0).max(0) as f64 / 1000.0 / opts.speed);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                tokio::time::sleep(wait).await;
            }
        }
        if i == 0 || s.label.as_deref() != label {
            label = s.label.as_deref();
            conn.send(&ClientMessage::new(
                Some(&session),
                ClientBody::Label {
                    label: label.map(String::from),
                },
            ))?;
        }
        conn.send(&ClientMessage::sample(&session, s))?;
    }
    conn.send(&ClientMessage::new(Some(&session), ClientBody::End))?;

    loop {
        let msg = match conn.recv_timeout(opts.idle_timeout).await {
            Ok(m) => m,
            Err(ClientError::Closed) => break,
            Err(e) => return Err(e),
        };
        if outcome.absorb(msg) {
            break;
        }
    }
    conn.finish_sending().await;
    Ok(outcome)
}
