use std::time::Duration;

use har::client::{replay, Connection, ReplayOptions};
use har::service::{start, Health, ServerHandle, ServiceOptions};
use har::wire::{ClientBody, ClientMessage, ServerBody, ServerMessage};
use har_core::synth::{generate, three_round_scenario, well_separated_profiles};
use har_core::{Algorithm, SensorSample};

const WAIT: Duration = Duration::from_secs(10);

async fn server(tcp: bool) -> ServerHandle {
    start(ServiceOptions {
        port: 0,
        tcp_port: tcp.then_some(0),
        ..ServiceOptions::default()
    })
    .await
    .unwrap()
}

fn ws_url(h: &ServerHandle) -> String {
    format!("ws://{}/stream", h.addr)
}

fn hello(session: &str, algorithm: Algorithm) -> ClientMessage {
    ClientMessage::new(
        Some(session),
        ClientBody::Hello {
            algorithm: Some(algorithm),
            seed: Some(1),
            window: None,
            rate_hz: None,
        },
    )
}

fn set_label(session: &str, l: Option<&str>) -> ClientMessage {
    ClientMessage::new(Some(session), ClientBody::Label { label: l.map(String::from) })
}

fn flat(t: i64, v: f64) -> SensorSample {
    SensorSample::new(t, [v, v + 1.0, v + 2.0], [v / 2.0, 0.0, -v], None)
}

async fn next_of(conn: &mut Connection, kind: &str) -> ServerMessage {
    loop {
        let m = conn.recv_timeout(WAIT).await.unwrap();
        let matches = matches!(
            (&m.body, kind),
            (ServerBody::Ack { .. }, "ack")
                | (ServerBody::Prediction(_), "prediction")
                | (ServerBody::Metrics(_), "metrics")
                | (ServerBody::Error { .. }, "error")
                | (ServerBody::Warning { .. }, "warning")
        );
        if matches {
            return m;
        }
    }
}

async fn health(h: &ServerHandle) -> Health {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut s = tokio::net::TcpStream::connect(h.addr).await.unwrap();
    s.write_all(b"GET /health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).await.unwrap();
    let json = body.split("\r\n\r\n").nth(1).unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    Health {
        status: "ok",
        sessions_active: v["sessions_active"].as_u64().unwrap() as usize,
        sessions_total: v["sessions_total"].as_u64().unwrap(),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn forty_labeled_samples_give_one_prediction_then_a_learned_window() {
    let h = server(false).await;
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&hello("a", Algorithm::Inb)).unwrap();
    assert!(matches!(next_of(&mut c, "ack").await.body, ServerBody::Ack { ref of, .. } if of == "hello"));
    c.send(&set_label("a", Some("Walking"))).unwrap();
    next_of(&mut c, "ack").await;
    for t in 0..40 {
        c.send(&ClientMessage::sample("a", &flat(t * 50, t as f64))).unwrap();
    }
    let p = next_of(&mut c, "prediction").await;
    let ServerBody::Prediction(p) = p.body else { unreachable!() };
    assert_eq!(p.window, 0);
    assert_eq!(p.predicted, None);
    assert_eq!(p.truth.as_deref(), Some("Walking"));
    assert_eq!(p.correct, Some(false));
    let ServerBody::Metrics(m) = next_of(&mut c, "metrics").await.body else { unreachable!() };
    assert_eq!(m.windows, 1);
    assert_eq!(m.none, 1);
    assert!(m.train_ms.is_some());

    for t in 40..80 {
        c.send(&ClientMessage::sample("a", &flat(t * 50, t as f64))).unwrap();
    }
    let ServerBody::Prediction(p) = next_of(&mut c, "prediction").await.body else { unreachable!() };
    assert_eq!(p.predicted.as_deref(), Some("Walking"));
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unlabeled_windows_are_predicted_but_not_learned() {
    let h = server(false).await;
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&hello("u", Algorithm::Iknn)).unwrap();
    for t in 0..40 {
        c.send(&ClientMessage::sample("u", &flat(t * 50, 1.0))).unwrap();
    }
    let ServerBody::Prediction(p) = next_of(&mut c, "prediction").await.body else { unreachable!() };
    assert_eq!((p.truth, p.correct, p.predicted), (None, None, None));
    c.send(&ClientMessage::new(Some("u"), ClientBody::End)).unwrap();
    let ServerBody::Metrics(m) = next_of(&mut c, "metrics").await.body else { unreachable!() };
    assert!(m.is_final);
    assert_eq!(m.windows, 0);
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_and_out_of_order_messages_keep_the_connection() {
    let h = server(false).await;
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&ClientMessage::sample("nobody", &flat(0, 0.0))).unwrap();
    let e = next_of(&mut c, "error").await;
    assert!(matches!(e.body, ServerBody::Error { ref code, .. } if code == "unknown_session"));
    c.send_raw("{not json".into()).unwrap();
    assert!(matches!(next_of(&mut c, "error").await.body, ServerBody::Error { ref code, .. } if code == "malformed"));
    c.send_raw(r#"{"v":2,"type":"end"}"#.into()).unwrap();
    assert!(matches!(next_of(&mut c, "error").await.body, ServerBody::Error { ref code, .. } if code == "unsupported_version"));

    c.send(&hello("m", Algorithm::Inb)).unwrap();
    next_of(&mut c, "ack").await;
    c.send(&ClientMessage::sample("other", &flat(0, 0.0))).unwrap();
    assert!(matches!(next_of(&mut c, "error").await.body, ServerBody::Error { ref code, .. } if code == "unknown_session"));
    c.send(&set_label("m", Some("Run"))).unwrap();
    let ServerBody::Ack { label, .. } = next_of(&mut c, "ack").await.body else { unreachable!() };
    assert_eq!(label.as_deref(), Some("Run"));
    c.send(&set_label("m", Some("Run"))).unwrap();
    let ServerBody::Ack { label, .. } = next_of(&mut c, "ack").await.body else { unreachable!() };
    assert_eq!(label.as_deref(), Some("Run"));
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_are_isolated() {
    let h = server(false).await;
    let url = ws_url(&h);
    let profiles = well_separated_profiles();
    let samples = generate(&profiles, &three_round_scenario(&profiles, 2, 4).unwrap()).unwrap();
    let swapped: Vec<SensorSample> = samples
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.label = s.label.map(|l| if l == "Walking" { "Running".into() } else { "Walking".into() });
            s
        })
        .collect();
    let opts = ReplayOptions {
        url: url.clone(),
        speed: 0.0,
        algorithm: Some(Algorithm::Inb),
        seed: Some(1),
        ..ReplayOptions::default()
    };
    let (a, b, a2) = tokio::join!(replay(&samples, &opts), replay(&swapped, &opts), replay(&samples, &opts));
    let (a, b, a2) = (a.unwrap(), b.unwrap(), a2.unwrap());
    for o in [&a, &b, &a2] {
        assert!(o.warnings.is_empty() && o.errors.is_empty(), "{:?}", o.warnings);
    }
    assert_ne!(a.session, b.session);
    assert_eq!(a.records, a2.records);
    assert_eq!(a.records.len(), b.records.len());
    let flipped = a
        .records
        .iter()
        .zip(&b.records)
        .filter(|(x, y)| x.predicted.is_some() && x.predicted != y.predicted)
        .count();
    assert!(flipped > a.records.len() / 2, "{flipped}");
    assert_eq!(a.final_metrics.unwrap().accuracy, b.final_metrics.unwrap().accuracy);
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn health_counts_sessions() {
    let h = server(false).await;
    assert_eq!(health(&h).await.sessions_active, 0);
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&hello("h", Algorithm::Inb)).unwrap();
    next_of(&mut c, "ack").await;
    let got = health(&h).await;
    assert_eq!((got.sessions_active, got.sessions_total), (1, 1));
    c.send(&ClientMessage::new(Some("h"), ClientBody::End)).unwrap();
    next_of(&mut c, "ack").await;
    c.finish_sending().await;
    for _ in 0..100 {
        if health(&h).await.sessions_active == 0 {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let got = health(&h).await;
    assert_eq!((got.sessions_active, got.sessions_total), (0, 1));
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn tcp_fallback_speaks_the_same_messages() {
    let h = server(true).await;
    let url = format!("tcp://{}", h.tcp_addr.unwrap());
    let profiles = well_separated_profiles();
    let samples = generate(&profiles, &three_round_scenario(&profiles, 2, 8).unwrap()).unwrap();
    let base = ReplayOptions {
        speed: 0.0,
        algorithm: Some(Algorithm::Iknn),
        seed: Some(3),
        ..ReplayOptions::default()
    };
    let tcp = replay(&samples, &ReplayOptions { url, ..base.clone() }).await.unwrap();
    let ws = replay(&samples, &ReplayOptions { url: ws_url(&h), ..base }).await.unwrap();
    assert!(tcp.warnings.is_empty() && ws.warnings.is_empty());
    assert_eq!(tcp.records.len(), 240);
    assert_eq!(tcp.records, ws.records);
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn shutdown_flushes_final_metrics() {
    let h = server(false).await;
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&hello("f", Algorithm::Inb)).unwrap();
    c.send(&set_label("f", Some("Walking"))).unwrap();
    for t in 0..40 {
        c.send(&ClientMessage::sample("f", &flat(t * 50, 0.5))).unwrap();
    }
    next_of(&mut c, "prediction").await;
    next_of(&mut c, "metrics").await;
    let stopper = h.stopper();
    let done = tokio::spawn(h.wait());
    stopper.send(true).unwrap();
    let ServerBody::Metrics(m) = next_of(&mut c, "metrics").await.body else { unreachable!() };
    assert!(m.is_final);
    assert_eq!(m.windows, 1);
    tokio::time::timeout(WAIT, done).await.unwrap().unwrap().unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn non_finite_json_numbers_are_rejected() {
    let h = server(false).await;
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&hello("n", Algorithm::Inb)).unwrap();
    c.send_raw(r#"{"v":1,"type":"sample","session":"n","t_ms":0,"ax":1e999,"ay":0,"az":0,"gx":0,"gy":0,"gz":0}"#.into())
        .unwrap();
    assert!(matches!(next_of(&mut c, "error").await.body, ServerBody::Error { .. }));
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn timestamp_regression_is_a_warning() {
    let h = server(false).await;
    let mut c = Connection::connect(&ws_url(&h)).await.unwrap();
    c.send(&hello("t", Algorithm::Inb)).unwrap();
    c.send(&ClientMessage::sample("t", &flat(100, 0.0))).unwrap();
    c.send(&ClientMessage::sample("t", &flat(50, 0.0))).unwrap();
    let w = next_of(&mut c, "warning").await;
    assert!(matches!(w.body, ServerBody::Warning { ref code, .. } if code == "timestamp_regression"));
    h.shutdown().await.unwrap();
}
