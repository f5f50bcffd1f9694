//! JSON messages of the `/stream` endpoint, schema version 1.
//!
//! Every message is one JSON object with `v`, `type` and `session`. Unknown
//! fields are ignored.
//!
//! Client to server:
//!
//! ```json
//! {"v":1,"type":"hello","session":"phone-1","algorithm":"inb","seed":7}
//! {"v":1,"type":"label","session":"phone-1","label":"Walking"}
//! {"v":1,"type":"sample","session":"phone-1","t_ms":0,"ax":0.1,"ay":9.7,"az":0.3,"gx":0.0,"gy":0.01,"gz":0.02}
//! {"v":1,"type":"end","session":"phone-1"}
//! ```
//!
//! `hello` may omit `session` (the server assigns one) and any pipeline
//! setting. `label` with `"label":null` stops attaching labels, so later
//! windows are predicted but not learned.
//!
//! Server to client:
//!
//! ```json
//! {"v":1,"type":"ack","session":"phone-1","of":"label","label":"Walking"}
//! {"v":1,"type":"prediction","session":"phone-1","window":0,"predicted":null,"true":"Walking","correct":false,"scores":{},"predict_ms":0.004}
//! {"v":1,"type":"metrics","session":"phone-1","windows":1,"correct":0,"accuracy":0.0,"macro_precision":0.0,"macro_recall":0.0,"macro_f1":0.0,"none":1,"train_ms":0.02,"final":false}
//! {"v":1,"type":"warning","session":"phone-1","code":"inbox_overflow","message":"...","dropped":12}
//! {"v":1,"type":"error","session":"phone-1","code":"malformed","message":"..."}
//! ```
//!
//! A `prediction` is sent before the window is learned; the `metrics` that
//! follows it reflects the update and carries its training time.

use std::collections::BTreeMap;

use har_core::{Algorithm, PredictionRecord, SensorSample};
use serde::{Deserialize, Serialize};

pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub v: u32,
    #[serde(default)]
    pub session: Option<String>,
    #[serde(flatten)]
    pub body: ClientBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientBody {
    Hello {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        algorithm: Option<Algorithm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_hz: Option<f64>,
    },
    Label {
        label: Option<String>,
    },
    Sample {
        t_ms: i64,
        ax: f64,
        ay: f64,
        az: f64,
        gx: f64,
        gy: f64,
        gz: f64,
    },
    End,
}

impl ClientMessage {
    pub fn new(session: Option<&str>, body: ClientBody) -> Self {
        Self {
            v: WIRE_VERSION,
            session: session.map(String::from),
            body,
        }
    }

    pub fn sample(session: &str, s: &SensorSample) -> Self {
        Self::new(
            Some(session),
            ClientBody::Sample {
                t_ms: s.t_ms,
                ax: s.ax,
                ay: s.ay,
                az: s.az,
                gx: s.gx,
                gy: s.gy,
                gz: s.gz,
            },
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("client message serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub v: u32,
    pub session: String,
    #[serde(flatten)]
    pub body: ServerBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerBody {
    Ack {
        of: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        algorithm: Option<Algorithm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Prediction(PredictionEvent),
    Metrics(MetricsEvent),
    Warning {
        code: String,
        message: String,
        dropped: u64,
    },
    Error {
        code: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEvent {
    pub window: u64,
    pub predicted: Option<String>,
    #[serde(rename = "true")]
    pub truth: Option<String>,
    pub correct: Option<bool>,
    pub scores: BTreeMap<String, f64>,
    pub predict_ms: f64,
}

impl PredictionEvent {
    pub fn new(r: &PredictionRecord, predict_ms: f64) -> Self {
        Self {
            window: r.window,
            predicted: r.predicted.clone(),
            truth: r.truth.clone(),
            correct: r.correct,
            scores: r.scores.clone(),
            predict_ms,
        }
    }

    pub fn record(&self) -> PredictionRecord {
        PredictionRecord {
            window: self.window,
            predicted: self.predicted.clone(),
            truth: self.truth.clone(),
            correct: self.correct,
            scores: self.scores.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsEvent {
    pub windows: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub none: u64,
    /// Training time of the window just learned.
    pub train_ms: Option<f64>,
    #[serde(rename = "final")]
    pub is_final: bool,
}

impl ServerMessage {
    pub fn new(session: &str, body: ServerBody) -> Self {
        Self {
            v: WIRE_VERSION,
            session: session.to_string(),
            body,
        }
    }

    pub fn error(session: &str, code: &str, message: impl Into<String>) -> Self {
        Self::new(
            session,
            ServerBody::Error {
                code: code.into(),
                message: message.into(),
            },
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_lines() -> Vec<String> {
        include_str!("wire.rs")
            .lines()
            .filter_map(|l| l.strip_prefix("//! {"))
            .map(|l| format!("{{{l}"))
            .collect()
    }

    #[test]
    fn documented_examples_parse() {
        let lines = doc_lines();
        assert_eq!(lines.len(), 9);
        for l in &lines[..4] {
            let m: ClientMessage = serde_json::from_str(l).unwrap();
            assert_eq!(m.v, 1);
            assert_eq!(m.session.as_deref(), Some("phone-1"));
        }
        for l in &lines[4..] {
            let m: ServerMessage = serde_json::from_str(l).unwrap();
            assert_eq!(m.session, "phone-1");
        }
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let m: ClientMessage =
            serde_json::from_str(r#"{"v":1,"type":"label","session":"a","label":"Run","colour":"red"}"#).unwrap();
        assert_eq!(m.body, ClientBody::Label { label: Some("Run".into()) });
    }

    #[test]
    fn samples_roundtrip_exactly() {
        let s = SensorSample::new(5, [0.1 + 0.2, -1e-300, 1.0 / 3.0], [7e22, -0.0, 2.5], None);
        let text = ClientMessage::sample("x", &s).to_json();
        let back: ClientMessage = serde_json::from_str(&text).unwrap();
        match back.body {
            ClientBody::Sample { ax, ay, az, gx, .. } => {
                assert_eq!([ax, ay, az, gx], [s.ax, s.ay, s.az, s.gx]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prediction_event_keeps_the_record() {
        let r = PredictionRecord {
            window: 3,
            predicted: Some("A".into()),
            truth: Some("B".into()),
            correct: Some(false),
            scores: [("A".to_string(), 0.75), ("B".to_string(), 0.25)].into_iter().collect(),
        };
        let msg = ServerMessage::new("s", ServerBody::Prediction(PredictionEvent::new(&r, 0.5)));
        let back: ServerMessage = serde_json::from_str(&msg.to_json()).unwrap();
        match back.body {
            ServerBody::Prediction(p) => assert_eq!(p.record(), r),
            other => panic!("{other:?}"),
        }
    }
}
