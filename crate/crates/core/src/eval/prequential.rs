use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Clock, ConfusionMatrix, EvalError, MacroMetrics};
use crate::label::ClassId;
use crate::learners::OnlineClassifier;

/// A labeled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: ClassId,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleTiming {
    pub predict_ns: u64,
    pub train_ns: u64,
}

/// One evaluated window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub window: u64,
    pub truth: Option<ClassId>,
    pub predicted: Option<ClassId>,
    pub scores: Vec<f64>,
    pub timing: SampleTiming,
}

impl LogEntry {
    /// `None` when the window carried no label.
    pub fn correct(&self) -> Option<bool> {
        self.truth.map(|t| self.predicted == Some(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub window: u64,
    pub accuracy: f64,
}

/// Aggregates of one prequential run. All rates are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub windows: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub macro_metrics: MacroMetrics,
    pub avg_train_time_s: f64,
    pub avg_predict_time_s: f64,
    pub curve: Vec<CurvePoint>,
    pub confusion: ConfusionMatrix,
}

/// Mean train and predict durations in seconds; `None` for an empty log.
pub fn time_per_sample(log: &[SampleTiming]) -> Option<(f64, f64)> {
    if log.is_empty() {
        return None;
    }
    let n = log.len() as f64;
    let train: f64 = log.iter().map(|t| t.train_ns as f64).sum();
    let predict: f64 = log.iter().map(|t| t.predict_ns as f64).sum();
    Some((train / n / 1e9, predict / n / 1e9))
}

/// Incremental test-then-train state: predict, score, then learn.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Prequential {
    confusion: ConfusionMatrix,
    curve: Vec<CurvePoint>,
    timings: Vec<SampleTiming>,
}

impl Prequential {
    pub fn new() -> Self {
        Self::default()
    }

    /// Predicts `x`, scores the prediction against `truth` and, when a label
    /// is present, learns from it. `on_predict` runs after prediction and
    /// before any model update. Unlabeled windows are predicted only and
    /// excluded from the metrics.
    pub fn step_with<M, K, F>(
        &mut self,
        model: &mut M,
        clock: &K,
        window: u64,
        x: &[f64],
        truth: Option<ClassId>,
        on_predict: F,
    ) -> Result<LogEntry, EvalError>
    where
        M: OnlineClassifier + ?Sized,
        K: Clock + ?Sized,
        F: FnOnce(&LogEntry),
    {
        let t0 = clock.now_ns();
        let prediction = model.predict(x)?;
        let t1 = clock.now_ns();
        let (predicted, scores) = match prediction {
            Some(p) => (Some(p.label), p.scores),
            None => (None, Vec::new()),
        };
        let mut entry = LogEntry {
            window,
            truth,
            predicted,
            scores,
            timing: SampleTiming {
                predict_ns: t1.saturating_sub(t0),
                train_ns: 0,
            },
        };
        on_predict(&entry);
        if let Some(y) = truth {
            self.confusion.record(y, predicted);
            self.curve.push(CurvePoint {
                window,
                accuracy: self.confusion.accuracy(),
            });
            let t2 = clock.now_ns();
            model.learn(x, y)?;
            let t3 = clock.now_ns();
            entry.timing.train_ns = t3.saturating_sub(t2);
            self.timings.push(entry.timing);
        }
        Ok(entry)
    }

    pub fn step<M, K>(
        &mut self,
        model: &mut M,
        clock: &K,
        window: u64,
        x: &[f64],
        truth: Option<ClassId>,
    ) -> Result<LogEntry, EvalError>
    where
        M: OnlineClassifier + ?Sized,
        K: Clock + ?Sized,
    {
        self.step_with(model, clock, window, x, truth, |_| {})
    }

    pub fn confusion(&self) -> &ConfusionMatrix {
        &self.confusion
    }

    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    pub fn report(&self) -> EvalReport {
        let (avg_train_time_s, avg_predict_time_s) = time_per_sample(&self.timings).unwrap_or((0.0, 0.0));
        EvalReport {
            windows: self.confusion.total(),
            correct: self.confusion.correct(),
            accuracy: self.confusion.accuracy(),
            macro_metrics: self.confusion.macro_metrics(),
            avg_train_time_s,
            avg_predict_time_s,
            curve: self.curve.clone(),
            confusion: self.confusion.clone(),
        }
    }
}

/// Runs test-then-train over `stream` in order. Window indices are stream
/// positions. Returns the report and the per-window log.
pub fn run_prequential<'a, M, K, I>(stream: I, model: &mut M, clock: &K) -> Result<(EvalReport, Vec<LogEntry>), EvalError>
where
    M: OnlineClassifier + ?Sized,
    K: Clock + ?Sized,
    I: IntoIterator<Item = &'a Example>,
{
    let mut state = Prequential::new();
    let mut log = Vec::new();
    for (i, ex) in stream.into_iter().enumerate() {
        log.push(state.step(model, clock, i as u64, &ex.x, Some(ex.y))?);
    }
    if log.is_empty() {
        return Err(EvalError::EmptyStream);
    }
    Ok((state.report(), log))
}

/// Accuracy over the trailing `width` scored windows at each position.
pub fn rolling_accuracy(correct: &[bool], width: usize) -> Vec<f64> {
    let width = width.max(1);
    let mut out = Vec::with_capacity(correct.len());
    let mut hits = 0usize;
    for i in 0..correct.len() {
        hits += correct[i] as usize;
        if i >= width {
            hits -= correct[i - width] as usize;
        }
        out.push(hits as f64 / (i + 1).min(width) as f64);
    }
    out
}

/// How rolling accuracy behaves around one activity switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchResponse {
    /// Position of the first window of the new activity.
    pub at: usize,
    /// Rolling accuracy of the window just before the switch.
    pub before: f64,
    /// Lowest rolling accuracy within the horizon after the switch.
    pub dip: f64,
    /// Highest rolling accuracy after the dip and before the next switch.
    pub recovered: f64,
}

impl SwitchResponse {
    pub fn drop(&self) -> f64 {
        self.before - self.dip
    }

    /// Accuracy fell by at least `min_drop` and climbed back by at least as much.
    pub fn dips_and_recovers(&self, min_drop: f64) -> bool {
        self.drop() >= min_drop - 1e-12 && self.recovered - self.dip >= min_drop - 1e-12
    }
}

/// Rolling-accuracy response to every change of true label in `truths`.
pub fn switch_responses(truths: &[ClassId], correct: &[bool], width: usize, horizon: usize) -> Vec<SwitchResponse> {
    let rolling = rolling_accuracy(correct, width);
    let switches: Vec<usize> = (1..truths.len()).filter(|&i| truths[i] != truths[i - 1]).collect();
    switches
        .iter()
        .enumerate()
        .map(|(n, &at)| {
            let end = switches.get(n + 1).copied().unwrap_or(truths.len());
            let dip_end = (at + horizon).min(end);
            let (dip_pos, dip) = (at..dip_end)
                .map(|i| (i, rolling[i]))
                .fold((at, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc });
            let recovered = (dip_pos..end).map(|i| rolling[i]).fold(dip, f64::max);
            SwitchResponse {
                at,
                before: rolling[at - 1],
                dip,
                recovered,
            }
        })
        .collect()
}
