//! Offline runs over a recorded or generated stream.

use std::time::{Duration, Instant};

use har_core::eval::{run_batch_holdout, run_prequential, stratified_split, Clock, EvalReport, HoldoutReport};
use har_core::{featurize, Algorithm, Learner, Pipeline, PipelineConfig, PredictionRecord, SensorSample, FEATURE_DIM};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("pipeline failed at sample {index}: {source}")]
    Pipeline {
        index: usize,
        source: har_core::pipeline::PipelineError,
    },
    #[error("stream contains no labeled window")]
    NoLabeledWindows,
    #[error("{0}")]
    Window(#[from] har_core::window::WindowError),
    #[error("{0}")]
    Eval(#[from] har_core::eval::EvalError),
}

/// Nanoseconds since construction, from [`Instant`].
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

/// One algorithm's prequential pass over a stream.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub labels: Vec<String>,
    pub report: EvalReport,
    pub records: Vec<PredictionRecord>,
    pub elapsed: Duration,
}

/// Feeds `samples` through a fresh [`Pipeline`] exactly as the stream
/// service does, timing predict and learn calls with a monotonic clock.
pub fn run_stream<C: Clock>(samples: &[SensorSample], config: &PipelineConfig, clock: &C) -> Result<RunOutput, BenchError> {
    let start = Instant::now();
    let mut pipeline = Pipeline::new(config.clone());
    let mut records = Vec::new();
    for (index, s) in samples.iter().enumerate() {
        let out = pipeline
            .push_sample(s.clone(), clock)
            .map_err(|source| BenchError::Pipeline { index, source })?;
        if let Some((r, _)) = out.prediction {
            records.push(r);
        }
    }
    let report = pipeline.report();
    if report.windows == 0 {
        return Err(BenchError::NoLabeledWindows);
    }
    Ok(RunOutput {
        algorithm: config.algorithm,
        seed: config.seed,
        labels: pipeline.registry().names().to_vec(),
        report,
        records,
        elapsed: start.elapsed(),
    })
}

/// Runs each algorithm in turn on the same stream.
pub fn run_bench(samples: &[SensorSample], base: &PipelineConfig, algorithms: &[Algorithm]) -> Result<Vec<RunOutput>, BenchError> {
    let clock = MonotonicClock::new();
    algorithms
        .iter()
        .map(|&algorithm| {
            let cfg = PipelineConfig {
                algorithm,
                ..base.clone()
            };
            run_stream(samples, &cfg, &clock)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub algorithm: Algorithm,
    pub prequential_accuracy: f64,
    pub holdout: HoldoutReport,
    /// Holdout test accuracy minus prequential accuracy.
    pub gap: f64,
}

/// Prequential accuracy over the whole stream next to batch-holdout
/// accuracy on a stratified split of the same vectors.
pub fn batch_compare(
    samples: &[SensorSample],
    base: &PipelineConfig,
    algorithms: &[Algorithm],
    epochs: usize,
    test_fraction: f64,
) -> Result<Vec<BatchRow>, BenchError> {
    let data = featurize(samples.iter().cloned(), base.window, &base.features, base.normalize)?;
    if data.examples.is_empty() {
        return Err(BenchError::NoLabeledWindows);
    }
    let (train, test) = stratified_split(&data.examples, test_fraction, base.seed);
    algorithms
        .iter()
        .map(|&algorithm| {
            let mut online = Learner::new(algorithm, FEATURE_DIM, &base.learner, base.seed);
            let (report, _) = run_prequential(&data.examples, &mut online, &har_core::NoClock)?;
            let mut batch = Learner::new(algorithm, FEATURE_DIM, &base.learner, base.seed);
            let holdout = run_batch_holdout(&train, &test, &mut batch, epochs, base.seed)?;
            Ok(BatchRow {
                algorithm,
                prequential_accuracy: report.accuracy,
                gap: holdout.test_accuracy - report.accuracy,
                holdout,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use har_core::synth::{generate, three_round_scenario, well_separated_profiles};

    fn stream(n: usize) -> Vec<SensorSample> {
        let profiles = well_separated_profiles();
        generate(&profiles, &three_round_scenario(&profiles, n, 5).unwrap()).unwrap()
    }

    #[test]
    fn bench_runs_exactly_the_requested_algorithms() {
        let s = stream(2);
        let out = run_bench(&s, &PipelineConfig::default(), &[Algorithm::Iknn, Algorithm::Inb]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].algorithm, Algorithm::Iknn);
        assert_eq!(out[1].records.len(), 240);
        assert_eq!(out[1].labels.len(), 2);
        assert!(out[1].report.avg_predict_time_s >= 0.0);
    }

    #[test]
    fn unlabeled_stream_is_an_error() {
        let s: Vec<_> = stream(1).into_iter().map(|mut s| {
            s.label = None;
            s
        }).collect();
        assert!(matches!(
            run_stream(&s, &PipelineConfig::default(), &MonotonicClock::new()),
            Err(BenchError::NoLabeledWindows)
        ));
    }

    #[test]
    fn batch_rows_carry_both_accuracies() {
        let s = stream(3);
        let rows = batch_compare(&s, &PipelineConfig::default(), &[Algorithm::Inb], 3, 0.2).unwrap();
        assert_eq!(rows[0].holdout.epochs, 3);
        assert!(rows[0].holdout.train_accuracy > 0.5);
        assert!((rows[0].gap - (rows[0].holdout.test_accuracy - rows[0].prequential_accuracy)).abs() < 1e-15);
    }
}
