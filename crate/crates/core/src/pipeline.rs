//! Per-session pipeline: samples → windows → features → normalization →
//! predict → learn.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::eval::{Clock, EvalError, EvalReport, Example, LogEntry, Prequential, SampleTiming};
use crate::features::{extract, FeatureConfig, FeatureVector, OnlineNormalizer, FEATURE_DIM};
use crate::label::LabelRegistry;
use crate::learners::{Algorithm, Learner, LearnerConfig};
use crate::window::{SensorSample, TimestampRegression, WindowAssembler, WindowConfig, WindowError};

/// Where the online z-score is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeStage {
    /// Each of the six raw channels, before windowing.
    #[default]
    Signal,
    /// Each of the 98 extracted features.
    Features,
    Off,
}

/// Samples in, normalized feature vectors out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Preprocessor {
    stage: NormalizeStage,
    features: FeatureConfig,
    assembler: WindowAssembler,
    normalizer: OnlineNormalizer,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Preprocessed {
    pub vector: Option<FeatureVector>,
    pub regression: Option<TimestampRegression>,
}

impl Preprocessor {
    pub fn new(window: WindowConfig, features: FeatureConfig, stage: NormalizeStage) -> Self {
        let dims = match stage {
            NormalizeStage::Signal => 6,
            NormalizeStage::Features => FEATURE_DIM,
            NormalizeStage::Off => 0,
        };
        Self {
            stage,
            features,
            assembler: WindowAssembler::new(window),
            normalizer: OnlineNormalizer::new(dims),
        }
    }

    pub fn buffered(&self) -> usize {
        self.assembler.buffered()
    }

    pub fn normalizer(&self) -> &OnlineNormalizer {
        &self.normalizer
    }

    /// Non-finite samples are rejected before they touch any statistics.
    pub fn push(&mut self, mut sample: SensorSample) -> Result<Preprocessed, WindowError> {
        if !sample.is_finite() {
            return Err(WindowError::NonFiniteChannel { t_ms: sample.t_ms });
        }
        if self.stage == NormalizeStage::Signal {
            let z = self.normalizer.normalize(&sample.channels());
            [sample.ax, sample.ay, sample.az, sample.gx, sample.gy, sample.gz] = [z[0], z[1], z[2], z[3], z[4], z[5]];
        }
        let pushed = self.assembler.push(sample)?;
        let vector = pushed.window.map(|w| {
            let mut fv = extract(&w, &self.features);
            if self.stage == NormalizeStage::Features {
                fv.values = self.normalizer.normalize(&fv.values);
            }
            fv
        });
        Ok(Preprocessed {
            vector,
            regression: pushed.regression,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub window: WindowConfig,
    pub features: FeatureConfig,
    pub normalize: NormalizeStage,
    pub learner: LearnerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Inb,
            seed: 0,
            window: WindowConfig::default(),
            features: FeatureConfig::default(),
            normalize: NormalizeStage::default(),
            learner: LearnerConfig::default(),
        }
    }
}

/// Outcome of one window, keyed by label names. Contains no timing, so logs
/// from separate runs compare byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub window: u64,
    pub predicted: Option<String>,
    #[serde(rename = "true")]
    pub truth: Option<String>,
    pub correct: Option<bool>,
    pub scores: BTreeMap<String, f64>,
}

impl PredictionRecord {
    pub fn from_entry(entry: &LogEntry, registry: &LabelRegistry) -> Self {
        let name = |id| registry.name(id).map(String::from);
        PredictionRecord {
            window: entry.window,
            predicted: entry.predicted.and_then(name),
            truth: entry.truth.and_then(name),
            correct: entry.correct(),
            scores: entry
                .scores
                .iter()
                .enumerate()
                .filter_map(|(id, &s)| registry.name(id).map(|n| (String::from(n), s)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PushOutcome {
    pub prediction: Option<(PredictionRecord, SampleTiming)>,
    pub regression: Option<TimestampRegression>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    Window(WindowError),
    Eval(EvalError),
}

impl core::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PipelineError::Window(e) => e.fmt(f),
            PipelineError::Eval(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for PipelineError {}

impl From<WindowError> for PipelineError {
    fn from(e: WindowError) -> Self {
        PipelineError::Window(e)
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        PipelineError::Eval(e)
    }
}

/// Single-writer test-then-train pipeline for one stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pipeline {
    config: PipelineConfig,
    pre: Preprocessor,
    learner: Learner,
    registry: LabelRegistry,
    prequential: Prequential,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        let learner = Learner::new(config.algorithm, FEATURE_DIM, &config.learner, config.seed);
        Self {
            pre: Preprocessor::new(config.window, config.features, config.normalize),
            learner,
            registry: LabelRegistry::new(),
            prequential: Prequential::new(),
            config,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn registry(&self) -> &LabelRegistry {
        &self.registry
    }

    /// Registers a label name ahead of its first sample.
    pub fn register_label(&mut self, name: &str) {
        self.registry.intern(name);
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn report(&self) -> EvalReport {
        self.prequential.report()
    }

    pub fn buffered(&self) -> usize {
        self.pre.buffered()
    }

    /// Feeds one sample. On window completion the window is predicted,
    /// `on_predict` receives the record and the predict timing before the
    /// model learns, and the
    /// window's label (if any) is then learned.
    pub fn push_sample_with<K, F>(&mut self, sample: SensorSample, clock: &K, on_predict: F) -> Result<PushOutcome, PipelineError>
    where
        K: Clock + ?Sized,
        F: FnOnce(&PredictionRecord, &SampleTiming),
    {
        if let (true, Some(l)) = (sample.is_finite(), &sample.label) {
            self.registry.intern(l);
        }
        let pushed = self.pre.push(sample)?;
        let mut outcome = PushOutcome {
            prediction: None,
            regression: pushed.regression,
        };
        if let Some(fv) = pushed.vector {
            let truth = fv.label.as_deref().and_then(|l| self.registry.id_of(l));
            let registry = &self.registry;
            let mut record = None;
            let entry = self.prequential.step_with(&mut self.learner, clock, fv.window_index, &fv.values, truth, |e| {
                let r = PredictionRecord::from_entry(e, registry);
                on_predict(&r, &e.timing);
                record = Some(r);
            })?;
            outcome.prediction = record.map(|r| (r, entry.timing));
        }
        Ok(outcome)
    }

    pub fn push_sample<K: Clock + ?Sized>(&mut self, sample: SensorSample, clock: &K) -> Result<PushOutcome, PipelineError> {
        self.push_sample_with(sample, clock, |_, _| {})
    }
}

/// Normalized, labeled vectors of a sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub examples: Vec<Example>,
    pub window_indices: Vec<u64>,
    pub registry: LabelRegistry,
    /// Complete windows without a label; not part of `examples`.
    pub unlabeled_windows: usize,
}

/// Windows, extracts and normalizes a whole stream the same way
/// [`Pipeline`] does, registering labels in order of first sight.
pub fn featurize<I>(samples: I, window: WindowConfig, features: &FeatureConfig, stage: NormalizeStage) -> Result<Featurized, WindowError>
where
    I: IntoIterator<Item = SensorSample>,
{
    let mut pre = Preprocessor::new(window, *features, stage);
    let mut registry = LabelRegistry::new();
    let mut out = Featurized {
        examples: Vec::new(),
        window_indices: Vec::new(),
        registry: LabelRegistry::new(),
        unlabeled_windows: 0,
    };
    for s in samples {
        if let Some(l) = &s.label {
            registry.intern(l);
        }
        if let Some(fv) = pre.push(s)?.vector {
            let x = fv.values;
            match fv.label.as_deref().and_then(|l| registry.id_of(l)) {
                Some(y) => {
                    out.examples.push(Example { x, y });
                    out.window_indices.push(fv.window_index);
                }
                None => out.unlabeled_windows += 1,
            }
        }
    }
    out.registry = registry;
    Ok(out)
}
