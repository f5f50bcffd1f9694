//! Online human activity recognition over 6-axis inertial streams.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the algorithmic
//! pipeline end to end:
//!
//! * [`window`] assembles tumbling windows from raw accelerometer/gyroscope samples,
//! * [`features`] turns a window into a 98-value feature vector and normalizes it online,
//! * [`learners`] holds six incremental classifiers behind one learn/predict contract,
//! * [`eval`] runs test-then-train (prequential) and batch-holdout evaluation,
//! * [`synth`] generates seeded synthetic activity streams,
//! * [`pipeline`] glues windowing, features and a learner into a per-session state machine.
//!
//! IO, file formats, the stream service and the CLI live in the `har` crate.

#![no_std]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod eval;
pub mod features;
pub mod label;
pub mod learners;
pub mod pipeline;
pub mod synth;
pub mod window;

pub use features::{FeatureConfig, FeatureVector, OnlineNormalizer, FEATURE_DIM};
pub use label::{ActivityLabel, ClassId, LabelRegistry};
pub use learners::{Algorithm, LearnError, Learner, LearnerConfig, OnlineClassifier, Prediction};
pub use eval::{Clock, NoClock};
pub use pipeline::{featurize, Featurized, NormalizeStage, Pipeline, PipelineConfig, PredictionRecord, Preprocessed, Preprocessor};
pub use window::{SensorSample, SensorWindow, WindowAssembler, WindowConfig};
