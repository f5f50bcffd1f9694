//! Test-then-train and batch-holdout evaluation.

mod confusion;
mod holdout;
mod prequential;

pub use confusion::{ClassMetrics, ConfusionMatrix, MacroMetrics};
pub use holdout::{run_batch_holdout, stratified_split, HoldoutReport};
pub use prequential::{
    rolling_accuracy, run_prequential, switch_responses, time_per_sample, CurvePoint, EvalReport,
    Example, LogEntry, Prequential, SampleTiming, SwitchResponse,
};

use core::fmt;

use crate::learners::LearnError;

/// Monotonic time source in nanoseconds. The core crate has no clock of its
/// own; std callers supply one.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// A clock that never advances; timings come out as zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    EmptyStream,
    EmptySplit,
    InvalidEpochs,
    Learn(LearnError),
}

impl From<LearnError> for EvalError {
    fn from(e: LearnError) -> Self {
        EvalError::Learn(e)
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyStream => f.write_str("evaluation stream is empty"),
            EvalError::EmptySplit => f.write_str("train or test split is empty"),
            EvalError::InvalidEpochs => f.write_str("epochs must be at least 1"),
            EvalError::Learn(e) => write!(f, "learner error: {e}"),
        }
    }
}

impl core::error::Error for EvalError {}
