//! Incremental classifiers sharing a learn-one / predict-one contract.
//!
//! All learners are class-incremental: a label id never seen before is
//! admitted on its first `learn` call. Argmax ties resolve to the smallest
//! class id everywhere.

mod boost;
mod forest;
mod hoeffding;
mod knn;
mod naive_bayes;
mod nse;

pub use boost::{oza_boost_update, BoostStage, OzaBoost};
pub use forest::{online_bagging_sample, OnlineForest};
pub use hoeffding::{hoeffding_bound, HoeffdingTree, TreeConfig};
pub use knn::IncrementalKnn;
pub use naive_bayes::GaussianNb;
pub use nse::{nse_member_weight, LearnNse, NseMember};

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::label::ClassId;

#[derive(Debug, Clone, PartialEq)]
pub enum LearnError {
    DimensionMismatch { expected: usize, got: usize },
    /// A parameter fell outside its mathematical domain.
    Domain(&'static str),
    EmptyChunk,
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} features, got {got}")
            }
            LearnError::Domain(what) => write!(f, "parameter out of domain: {what}"),
            LearnError::EmptyChunk => f.write_str("empty chunk"),
        }
    }
}

impl core::error::Error for LearnError {}

/// Predicted label with per-class scores indexed by class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassId,
    pub scores: Vec<f64>,
}

impl Prediction {
    /// Picks the highest score, smallest id on ties. `None` for empty scores.
    pub fn from_scores(scores: Vec<f64>) -> Option<Self> {
        argmax(&scores).map(|label| Prediction { label, scores })
    }
}

pub(crate) fn argmax(scores: &[f64]) -> Option<ClassId> {
    let mut best: Option<ClassId> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if s <= scores[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Scales non-negative scores to sum to 1; all-zero input is left untouched.
pub(crate) fn normalize_scores(scores: &mut [f64]) {
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
    }
}

pub(crate) fn check_dims(expected: usize, x: &[f64]) -> Result<(), LearnError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(LearnError::DimensionMismatch {
            expected,
            got: x.len(),
        })
    }
}

pub trait OnlineClassifier {
    /// Side-effect free. `Ok(None)` until the model can make a prediction.
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError>;

    /// Folds one labeled example into the model.
    fn learn(&mut self, x: &[f64], y: ClassId) -> Result<(), LearnError>;

    /// Number of `learn` calls so far.
    fn n_seen(&self) -> u64;

    fn dims(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Iknn,
    Idt,
    Irf,
    Iadaboost,
    Inb,
    Nse,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Iknn,
        Algorithm::Idt,
        Algorithm::Irf,
        Algorithm::Iadaboost,
        Algorithm::Inb,
        Algorithm::Nse,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Iknn => "iknn",
            Algorithm::Idt => "idt",
            Algorithm::Irf => "irf",
            Algorithm::Iadaboost => "iadaboost",
            Algorithm::Inb => "inb",
            Algorithm::Nse => "nse",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            Algorithm::Iknn => "IKNN",
            Algorithm::Idt => "IDT",
            Algorithm::Irf => "IRF",
            Algorithm::Iadaboost => "IAdaBoost",
            Algorithm::Inb => "INB",
            Algorithm::Nse => "Learn++.NSE",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownAlgorithm;

impl fmt::Display for UnknownAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown algorithm (expected iknn, idt, irf, iadaboost, inb or nse)")
    }
}

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "iknn" | "knn" => Algorithm::Iknn,
            "idt" | "dt" | "hoeffding" => Algorithm::Idt,
            "irf" | "rf" => Algorithm::Irf,
            "iadaboost" | "adaboost" => Algorithm::Iadaboost,
            "inb" | "nb" => Algorithm::Inb,
            "nse" | "learn++nse" | "learn++.nse" | "learnnse" => Algorithm::Nse,
            _ => return Err(UnknownAlgorithm),
        })
    }
}

/// Hyperparameters for every learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub knn_k: usize,
    /// `None` keeps every example.
    pub knn_capacity: Option<usize>,
    pub nb_var_floor: f64,
    pub tree: TreeConfig,
    pub forest_size: usize,
    /// `None` means `ceil(sqrt(dims))`.
    pub forest_subspace: Option<usize>,
    pub boost_stages: usize,
    pub nse_chunk: usize,
    pub nse_slope: f64,
    pub nse_crossover: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            knn_k: 5,
            knn_capacity: Some(2000),
            nb_var_floor: 1e-9,
            tree: TreeConfig::default(),
            forest_size: 10,
            forest_subspace: None,
            boost_stages: 10,
            nse_chunk: 20,
            nse_slope: 0.5,
            nse_crossover: 10.0,
        }
    }
}

/// Any of the six learners, dispatched statically. Serializable for snapshots.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "state", rename_all = "lowercase")]
pub enum Learner {
    Iknn(IncrementalKnn),
    Idt(HoeffdingTree),
    Irf(OnlineForest),
    Iadaboost(OzaBoost),
    Inb(GaussianNb),
    Nse(LearnNse),
}

impl Learner {
    pub fn new(algorithm: Algorithm, dims: usize, config: &LearnerConfig, seed: u64) -> Self {
        match algorithm {
            Algorithm::Iknn => Learner::Iknn(IncrementalKnn::new(dims, config.knn_k, config.knn_capacity)),
            Algorithm::Idt => Learner::Idt(HoeffdingTree::new(dims, config.tree.clone())),
            Algorithm::Irf => {
                let subspace = config
                    .forest_subspace
                    .unwrap_or_else(|| libm::ceil(libm::sqrt(dims as f64)) as usize);
                Learner::Irf(OnlineForest::new(
                    dims,
                    config.forest_size,
                    subspace,
                    config.tree.clone(),
                    seed,
                ))
            }
            Algorithm::Iadaboost => Learner::Iadaboost(OzaBoost::new(
                dims,
                config.boost_stages,
                config.nb_var_floor,
                seed,
            )),
            Algorithm::Inb => Learner::Inb(GaussianNb::new(dims, config.nb_var_floor)),
            Algorithm::Nse => Learner::Nse(LearnNse::new(
                dims,
                config.nse_chunk,
                config.nse_slope,
                config.nse_crossover,
                config.nb_var_floor,
            )),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Learner::Iknn(_) => Algorithm::Iknn,
            Learner::Idt(_) => Algorithm::Idt,
            Learner::Irf(_) => Algorithm::Irf,
            Learner::Iadaboost(_) => Algorithm::Iadaboost,
            Learner::Inb(_) => Algorithm::Inb,
            Learner::Nse(_) => Algorithm::Nse,
        }
    }

    fn inner(&self) -> &dyn OnlineClassifier {
        match self {
            Learner::Iknn(m) => m,
            Learner::Idt(m) => m,
            Learner::Irf(m) => m,
            Learner::Iadaboost(m) => m,
            Learner::Inb(m) => m,
            Learner::Nse(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn OnlineClassifier {
        match self {
            Learner::Iknn(m) => m,
            Learner::Idt(m) => m,
            Learner::Irf(m) => m,
            Learner::Iadaboost(m) => m,
            Learner::Inb(m) => m,
            Learner::Nse(m) => m,
        }
    }
}

impl OnlineClassifier for Learner {
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        self.inner().predict(x)
    }

    fn learn(&mut self, x: &[f64], y: ClassId) -> Result<(), LearnError> {
        self.inner_mut().learn(x, y)
    }

    fn n_seen(&self) -> u64 {
        self.inner().n_seen()
    }

    fn dims(&self) -> usize {
        self.inner().dims()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_smallest_id() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), Some(1));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[0.0, 0.0]), Some(0));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>(), Ok(a));
        }
        assert!("svm".parse::<Algorithm>().is_err());
    }
}
