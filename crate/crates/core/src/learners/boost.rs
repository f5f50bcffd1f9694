use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, normalize_scores, online_bagging_sample, GaussianNb, LearnError, OnlineClassifier, Prediction};
use crate::label::ClassId;

/// Stage errors are clamped into `[ERROR_CLIP, 1 - ERROR_CLIP]` before
/// taking the log-odds voting weight.
const ERROR_CLIP: f64 = 1e-6;

/// One boosting stage: a base model plus the λ mass it classified correctly
/// (`lambda_correct`) and incorrectly (`lambda_wrong`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub model: GaussianNb,
    pub lambda_correct: f64,
    pub lambda_wrong: f64,
}

impl BoostStage {
    pub fn new(dims: usize, var_floor: f64) -> Self {
        Self {
            model: GaussianNb::new(dims, var_floor),
            lambda_correct: 0.0,
            lambda_wrong: 0.0,
        }
    }

    /// Weighted error `λ_sw / (λ_sc + λ_sw)`; `None` before any update.
    pub fn error(&self) -> Option<f64> {
        let total = self.lambda_correct + self.lambda_wrong;
        (total > 0.0).then(|| self.lambda_wrong / total)
    }

    /// `ln((1-ε)/ε)` with ε clipped; never negative.
    pub fn voting_weight(&self) -> f64 {
        match self.error() {
            None => 0.0,
            Some(e) => {
                let e = e.clamp(ERROR_CLIP, 1.0 - ERROR_CLIP);
                libm::fmax(libm::log((1.0 - e) / e), 0.0)
            }
        }
    }

    /// Trains the base model `copies` times on `(x, y)`, scores it on the
    /// same example and returns the example's weight for the next stage.
    pub fn update(&mut self, x: &[f64], y: ClassId, lambda: f64, copies: u64) -> Result<f64, LearnError> {
        for _ in 0..copies {
            self.model.learn(x, y)?;
        }
        let correct = self.model.predict(x)?.is_some_and(|p| p.label == y);
        let total = self.lambda_correct + self.lambda_wrong + lambda;
        if correct {
            self.lambda_correct += lambda;
            Ok(lambda * total / (2.0 * self.lambda_correct))
        } else {
            self.lambda_wrong += lambda;
            Ok(lambda * total / (2.0 * self.lambda_wrong))
        }
    }
}

/// Runs one example through every stage in order, starting from λ = 1.
pub fn oza_boost_update<R: Rng + ?Sized>(
    stages: &mut [BoostStage],
    x: &[f64],
    y: ClassId,
    rng: &mut R,
) -> Result<(), LearnError> {
    let mut lambda = 1.0;
    for stage in stages {
        let copies = online_bagging_sample(lambda, rng);
        lambda = stage.update(x, y, lambda, copies)?;
    }
    Ok(())
}

/// Online AdaBoost with Gaussian naive Bayes base learners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OzaBoost {
    dims: usize,
    stages: Vec<BoostStage>,
    rng: ChaCha8Rng,
    class_totals: Vec<f64>,
    seen: u64,
}

impl OzaBoost {
    pub fn new(dims: usize, n_stages: usize, var_floor: f64, seed: u64) -> Self {
        assert!(n_stages >= 1, "boosting needs at least one stage");
        Self {
            dims,
            stages: (0..n_stages).map(|_| BoostStage::new(dims, var_floor)).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            class_totals: Vec::new(),
            seen: 0,
        }
    }

    pub fn stages(&self) -> &[BoostStage] {
        &self.stages
    }
}

impl OnlineClassifier for OzaBoost {
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        check_dims(self.dims, x)?;
        if self.seen == 0 {
            return Ok(None);
        }
        let mut scores = alloc::vec![0.0; self.class_totals.len()];
        for stage in &self.stages {
            let w = stage.voting_weight();
            if w <= 0.0 {
                continue;
            }
            if let Some(p) = stage.model.predict(x)? {
                scores[p.label] += w;
            }
        }
        if scores.iter().all(|&s| s == 0.0) {
            scores.clone_from(&self.class_totals);
        }
        normalize_scores(&mut scores);
        Ok(Prediction::from_scores(scores))
    }

    fn learn(&mut self, x: &[f64], y: ClassId) -> Result<(), LearnError> {
        check_dims(self.dims, x)?;
        if self.class_totals.len() <= y {
            self.class_totals.resize(y + 1, 0.0);
        }
        self.class_totals[y] += 1.0;
        oza_boost_update(&mut self.stages, x, y, &mut self.rng)?;
        self.seen += 1;
        Ok(())
    }

    fn n_seen(&self) -> u64 {
        self.seen
    }

    fn dims(&self) -> usize {
        self.dims
    }
}
