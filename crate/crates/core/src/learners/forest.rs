use alloc::vec::Vec;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{check_dims, normalize_scores, HoeffdingTree, LearnError, OnlineClassifier, Prediction, TreeConfig};
use crate::label::ClassId;

/// Poisson(λ) replication count for online bagging; 0 when `λ <= 0`.
pub fn online_bagging_sample<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return 0;
    }
    match Poisson::new(lambda) {
        Ok(p) => p.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// Online random forest: Hoeffding trees trained by Poisson(1) online
/// bagging, each restricted to a random feature subspace fixed at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnlineForest {
    dims: usize,
    trees: Vec<HoeffdingTree>,
    rng: ChaCha8Rng,
    class_totals: Vec<f64>,
    seen: u64,
}

impl OnlineForest {
    pub fn new(dims: usize, n_trees: usize, subspace: usize, config: TreeConfig, seed: u64) -> Self {
        assert!(n_trees >= 1, "forest needs at least one tree");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let subspace = subspace.clamp(1, dims.max(1));
        let trees = (0..n_trees)
            .map(|_| {
                let mut features = index::sample(&mut rng, dims, subspace).into_vec();
                features.sort_unstable();
                HoeffdingTree::with_features(dims, features, config.clone())
            })
            .collect();
        Self {
            dims,
            trees,
            rng,
            class_totals: Vec::new(),
            seen: 0,
        }
    }

    pub fn trees(&self) -> &[HoeffdingTree] {
        &self.trees
    }
}

impl OnlineClassifier for OnlineForest {
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        check_dims(self.dims, x)?;
        if self.seen == 0 {
            return Ok(None);
        }
        let mut scores = alloc::vec![0.0; self.class_totals.len()];
        let mut voters = 0;
        for tree in self.trees.iter().filter(|t| t.n_seen() > 0) {
            for (s, d) in scores.iter_mut().zip(tree.distribution(x)) {
                *s += d;
            }
            voters += 1;
        }
        if voters == 0 {
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
        for tree in &mut self.trees {
            let copies = online_bagging_sample(1.0, &mut self.rng);
            for _ in 0..copies {
                tree.learn(x, y)?;
            }
        }
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
