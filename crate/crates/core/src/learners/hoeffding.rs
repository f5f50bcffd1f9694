//! Hoeffding tree (VFDT) with Gaussian numeric split estimation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
use serde::{Deserialize, Serialize};

use super::{check_dims, normalize_scores, LearnError, OnlineClassifier, Prediction};
use crate::label::ClassId;

/// Confidence radius `sqrt(R² ln(1/δ) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> Result<f64, LearnError> {
    if !(range > 0.0) || !range.is_finite() {
        return Err(LearnError::Domain("range must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LearnError::Domain("delta must lie in (0, 1)"));
    }
    if !(n >= 1.0) || !n.is_finite() {
        return Err(LearnError::Domain("n must be at least 1"));
    }
    Ok(libm::sqrt(range * range * libm::log(1.0 / delta) / (2.0 * n)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Split confidence δ.
    pub delta: f64,
    /// Weight a leaf must accumulate between split attempts.
    pub grace_period: f64,
    /// Split anyway once the bound falls below this.
    pub tie_threshold: f64,
    /// Candidate thresholds per numeric attribute.
    pub n_thresholds: usize,
    /// Each branch must receive at least this share of the leaf's weight.
    pub min_branch_fraction: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            delta: 1e-7,
            grace_period: 20.0,
            tie_threshold: 0.05,
            n_thresholds: 10,
            min_branch_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct GaussianEstimator {
    weight: f64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for GaussianEstimator {
    fn default() -> Self {
        Self {
            weight: 0.0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl GaussianEstimator {
    fn update(&mut self, x: f64, w: f64) {
        self.weight += w;
        let delta = x - self.mean;
        self.mean += delta * w / self.weight;
        self.m2 += w * delta * (x - self.mean);
        self.min = libm::fmin(self.min, x);
        self.max = libm::fmax(self.max, x);
    }

    /// Estimated weight of observations `<= t`.
    fn weight_at_or_below(&self, t: f64) -> f64 {
        if self.weight <= 0.0 || t < self.min {
            0.0
        } else if t >= self.max {
            self.weight
        } else {
            let sd = libm::sqrt(libm::fmax(self.m2 / self.weight, 0.0));
            if sd <= 0.0 {
                if self.mean <= t {
                    self.weight
                } else {
                    0.0
                }
            } else {
                let z = (t - self.mean) / sd;
                self.weight * 0.5 * libm::erfc(-z / SQRT_2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Leaf {
    class_weights: Vec<f64>,
    /// `[feature slot][class]`
    observers: Vec<Vec<GaussianEstimator>>,
    weight_at_last_attempt: f64,
}

impl Leaf {
    fn new(slots: usize, class_weights: Vec<f64>) -> Self {
        let start = class_weights.iter().sum();
        Self {
            class_weights,
            observers: vec![Vec::new(); slots],
            weight_at_last_attempt: start,
        }
    }

    fn total(&self) -> f64 {
        self.class_weights.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Leaf),
    Split {
        dim: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct SplitCandidate {
    slot: usize,
    threshold: f64,
    merit: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Incremental decision tree with majority-class leaves.
///
/// Only the dimensions listed in `features` are considered for splits; the
/// plain tree uses all of them, forest members a random subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    dims: usize,
    features: Vec<usize>,
    config: TreeConfig,
    nodes: Vec<Node>,
    class_totals: Vec<f64>,
    seen: u64,
}

impl HoeffdingTree {
    pub fn new(dims: usize, config: TreeConfig) -> Self {
        Self::with_features(dims, (0..dims).collect(), config)
    }

    pub fn with_features(dims: usize, features: Vec<usize>, config: TreeConfig) -> Self {
        assert!(features.iter().all(|&f| f < dims), "feature index out of range");
        let slots = features.len();
        Self {
            dims,
            features,
            config,
            nodes: vec![Node::Leaf(Leaf::new(slots, Vec::new()))],
            class_totals: Vec::new(),
            seen: 0,
        }
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return i,
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => i = if x[*dim] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Class distribution at the leaf reached by `x`, normalized to sum 1.
    /// Falls back to the tree-wide class totals when the leaf is empty.
    pub fn distribution(&self, x: &[f64]) -> Vec<f64> {
        let Node::Leaf(leaf) = &self.nodes[self.leaf_index(x)] else {
            unreachable!()
        };
        let mut scores = if leaf.total() > 0.0 {
            leaf.class_weights.clone()
        } else {
            self.class_totals.clone()
        };
        normalize_scores(&mut scores);
        scores
    }

    pub fn learn_weighted(&mut self, x: &[f64], y: ClassId, w: f64) -> Result<(), LearnError> {
        check_dims(self.dims, x)?;
        if self.class_totals.len() <= y {
            self.class_totals.resize(y + 1, 0.0);
        }
        self.class_totals[y] += w;
        let idx = self.leaf_index(x);
        let Node::Leaf(leaf) = &mut self.nodes[idx] else {
            unreachable!()
        };
        if leaf.class_weights.len() <= y {
            leaf.class_weights.resize(y + 1, 0.0);
        }
        leaf.class_weights[y] += w;
        for (slot, &dim) in self.features.iter().enumerate() {
            let obs = &mut leaf.observers[slot];
            if obs.len() <= y {
                obs.resize(y + 1, GaussianEstimator::default());
            }
            obs[y].update(x[dim], w);
        }
        let total = leaf.total();
        let pure = leaf.class_weights.iter().filter(|&&c| c > 0.0).count() < 2;
        if !pure && total - leaf.weight_at_last_attempt >= self.config.grace_period {
            leaf.weight_at_last_attempt = total;
            self.attempt_split(idx);
        }
        self.seen += 1;
        Ok(())
    }

    fn attempt_split(&mut self, idx: usize) {
        let Node::Leaf(leaf) = &self.nodes[idx] else {
            return;
        };
        let total = leaf.total();
        let parent_entropy = entropy(&leaf.class_weights);
        let n_classes = leaf.class_weights.iter().filter(|&&c| c > 0.0).count();

        let mut best_per_slot: Vec<SplitCandidate> = Vec::new();
        for (slot, obs) in leaf.observers.iter().enumerate() {
            if let Some(c) = self.best_threshold(slot, obs, total, parent_entropy) {
                best_per_slot.push(c);
            }
        }
        if best_per_slot.is_empty() {
            return;
        }
        best_per_slot.sort_by(|a, b| b.merit.total_cmp(&a.merit).then(a.slot.cmp(&b.slot)));
        let best_merit = best_per_slot[0].merit;
        // the "no split" option has merit 0
        let second = best_per_slot.get(1).map_or(0.0, |c| c.merit).max(0.0);
        let range = libm::log2(n_classes.max(2) as f64);
        let Ok(eps) = hoeffding_bound(range, self.config.delta, total) else {
            return;
        };
        if best_merit > 0.0 && (best_merit - second > eps || eps < self.config.tie_threshold) {
            let best = best_per_slot.swap_remove(0);
            let slots = self.features.len();
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf(Leaf::new(slots, best.left)));
            self.nodes.push(Node::Leaf(Leaf::new(slots, best.right)));
            self.nodes[idx] = Node::Split {
                dim: self.features[best.slot],
                threshold: best.threshold,
                left,
                right: left + 1,
            };
        }
    }

    fn best_threshold(
        &self,
        slot: usize,
        obs: &[GaussianEstimator],
        total: f64,
        parent_entropy: f64,
    ) -> Option<SplitCandidate> {
        let lo = obs.iter().filter(|e| e.weight > 0.0).map(|e| e.min).fold(f64::INFINITY, libm::fmin);
        let hi = obs.iter().filter(|e| e.weight > 0.0).map(|e| e.max).fold(f64::NEG_INFINITY, libm::fmax);
        if !(hi > lo) {
            return None;
        }
        let n = self.config.n_thresholds;
        let mut best: Option<SplitCandidate> = None;
        for i in 1..=n {
            let t = lo + (hi - lo) * i as f64 / (n + 1) as f64;
            let left: Vec<f64> = obs.iter().map(|e| e.weight_at_or_below(t)).collect();
            let right: Vec<f64> = obs.iter().zip(&left).map(|(e, l)| libm::fmax(e.weight - l, 0.0)).collect();
            let (wl, wr): (f64, f64) = (left.iter().sum(), right.iter().sum());
            let min_branch = self.config.min_branch_fraction * total;
            if wl < min_branch || wr < min_branch {
                continue;
            }
            let merit = parent_entropy - (wl * entropy(&left) + wr * entropy(&right)) / (wl + wr);
            if best.as_ref().is_none_or(|b| merit > b.merit) {
                best = Some(SplitCandidate {
                    slot,
                    threshold: t,
                    merit,
                    left,
                    right,
                });
            }
        }
        best
    }
}

/// Shannon entropy in bits of an unnormalized distribution.
fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            p * libm::log2(p)
        })
        .sum::<f64>()
}

impl OnlineClassifier for HoeffdingTree {
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        check_dims(self.dims, x)?;
        if self.seen == 0 {
            return Ok(None);
        }
        Ok(Prediction::from_scores(self.distribution(x)))
    }

    fn learn(&mut self, x: &[f64], y: ClassId) -> Result<(), LearnError> {
        self.learn_weighted(x, y, 1.0)
    }

    fn n_seen(&self) -> u64 {
        self.seen
    }

    fn dims(&self) -> usize {
        self.dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_closed_form() {
        let e = hoeffding_bound(1.0, 1e-7, 1000.0).unwrap();
        assert!((e - 0.089_772).abs() < 1e-6, "{e}");
        let e4 = hoeffding_bound(1.0, 1e-7, 4000.0).unwrap();
        assert!((e4 * 2.0 - e).abs() < 1e-15);
        assert!(hoeffding_bound(0.0, 1e-7, 10.0).is_err());
        assert!(hoeffding_bound(1.0, 1.0, 10.0).is_err());
        assert!(hoeffding_bound(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn entropy_of_uniform_pair_is_one_bit() {
        assert!((entropy(&[3.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&[5.0, 0.0]), 0.0);
    }

    #[test]
    fn splits_on_separable_dimension() {
        let mut t = HoeffdingTree::new(2, TreeConfig::default());
        for i in 0..400 {
            let c = i % 2;
            let x0 = if c == 0 { -1.0 } else { 1.0 } + 0.01 * (i % 7) as f64;
            t.learn(&[x0, (i % 5) as f64], c).unwrap();
        }
        assert!(t.n_leaves() >= 2);
        assert_eq!(t.predict(&[-1.0, 2.0]).unwrap().unwrap().label, 0);
        assert_eq!(t.predict(&[1.0, 2.0]).unwrap().unwrap().label, 1);
    }

    #[test]
    fn pure_stream_never_splits() {
        let mut t = HoeffdingTree::new(3, TreeConfig::default());
        for i in 0..200 {
            t.learn(&[i as f64, 0.0, -(i as f64)], 3).unwrap();
        }
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[0.0; 3]).unwrap().unwrap().label, 3);
    }
}
