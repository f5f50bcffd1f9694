use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{check_dims, LearnError, OnlineClassifier, Prediction};
use crate::label::ClassId;

/// k-nearest neighbours over a FIFO window of recent examples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncrementalKnn {
    dims: usize,
    k: usize,
    capacity: Option<usize>,
    memory: VecDeque<(Vec<f64>, ClassId)>,
    seen: u64,
}

impl IncrementalKnn {
    /// `capacity = None` keeps every example.
    pub fn new(dims: usize, k: usize, capacity: Option<usize>) -> Self {
        assert!(k >= 1, "k must be at least 1");
        assert!(capacity != Some(0), "memory capacity must be positive");
        Self {
            dims,
            k,
            capacity,
            memory: VecDeque::new(),
            seen: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.memory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memory.is_empty()
    }

    pub fn memory(&self) -> impl Iterator<Item = (&[f64], ClassId)> {
        self.memory.iter().map(|(v, c)| (v.as_slice(), *c))
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

impl OnlineClassifier for IncrementalKnn {
    /// Majority vote among the `k` nearest stored vectors (k capped at the
    /// memory size). Vote ties go to the class with the smaller summed
    /// distance, then to the smaller class id. Scores are vote fractions.
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        check_dims(self.dims, x)?;
        if self.memory.is_empty() {
            return Ok(None);
        }
        let mut dists: Vec<(f64, ClassId)> =
            self.memory.iter().map(|(v, c)| (euclidean(v, x), *c)).collect();
        // stable: equal distances keep the older example first
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        let k = self.k.min(dists.len());
        let n_classes = self.memory.iter().map(|(_, c)| c + 1).max().unwrap_or(0);
        let mut votes = vec![0usize; n_classes];
        let mut dist_sum = vec![0.0f64; n_classes];
        for &(d, c) in &dists[..k] {
            votes[c] += 1;
            dist_sum[c] += d;
        }
        let mut best = 0;
        for c in 1..n_classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && dist_sum[c] < dist_sum[best]) {
                best = c;
            }
        }
        let scores = votes.iter().map(|&v| v as f64 / k as f64).collect();
        Ok(Some(Prediction { label: best, scores }))
    }

    fn learn(&mut self, x: &[f64], y: ClassId) -> Result<(), LearnError> {
        check_dims(self.dims, x)?;
        if let Some(cap) = self.capacity {
            while self.memory.len() >= cap {
                self.memory.pop_front();
            }
        }
        self.memory.push_back((x.to_vec(), y));
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_of_two() {
        let mut m = IncrementalKnn::new(2, 1, None);
        m.learn(&[0.0, 0.0], 0).unwrap();
        m.learn(&[5.0, 5.0], 1).unwrap();
        assert_eq!(m.predict(&[0.1, 0.0]).unwrap().unwrap().label, 0);
    }

    #[test]
    fn three_neighbour_vote() {
        let mut m = IncrementalKnn::new(2, 3, None);
        m.learn(&[0.0, 0.0], 0).unwrap();
        m.learn(&[0.0, 1.0], 0).unwrap();
        m.learn(&[5.0, 5.0], 1).unwrap();
        let p = m.predict(&[0.0, 0.5]).unwrap().unwrap();
        assert_eq!(p.label, 0);
        assert_eq!(p.scores, vec![2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn exact_match_wins_with_k1() {
        let mut m = IncrementalKnn::new(3, 1, None);
        m.learn(&[1.0, 2.0, 3.0], 4).unwrap();
        m.learn(&[1.0, 2.0, 3.5], 1).unwrap();
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]).unwrap().unwrap().label, 4);
    }

    #[test]
    fn k_capped_at_memory() {
        let mut m = IncrementalKnn::new(1, 50, None);
        m.learn(&[0.0], 0).unwrap();
        m.learn(&[1.0], 1).unwrap();
        m.learn(&[2.0], 1).unwrap();
        let p = m.predict(&[0.0]).unwrap().unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.scores, vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn vote_tie_broken_by_distance_sum() {
        let mut m = IncrementalKnn::new(1, 2, None);
        m.learn(&[-1.0], 0).unwrap();
        m.learn(&[0.5], 1).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap().unwrap().label, 1);
    }

    #[test]
    fn fifo_eviction_at_capacity() {
        let mut m = IncrementalKnn::new(1, 1, Some(3));
        for i in 0..4 {
            m.learn(&[i as f64], i).unwrap();
        }
        assert_eq!(m.len(), 3);
        let labels: Vec<_> = m.memory().map(|(_, c)| c).collect();
        assert_eq!(labels, vec![1, 2, 3]);
        assert_eq!(m.n_seen(), 4);
    }

    #[test]
    fn empty_memory_predicts_nothing() {
        let m = IncrementalKnn::new(2, 5, Some(10));
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), None);
        assert!(matches!(
            m.predict(&[0.0]),
            Err(LearnError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }
}
