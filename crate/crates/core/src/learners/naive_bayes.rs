use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use super::{check_dims, LearnError, OnlineClassifier, Prediction};
use crate::label::ClassId;

/// Weighted running mean/variance (West's incremental update).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
struct WeightedMoments {
    weight: f64,
    mean: f64,
    m2: f64,
}

impl WeightedMoments {
    fn update(&mut self, x: f64, w: f64) {
        self.weight += w;
        let delta = x - self.mean;
        self.mean += delta * w / self.weight;
        self.m2 += w * delta * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.weight > 0.0 {
            libm::fmax(self.m2 / self.weight, 0.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassStats {
    weight: f64,
    moments: Vec<WeightedMoments>,
}

/// Gaussian naive Bayes with per-class, per-dimension running moments.
///
/// Likelihoods are evaluated in log space with variances floored at
/// `var_floor`; scores are the normalized posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    dims: usize,
    var_floor: f64,
    classes: Vec<Option<ClassStats>>,
    total_weight: f64,
    seen: u64,
}

impl GaussianNb {
    pub fn new(dims: usize, var_floor: f64) -> Self {
        Self {
            dims,
            var_floor,
            classes: Vec::new(),
            total_weight: 0.0,
            seen: 0,
        }
    }

    /// Learns `x` with importance weight `w > 0`.
    pub fn learn_weighted(&mut self, x: &[f64], y: ClassId, w: f64) -> Result<(), LearnError> {
        check_dims(self.dims, x)?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(LearnError::Domain("example weight must be positive"));
        }
        if self.classes.len() <= y {
            self.classes.resize(y + 1, None);
        }
        let dims = self.dims;
        let stats = self.classes[y].get_or_insert_with(|| ClassStats {
            weight: 0.0,
            moments: vec![WeightedMoments::default(); dims],
        });
        stats.weight += w;
        for (m, &v) in stats.moments.iter_mut().zip(x) {
            m.update(v, w);
        }
        self.total_weight += w;
        self.seen += 1;
        Ok(())
    }

    /// Prior weight of each class id; zero for ids never learned.
    pub fn class_weights(&self) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| c.as_ref().map_or(0.0, |s| s.weight))
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Unnormalized log joint `ln P(c) + Σ ln N(x_d; μ, σ²)` per class.
    pub fn log_joint(&self, x: &[f64]) -> Vec<Option<f64>> {
        self.classes
            .iter()
            .map(|c| {
                c.as_ref().map(|s| {
                    let mut lp = libm::log(s.weight / self.total_weight);
                    for (m, &v) in s.moments.iter().zip(x) {
                        let var = libm::fmax(m.variance(), self.var_floor);
                        let d = v - m.mean;
                        lp -= 0.5 * libm::log(2.0 * PI * var) + d * d / (2.0 * var);
                    }
                    lp
                })
            })
            .collect()
    }
}

impl OnlineClassifier for GaussianNb {
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        check_dims(self.dims, x)?;
        if self.seen == 0 {
            return Ok(None);
        }
        let joint = self.log_joint(x);
        let max = joint
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, libm::fmax);
        let mut scores: Vec<f64> = joint
            .iter()
            .map(|lp| lp.map_or(0.0, |lp| libm::exp(lp - max)))
            .collect();
        super::normalize_scores(&mut scores);
        Ok(Prediction::from_scores(scores))
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
    fn one_active_dimension() {
        let mut nb = GaussianNb::new(3, 1e-9);
        for v in [0.0, 0.5, -0.5] {
            nb.learn(&[v, 0.0, 0.0], 0).unwrap();
        }
        for v in [10.0, 10.5, 9.5] {
            nb.learn(&[v, 0.0, 0.0], 1).unwrap();
        }
        let p = nb.predict(&[1.0, 0.0, 0.0]).unwrap().unwrap();
        assert_eq!(p.label, 0);
        assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_example_predicts_its_label() {
        let mut nb = GaussianNb::new(2, 1e-9);
        nb.learn(&[3.0, -1.0], 2).unwrap();
        let p = nb.predict(&[3.0, -1.0]).unwrap().unwrap();
        assert_eq!(p.label, 2);
        assert_eq!(p.scores, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn weighted_matches_replicated() {
        let mut a = GaussianNb::new(1, 1e-9);
        let mut b = GaussianNb::new(1, 1e-9);
        a.learn_weighted(&[1.0], 0, 2.0).unwrap();
        a.learn_weighted(&[4.0], 0, 1.0).unwrap();
        b.learn(&[1.0], 0).unwrap();
        b.learn(&[1.0], 0).unwrap();
        b.learn(&[4.0], 0).unwrap();
        let (ma, mb) = (a.classes[0].as_ref().unwrap().moments[0], b.classes[0].as_ref().unwrap().moments[0]);
        assert!((ma.mean - mb.mean).abs() < 1e-12);
        assert!((ma.variance() - mb.variance()).abs() < 1e-12);
        assert!(a.learn_weighted(&[1.0], 0, 0.0).is_err());
    }
}
