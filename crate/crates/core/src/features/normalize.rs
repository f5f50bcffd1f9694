use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Population variance, 0 before any update.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            libm::fmax(self.m2 / self.count as f64, 0.0)
        }
    }
}

/// Streaming per-dimension z-score normalizer.
///
/// Each call first folds the vector into the running statistics and then
/// standardizes it against the updated mean and population deviation.
/// Dimensions with zero deviation map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineNormalizer {
    stats: Vec<Welford>,
}

impl OnlineNormalizer {
    pub fn new(dims: usize) -> Self {
        Self {
            stats: vec![Welford::default(); dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.stats.len()
    }

    pub fn stats(&self) -> &[Welford] {
        &self.stats
    }

    /// # Panics
    /// If `values.len()` differs from the configured dimension.
    pub fn normalize(&mut self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.stats.len(), "normalizer dimension mismatch");
        self.stats
            .iter_mut()
            .zip(values)
            .map(|(w, &x)| {
                w.update(x);
                let sd = libm::sqrt(w.variance());
                if sd > 0.0 {
                    (x - w.mean) / sd
                } else {
                    0.0
                }
            })
            .collect()
    }
}
