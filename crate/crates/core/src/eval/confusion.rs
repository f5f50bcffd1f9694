use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::label::ClassId;

/// Counts indexed by (true class, predicted class). Absent predictions are
/// kept in a separate per-class `none` column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    none: Vec<u64>,
    total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassId,
    /// Windows whose true label is this class.
    pub support: u64,
    /// Windows predicted as this class.
    pub predicted: u64,
    pub true_positives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    fn grow(&mut self, n: usize) {
        if self.counts.len() < n {
            for row in &mut self.counts {
                row.resize(n, 0);
            }
            self.counts.resize(n, vec![0; n]);
            self.none.resize(n, 0);
        }
    }

    pub fn record(&mut self, truth: ClassId, predicted: Option<ClassId>) {
        self.grow(truth.max(predicted.unwrap_or(0)) + 1);
        match predicted {
            Some(p) => self.counts[truth][p] += 1,
            None => self.none[truth] += 1,
        }
        self.total += 1;
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, truth: ClassId, predicted: ClassId) -> u64 {
        self.counts.get(truth).and_then(|r| r.get(predicted)).copied().unwrap_or(0)
    }

    pub fn none_count(&self, truth: ClassId) -> u64 {
        self.none.get(truth).copied().unwrap_or(0)
    }

    pub fn total_none(&self) -> u64 {
        self.none.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|c| self.counts[c][c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total)
    }

    pub fn per_class(&self) -> Vec<ClassMetrics> {
        let n = self.counts.len();
        (0..n)
            .map(|c| {
                let support = self.counts[c].iter().sum::<u64>() + self.none[c];
                let predicted = (0..n).map(|t| self.counts[t][c]).sum::<u64>();
                let tp = self.counts[c][c];
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassMetrics {
                    class: c,
                    support,
                    predicted,
                    true_positives: tp,
                    precision,
                    recall,
                    f1,
                }
            })
            .collect()
    }

    /// Unweighted means over classes that occur as a true label.
    pub fn macro_metrics(&self) -> MacroMetrics {
        let classes: Vec<ClassMetrics> = self.per_class().into_iter().filter(|c| c.support > 0).collect();
        if classes.is_empty() {
            return MacroMetrics::default();
        }
        let k = classes.len() as f64;
        MacroMetrics {
            precision: classes.iter().map(|c| c.precision).sum::<f64>() / k,
            recall: classes.iter().map(|c| c.recall).sum::<f64>() / k,
            f1: classes.iter().map(|c| c.f1).sum::<f64>() / k,
        }
    }
}
