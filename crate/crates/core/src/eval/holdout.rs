use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, EvalError, Example, MacroMetrics};
use crate::learners::OnlineClassifier;

/// Frozen-model scores after batch-style training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub epochs: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_macro: MacroMetrics,
    pub test_confusion: ConfusionMatrix,
}

/// Stratified seeded split. Each class contributes `round(n_c * test_fraction)`
/// examples to the test side, at least one when it has two or more. Both
/// halves keep the input order.
pub fn stratified_split(data: &[Example], test_fraction: f64, seed: u64) -> (Vec<Example>, Vec<Example>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = data.iter().map(|e| e.y + 1).max().unwrap_or(0);
    let mut is_test = alloc::vec![false; data.len()];
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data[i].y == c).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let mut take = libm::round(idx.len() as f64 * test_fraction) as usize;
        if idx.len() >= 2 {
            take = take.clamp(1, idx.len() - 1);
        } else {
            take = 0;
        }
        for &i in &idx[..take] {
            is_test[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (e, t) in data.iter().zip(is_test) {
        if t {
            test.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    (train, test)
}

fn score<M: OnlineClassifier + ?Sized>(model: &M, data: &[Example]) -> Result<ConfusionMatrix, EvalError> {
    let mut cm = ConfusionMatrix::new();
    for e in data {
        cm.record(e.y, model.predict(&e.x)?.map(|p| p.label));
    }
    Ok(cm)
}

/// Streams the training set `epochs` times, reshuffled each epoch with a
/// seeded generator, then scores the frozen model on both splits.
pub fn run_batch_holdout<M: OnlineClassifier + ?Sized>(
    train: &[Example],
    test: &[Example],
    model: &mut M,
    epochs: usize,
    seed: u64,
) -> Result<HoldoutReport, EvalError> {
    if train.is_empty() || test.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    if epochs == 0 {
        return Err(EvalError::InvalidEpochs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            model.learn(&train[i].x, train[i].y)?;
        }
    }
    let train_cm = score(model, train)?;
    let test_cm = score(model, test)?;
    Ok(HoldoutReport {
        epochs,
        train_accuracy: train_cm.accuracy(),
        test_accuracy: test_cm.accuracy(),
        test_macro: test_cm.macro_metrics(),
        test_confusion: test_cm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{GaussianNb, IncrementalKnn};
    use alloc::vec;

    fn blobs() -> Vec<Example> {
        (0..60)
            .map(|i| {
                let y = i % 3;
                Example {
                    x: vec![y as f64 * 10.0 + (i % 5) as f64 * 0.1, (i % 4) as f64],
                    y,
                }
            })
            .collect()
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let data = blobs();
        let (train, test) = stratified_split(&data, 0.2, 9);
        assert_eq!(train.len() + test.len(), data.len());
        for c in 0..3 {
            assert_eq!(test.iter().filter(|e| e.y == c).count(), 4);
        }
        assert_eq!(stratified_split(&data, 0.2, 9), (train, test));
    }

    #[test]
    fn knn_recalls_training_point() {
        let data = blobs();
        let mut knn = IncrementalKnn::new(2, 1, None);
        let r = run_batch_holdout(&data, &data[..1], &mut knn, 1, 0).unwrap();
        assert_eq!(r.test_accuracy, 1.0);
    }

    #[test]
    fn errors_on_bad_input() {
        let data = blobs();
        let mut nb = GaussianNb::new(2, 1e-9);
        assert_eq!(run_batch_holdout(&[], &data, &mut nb, 1, 0), Err(EvalError::EmptySplit));
        assert_eq!(run_batch_holdout(&data, &data, &mut nb, 0, 0), Err(EvalError::InvalidEpochs));
    }
}
