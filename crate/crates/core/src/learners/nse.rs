//! Learn++.NSE: a chunk-incremental ensemble for nonstationary streams.
//!
//! Every full chunk adds one base classifier. Members are weighted by the
//! log inverse of their sigmoid-averaged normalized error over their lifetime,
//! so classifiers that were accurate recently dominate the vote.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{check_dims, normalize_scores, GaussianNb, LearnError, OnlineClassifier, Prediction};
use crate::label::ClassId;

/// Lower clip for a member's chunk error so `ln(1/β)` stays finite.
const ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NseMember {
    pub model: GaussianNb,
    /// Chunk index (1-based) at which the member was created.
    pub born: u64,
    /// Normalized errors β, one per chunk since birth, oldest first.
    pub betas: Vec<f64>,
    pub weight: f64,
}

/// Sigmoid-averaged β over a member's lifetime and its voting weight.
///
/// `betas[j]` is the normalized error `j` chunks after the member's birth.
/// Returns `(β̄, ln(1/β̄))`.
pub fn nse_member_weight(betas: &[f64], slope: f64, crossover: f64) -> (f64, f64) {
    if betas.is_empty() {
        return (1.0, 0.0);
    }
    let omegas: Vec<f64> = (0..betas.len())
        .map(|age| 1.0 / (1.0 + libm::exp(-slope * (age as f64 - crossover))))
        .collect();
    let norm: f64 = omegas.iter().sum();
    let beta_bar: f64 = omegas.iter().zip(betas).map(|(w, b)| w / norm * b).sum();
    let beta_bar = beta_bar.clamp(f64::MIN_POSITIVE, 1.0);
    (beta_bar, libm::fmax(libm::log(1.0 / beta_bar), 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnNse {
    dims: usize,
    chunk_size: usize,
    slope: f64,
    crossover: f64,
    var_floor: f64,
    members: Vec<NseMember>,
    buffer: Vec<(Vec<f64>, ClassId)>,
    chunks: u64,
    class_totals: Vec<f64>,
    seen: u64,
}

impl LearnNse {
    pub fn new(dims: usize, chunk_size: usize, slope: f64, crossover: f64, var_floor: f64) -> Self {
        assert!(chunk_size >= 1, "chunk size must be positive");
        Self {
            dims,
            chunk_size,
            slope,
            crossover,
            var_floor,
            members: Vec::new(),
            buffer: Vec::new(),
            chunks: 0,
            class_totals: Vec::new(),
            seen: 0,
        }
    }

    pub fn members(&self) -> &[NseMember] {
        &self.members
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    fn ensemble_vote(&self, x: &[f64]) -> Result<Option<Vec<f64>>, LearnError> {
        if self.members.is_empty() {
            return Ok(None);
        }
        let mut scores = vec![0.0; self.class_totals.len()];
        let uniform = self.members.iter().all(|m| m.weight <= 0.0);
        for m in &self.members {
            if let Some(p) = m.model.predict(x)? {
                if scores.len() <= p.label {
                    scores.resize(p.label + 1, 0.0);
                }
                scores[p.label] += if uniform { 1.0 } else { m.weight };
            }
        }
        Ok(Some(scores))
    }

    fn ensemble_label(&self, x: &[f64]) -> Result<Option<ClassId>, LearnError> {
        Ok(self.ensemble_vote(x)?.and_then(|s| super::argmax(&s)))
    }

    fn weighted_error(model: &GaussianNb, chunk: &[(Vec<f64>, ClassId)], dist: &[f64]) -> Result<f64, LearnError> {
        let mut err = 0.0;
        for ((x, y), d) in chunk.iter().zip(dist) {
            if model.predict(x)?.is_none_or(|p| p.label != *y) {
                err += d;
            }
        }
        Ok(err)
    }

    /// Incorporates one chunk: reweights its instances by the current
    /// ensemble's mistakes, adds a member trained on it, re-scores every
    /// member and refreshes the voting weights.
    pub fn update_chunk(&mut self, chunk: &[(Vec<f64>, ClassId)]) -> Result<(), LearnError> {
        if chunk.is_empty() {
            return Err(LearnError::EmptyChunk);
        }
        for (x, _) in chunk {
            check_dims(self.dims, x)?;
        }
        self.chunks += 1;
        let m = chunk.len() as f64;

        // instance weights: ensemble mistakes count 1, hits count E
        let mut dist = vec![1.0 / m; chunk.len()];
        if !self.members.is_empty() {
            let mut hits = Vec::with_capacity(chunk.len());
            for (x, y) in chunk {
                hits.push(self.ensemble_label(x)? == Some(*y));
            }
            let err_rate = hits.iter().filter(|h| !**h).count() as f64 / m;
            for (d, hit) in dist.iter_mut().zip(&hits) {
                *d = if *hit { err_rate / m } else { 1.0 / m };
            }
            let total: f64 = dist.iter().sum();
            if total > 0.0 {
                dist.iter_mut().for_each(|d| *d /= total);
            } else {
                dist.iter_mut().for_each(|d| *d = 1.0 / m);
            }
        }

        let mut fresh = GaussianNb::new(self.dims, self.var_floor);
        for (x, y) in chunk {
            fresh.learn(x, *y)?;
        }
        let mut fresh_err = Self::weighted_error(&fresh, chunk, &dist)?;
        if fresh_err > 0.5 {
            let mut retrained = GaussianNb::new(self.dims, self.var_floor);
            for ((x, y), d) in chunk.iter().zip(&dist) {
                if *d > 0.0 {
                    retrained.learn_weighted(x, *y, d * m)?;
                }
            }
            fresh = retrained;
            fresh_err = Self::weighted_error(&fresh, chunk, &dist)?;
        }

        let mut errors = Vec::with_capacity(self.members.len() + 1);
        for member in &self.members {
            errors.push(Self::weighted_error(&member.model, chunk, &dist)?);
        }
        errors.push(fresh_err);
        self.members.push(NseMember {
            model: fresh,
            born: self.chunks,
            betas: Vec::new(),
            weight: 0.0,
        });

        for (member, err) in self.members.iter_mut().zip(errors) {
            let e = err.clamp(ERROR_FLOOR, 0.5);
            member.betas.push(e / (1.0 - e));
            member.weight = nse_member_weight(&member.betas, self.slope, self.crossover).1;
        }
        Ok(())
    }
}

impl OnlineClassifier for LearnNse {
    /// Weighted member vote. Before the first chunk completes, falls back to
    /// the most frequent label seen so far.
    fn predict(&self, x: &[f64]) -> Result<Option<Prediction>, LearnError> {
        check_dims(self.dims, x)?;
        if self.seen == 0 {
            return Ok(None);
        }
        let mut scores = match self.ensemble_vote(x)? {
            Some(s) if s.iter().any(|&v| v > 0.0) => s,
            _ => self.class_totals.clone(),
        };
        normalize_scores(&mut scores);
        Ok(Prediction::from_scores(scores))
    }

    fn learn(&mut self, x: &[f64], y: ClassId) -> Result<(), LearnError> {
        check_dims(self.dims, x)?;
        if self.class_totals.len() <= y {
            self.class_totals.resize(y + 1, 0.0);
        }
        self.class_totals[y] += 1.0;
        self.buffer.push((x.to_vec(), y));
        self.seen += 1;
        if self.buffer.len() >= self.chunk_size {
            let chunk = core::mem::take(&mut self.buffer);
            self.update_chunk(&chunk)?;
        }
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
    fn singleton_weight_is_log_nine() {
        let beta = 0.1 / 0.9;
        let (bar, w) = nse_member_weight(&[beta], 0.5, 10.0);
        assert!((bar - 1.0 / 9.0).abs() < 1e-12);
        assert!((w - 9f64.ln()).abs() < 1e-9);
        assert!((w - 2.197225).abs() < 1e-6);
    }

    #[test]
    fn chunk_boundary_triggers_update() {
        let mut nse = LearnNse::new(1, 3, 0.5, 10.0, 1e-9);
        nse.learn(&[0.0], 0).unwrap();
        nse.learn(&[1.0], 1).unwrap();
        assert_eq!(nse.buffered(), 2);
        assert!(nse.members().is_empty());
        nse.learn(&[0.1], 0).unwrap();
        assert_eq!(nse.buffered(), 0);
        assert_eq!(nse.members().len(), 1);
    }

    #[test]
    fn empty_chunk_rejected() {
        let mut nse = LearnNse::new(1, 3, 0.5, 10.0, 1e-9);
        assert_eq!(nse.update_chunk(&[]), Err(LearnError::EmptyChunk));
    }

    #[test]
    fn lower_beta_member_wins_vote() {
        let mut a = GaussianNb::new(1, 1e-9);
        a.learn(&[0.0], 0).unwrap();
        let mut b = GaussianNb::new(1, 1e-9);
        b.learn(&[0.0], 1).unwrap();
        let mut nse = LearnNse::new(1, 5, 0.5, 10.0, 1e-9);
        nse.class_totals = vec![1.0, 1.0];
        nse.seen = 2;
        for (model, beta) in [(a, 1.0 / 9.0), (b, 1.0 / 3.0)] {
            let weight = nse_member_weight(&[beta], 0.5, 10.0).1;
            nse.members.push(NseMember {
                model,
                born: 1,
                betas: vec![beta],
                weight,
            });
        }
        assert_eq!(nse.predict(&[0.0]).unwrap().unwrap().label, 0);
    }

    #[test]
    fn weights_nonnegative_and_decay_with_error() {
        let (_, good) = nse_member_weight(&[0.05, 0.05, 0.05], 0.5, 10.0);
        let (_, bad) = nse_member_weight(&[0.05, 0.05, 1.0], 0.5, 10.0);
        assert!(good > bad && bad >= 0.0);
        let (_, chance) = nse_member_weight(&[1.0], 0.5, 10.0);
        assert_eq!(chance, 0.0);
    }
}
