//! The seeded temporal topic model.
//!
//! Buckets play the role of documents in LDA. Tokens whose word is one of
//! the subject's seeds are pinned to the topic of the seed's symptom
//! (topics `0..num_seeded`), and never resampled. Remaining topics are
//! unseeded background topics. After sampling, the bucket/topic matrix is
//! masked and thresholded into per-bucket symptom labels.

mod checkpoint;
mod gibbs;
mod perplexity;
mod topics;
mod trend;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gibbs::{train, train_with_observer, GibbsSampler, ModelState, SeedAssignment};
pub use perplexity::{
    choose_k, fold_in, perplexity, perplexity_given, select_k, select_k_scores, split_buckets,
    PerplexityReport,
};
pub use topics::{dominant_symptom_filter, top_words};
pub use trend::{apply_masks, mask_and_label, seed_type_counts, TrendMatrix};

/// How θ and φ are read off the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimate {
    /// Counts after the last sweep only.
    FinalSample,
    /// Mean of the per-sweep estimates taken every `lag` sweeps after
    /// `burn_in` sweeps.
    Average { burn_in: usize, lag: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Total topic count K.
    pub num_topics: usize,
    /// Seeded topics; topic `s` belongs to symptom `S{s+1}`.
    pub num_seeded: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Gibbs sweeps.
    pub iterations: usize,
    pub rng_seed: u64,
    /// Minimum distinct seed words of a symptom a bucket must contain for
    /// that symptom to keep its probability.
    pub tau_count: usize,
    /// A masked probability strictly above this becomes a label.
    pub tau_prob: f64,
    pub estimate: Estimate,
    /// Sweeps used to fold held-out buckets in against a fixed φ.
    pub fold_in_sweeps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_topics: 15,
            num_seeded: 9,
            alpha: 0.5,
            beta: 0.1,
            iterations: 1000,
            rng_seed: 42,
            tau_count: 2,
            tau_prob: 0.2,
            estimate: Estimate::FinalSample,
            fold_in_sweeps: 100,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_topics == 0 {
            return fail("num_topics must be positive".into());
        }
        if self.num_seeded > crate::Symptom::COUNT {
            return fail(format!("at most 9 seeded topics, got {}", self.num_seeded));
        }
        if self.num_topics < self.num_seeded {
            return fail(format!(
                "num_topics ({}) is smaller than num_seeded ({})",
                self.num_topics, self.num_seeded
            ));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if !(self.tau_prob > 0.0 && self.tau_prob < 1.0) {
            return fail(format!("tau_prob must lie in (0, 1), got {}", self.tau_prob));
        }
        if self.tau_count == 0 {
            return fail("tau_count must be at least 1".into());
        }
        if let Estimate::Average { lag: 0, .. } = self.estimate {
            return fail("averaging lag must be at least 1".into());
        }
        if let Estimate::Average { burn_in, .. } = self.estimate {
            if burn_in >= self.iterations {
                return fail("burn_in leaves no sweeps to average".into());
            }
        }
        Ok(())
    }
}

/// Dense row-major matrix of probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |r| self.row(r))
    }
}

/// θ (bucket × topic) and φ (topic × word).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistributions {
    pub theta: Matrix,
    pub phi: Matrix,
}

impl TopicDistributions {
    pub fn num_topics(&self) -> usize {
        self.phi.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.num_topics, cfg.alpha, cfg.beta, cfg.iterations), (15, 0.5, 0.1, 1000));
    }

    #[test]
    fn invalid_configs() {
        let base = ModelConfig::default();
        let cases = [
            ModelConfig { num_topics: 8, ..base.clone() },
            ModelConfig { alpha: 0.0, ..base.clone() },
            ModelConfig { beta: -1.0, ..base.clone() },
            ModelConfig { iterations: 0, ..base.clone() },
            ModelConfig { tau_prob: 1.0, ..base.clone() },
            ModelConfig { tau_count: 0, ..base.clone() },
            ModelConfig { num_seeded: 10, num_topics: 20, ..base.clone() },
            ModelConfig { estimate: Estimate::Average { burn_in: 10, lag: 0 }, ..base.clone() },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn matrix_rows() {
        let mut m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.row(1), [3.0, 4.0]);
        m.set(0, 1, 5.0);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.iter_rows().count(), 2);
    }
}
