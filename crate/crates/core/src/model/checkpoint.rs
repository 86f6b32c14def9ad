use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Matrix, ModelConfig, TopicDistributions};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to redo post-processing (masking, labels, coherence)
/// without retraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub subject_id: String,
    pub config: ModelConfig,
    pub rng_seed: u64,
    pub vocabulary_fingerprint: String,
    pub vocabulary_size: usize,
    pub theta: Matrix,
    pub phi: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignments: Option<Vec<u32>>,
}

impl Checkpoint {
    pub fn new(
        subject_id: &str,
        config: &ModelConfig,
        vocab: &Vocabulary,
        dists: &TopicDistributions,
        assignments: Option<Vec<u32>>,
    ) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            subject_id: subject_id.to_string(),
            config: config.clone(),
            rng_seed: config.rng_seed,
            vocabulary_fingerprint: vocab.fingerprint(),
            vocabulary_size: vocab.len(),
            theta: dists.theta.clone(),
            phi: dists.phi.clone(),
            assignments,
        }
    }

    pub fn distributions(&self) -> TopicDistributions {
        TopicDistributions {
            theta: self.theta.clone(),
            phi: self.phi.clone(),
        }
    }

    /// Fails unless `vocab` is the vocabulary the model was trained with.
    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        if vocab.len() != self.vocabulary_size || vocab.fingerprint() != self.vocabulary_fingerprint
        {
            return Err(Error::Config(format!(
                "checkpoint for `{}` was trained with a different vocabulary",
                self.subject_id
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cp: Checkpoint = serde_json::from_str(&text)?;
        if cp.format_version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "checkpoint",
                format!("unsupported format version {}", cp.format_version),
            ));
        }
        Ok(cp)
    }
}
