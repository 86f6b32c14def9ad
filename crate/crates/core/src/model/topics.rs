use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{SeedAssignment, TopicDistributions};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// The `n` most probable words of `topic`, ties broken lexicographically.
/// `n` larger than the vocabulary is clamped.
pub fn top_words(
    dists: &TopicDistributions,
    vocab: &Vocabulary,
    topic: usize,
    n: usize,
) -> Result<Vec<(String, f64)>> {
    if topic >= dists.num_topics() {
        return Err(Error::Config(format!(
            "topic {topic} out of range for {} topics",
            dists.num_topics()
        )));
    }
    if n == 0 {
        return Err(Error::Config("top-word count must be at least 1".into()));
    }
    if vocab.len() != dists.vocab_size() {
        return Err(Error::Config(format!(
            "vocabulary has {} words but the model has {}",
            vocab.len(),
            dists.vocab_size()
        )));
    }
    if n > vocab.len() {
        log::warn!("asked for {n} top words but the vocabulary has {}", vocab.len());
    }
    let row = dists.phi.row(topic);
    let mut ranked: Vec<(&str, f64)> = vocab
        .tokens()
        .iter()
        .map(String::as_str)
        .zip(row.iter().copied())
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    ranked.truncate(n);
    Ok(ranked.into_iter().map(|(w, p)| (w.to_string(), p)).collect())
}

/// Seeded topics having at least `m` of their own seed words among their
/// top `n` words. Unseeded topics are never retained.
pub fn dominant_symptom_filter(
    dists: &TopicDistributions,
    vocab: &Vocabulary,
    seeds: &SeedAssignment,
    m: usize,
    n: usize,
) -> Result<BTreeSet<usize>> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let mut kept = BTreeSet::new();
    for topic in 0..dists.num_topics() {
        let hits = top_words(dists, vocab, topic, n)?
            .iter()
            .filter(|(w, _)| {
                vocab
                    .id(w)
                    .and_then(|id| seeds.topic_of(id))
                    .is_some_and(|t| t == topic)
            })
            .count();
        if hits >= m {
            kept.insert(topic);
        }
    }
    Ok(kept)
}
