use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{train, Matrix, ModelConfig, SeedAssignment, TopicDistributions};
use crate::corpus::BucketedCorpus;
use crate::error::{Error, Result};

/// Perplexities closer than this are treated as equal when choosing K.
pub const PERPLEXITY_TIE: f64 = 1e-12;

/// Fraction of buckets held out when selecting K.
pub const HELD_OUT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub perplexity: f64,
    pub tokens: usize,
    /// Held-out tokens dropped for lying outside the training vocabulary.
    pub oov: usize,
}

/// Estimate θ for unseen buckets by Gibbs sampling their topic assignments
/// against a fixed φ. Tokens with ids outside φ are skipped; seed words stay
/// pinned to their topic.
pub fn fold_in(
    phi: &Matrix,
    held_out: &BucketedCorpus,
    seeds: &SeedAssignment,
    alpha: f64,
    sweeps: usize,
    rng_seed: u64,
) -> Matrix {
    let (k, v) = (phi.rows(), phi.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut theta = Matrix::zeros(held_out.num_buckets(), k);
    let mut weights = vec![0.0; k];
    for (b, bucket) in held_out.buckets.iter().enumerate() {
        let words: Vec<u32> = bucket
            .token_ids
            .iter()
            .copied()
            .filter(|&w| (w as usize) < v)
            .collect();
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|&w| seeds.topic_of(w).unwrap_or_else(|| rng.gen_range(0..k)))
            .collect();
        z.iter().for_each(|&t| counts[t] += 1);
        for _ in 0..sweeps {
            for (i, &w) in words.iter().enumerate() {
                if seeds.topic_of(w).is_some() {
                    continue;
                }
                counts[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (counts[t] as f64 + alpha) * phi.get(t, w as usize);
                    weights[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let t = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                z[i] = t;
                counts[t] += 1;
            }
        }
        let denom = words.len() as f64 + k as f64 * alpha;
        for (t, x) in theta.row_mut(b).iter_mut().enumerate() {
            *x = (counts[t] as f64 + alpha) / denom;
        }
    }
    theta
}

/// `exp(-Σ log Σ_k θ[b][k] φ[k][w] / N)` over in-vocabulary tokens.
pub fn perplexity_given(
    theta: &Matrix,
    phi: &Matrix,
    buckets: &[Vec<u32>],
) -> Result<PerplexityReport> {
    let v = phi.cols();
    let mut log_lik = 0.0;
    let mut tokens = 0usize;
    let mut oov = 0usize;
    for (b, words) in buckets.iter().enumerate() {
        let row = theta.row(b);
        for &w in words {
            if w as usize >= v {
                oov += 1;
                continue;
            }
            let p: f64 = row
                .iter()
                .enumerate()
                .map(|(t, th)| th * phi.get(t, w as usize))
                .sum();
            log_lik += p.ln();
            tokens += 1;
        }
    }
    if tokens == 0 {
        return Err(Error::Empty("no held-out tokens within the training vocabulary"));
    }
    Ok(PerplexityReport {
        perplexity: (-log_lik / tokens as f64).exp(),
        tokens,
        oov,
    })
}

/// Held-out perplexity of a trained model by document completion: θ for
/// each held-out bucket is folded in (`cfg.fold_in_sweeps` sweeps) on its
/// even-position tokens and the odd-position tokens are scored.
pub fn perplexity(
    dists: &TopicDistributions,
    held_out: &BucketedCorpus,
    seeds: &SeedAssignment,
    cfg: &ModelConfig,
) -> Result<PerplexityReport> {
    let (observed, scored): (Vec<Vec<u32>>, Vec<Vec<u32>>) = held_out
        .buckets
        .iter()
        .map(|b| {
            let even = b.token_ids.iter().step_by(2).copied().collect();
            let odd = b.token_ids.iter().skip(1).step_by(2).copied().collect();
            (even, odd)
        })
        .unzip();
    let theta = fold_in(
        &dists.phi,
        &BucketedCorpus::from_token_ids(&held_out.subject_id, observed),
        seeds,
        cfg.alpha,
        cfg.fold_in_sweeps,
        cfg.rng_seed ^ 0x5eed_f01d,
    );
    perplexity_given(&theta, &dists.phi, &scored)
}

/// Deterministically shuffle the non-empty buckets and split them into
/// (train, held-out) positions, held-out taking `HELD_OUT_FRACTION`.
pub fn split_buckets(corpus: &BucketedCorpus, rng_seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut positions: Vec<usize> = (0..corpus.num_buckets())
        .filter(|&b| !corpus.buckets[b].token_ids.is_empty())
        .collect();
    if positions.len() < 2 {
        return Err(Error::Empty("need at least two non-empty buckets to hold some out"));
    }
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let held = ((positions.len() as f64 * HELD_OUT_FRACTION).round() as usize).max(1);
    let held_out = positions.split_off(positions.len() - held);
    positions.sort_unstable();
    let mut held_out = held_out;
    held_out.sort_unstable();
    Ok((positions, held_out))
}

/// Held-out perplexity for every K in `grid`, ascending by K.
pub fn select_k_scores(
    corpus: &BucketedCorpus,
    seeds: &SeedAssignment,
    cfg: &ModelConfig,
    grid: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if grid.is_empty() {
        return Err(Error::Config("empty topic-count grid".into()));
    }
    if let Some(&k) = grid.iter().find(|&&k| k < cfg.num_seeded) {
        return Err(Error::Config(format!(
            "topic count {k} is below the {} seeded topics",
            cfg.num_seeded
        )));
    }
    let (train_pos, test_pos) = split_buckets(corpus, cfg.rng_seed)?;
    let train_part = corpus.subset(&train_pos);
    let test_part = corpus.subset(&test_pos);
    let mut ks = grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let c = ModelConfig {
                num_topics: k,
                ..cfg.clone()
            };
            let (_, dists) = train(&train_part, seeds, &c)?;
            Ok((k, perplexity(&dists, &test_part, seeds, &c)?.perplexity))
        })
        .collect()
}

/// Lowest perplexity wins; near-ties go to the smaller K.
pub fn choose_k(scores: &[(usize, f64)]) -> Option<usize> {
    let mut sorted = scores.to_vec();
    sorted.sort_by_key(|&(k, _)| k);
    let mut best: Option<(usize, f64)> = None;
    for (k, p) in sorted {
        match best {
            Some((_, bp)) if p >= bp - PERPLEXITY_TIE => {}
            _ => best = Some((k, p)),
        }
    }
    best.map(|(k, _)| k)
}

/// Train on 80% of the buckets for each K and return the K with the lowest
/// held-out perplexity.
pub fn select_k(
    corpus: &BucketedCorpus,
    seeds: &SeedAssignment,
    cfg: &ModelConfig,
    grid: &[usize],
) -> Result<usize> {
    let scores = select_k_scores(corpus, seeds, cfg, grid)?;
    Ok(choose_k(&scores).expect("grid is non-empty"))
}
