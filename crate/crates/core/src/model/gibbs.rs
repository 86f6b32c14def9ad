use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Estimate, Matrix, ModelConfig, TopicDistributions};
use crate::corpus::{BucketedCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::lexicon::UserSeedSet;

const UNSEEDED: u32 = u32::MAX;

/// Word id -> forced topic over a vocabulary of fixed size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedAssignment {
    topic_of: Vec<u32>,
}

impl SeedAssignment {
    pub fn unseeded(vocab_size: usize) -> Self {
        SeedAssignment {
            topic_of: vec![UNSEEDED; vocab_size],
        }
    }

    pub fn from_pairs(
        vocab_size: usize,
        pairs: impl IntoIterator<Item = (u32, usize)>,
    ) -> Result<Self> {
        let mut s = Self::unseeded(vocab_size);
        for (w, k) in pairs {
            let slot = s.topic_of.get_mut(w as usize).ok_or_else(|| {
                Error::Config(format!("seed word id {w} outside vocabulary of {vocab_size}"))
            })?;
            if *slot != UNSEEDED && *slot != k as u32 {
                return Err(Error::Config(format!("word id {w} seeded to two topics")));
            }
            *slot = k as u32;
        }
        Ok(s)
    }

    /// Map each personalized seed to its symptom's topic. Every seed must be
    /// in the vocabulary.
    pub fn from_seed_set(seeds: &UserSeedSet, vocab: &Vocabulary) -> Result<Self> {
        let pairs = seeds
            .iter()
            .map(|(s, t)| {
                vocab
                    .id(&t.term)
                    .map(|id| (id, s.index()))
                    .ok_or_else(|| Error::SeedNotInVocabulary(t.term.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(vocab.len(), pairs)
    }

    pub fn vocab_size(&self) -> usize {
        self.topic_of.len()
    }

    pub fn topic_of(&self, word: u32) -> Option<usize> {
        match self.topic_of.get(word as usize) {
            Some(&k) if k != UNSEEDED => Some(k as usize),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.topic_of.iter().filter(|&&k| k != UNSEEDED).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_topic(&self) -> Option<usize> {
        self.topic_of
            .iter()
            .filter(|&&k| k != UNSEEDED)
            .max()
            .map(|&k| k as usize)
    }
}

/// Sampler state after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub num_topics: usize,
    pub vocab_size: usize,
    /// Topic of every token, buckets concatenated in order.
    pub z: Vec<u32>,
    /// Bucket × topic counts, row-major.
    pub n_bk: Vec<u32>,
    /// Topic × word counts, row-major.
    pub n_kw: Vec<u32>,
    pub n_k: Vec<u32>,
    pub seed_map: SeedAssignment,
}

/// Collapsed Gibbs sampler over bucket tokens with hard seed constraints.
///
/// The random stream is fixed: a `ChaCha8Rng` seeded with `rng_seed` first
/// draws `gen_range(0..K)` for every unseeded position in token order, then
/// each resampling step draws one `gen::<f64>()` and walks the cumulative
/// unnormalized weights. Seeded positions consume no draws.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    words: Vec<u32>,
    bucket: Vec<u32>,
    z: Vec<u32>,
    fixed: Vec<bool>,
    bucket_len: Vec<u32>,
    n_bk: Vec<u32>,
    /// Word-major copy of the topic/word counts: `n_wk[w * K + k]`.
    n_wk: Vec<u32>,
    n_k: Vec<u32>,
    seeds: SeedAssignment,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
    sweeps: usize,
}

impl GibbsSampler {
    pub fn new(corpus: &BucketedCorpus, seeds: &SeedAssignment, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.num_topics;
        let v = seeds.vocab_size();
        if let Some(top) = seeds.max_topic() {
            if top >= cfg.num_seeded {
                return Err(Error::Config(format!(
                    "seed topic {top} is not among the {} seeded topics",
                    cfg.num_seeded
                )));
            }
        }
        let n: usize = corpus.total_tokens();
        if n == 0 {
            return Err(Error::Empty("corpus has no in-vocabulary tokens"));
        }
        let mut words = Vec::with_capacity(n);
        let mut bucket = Vec::with_capacity(n);
        for (b, bk) in corpus.buckets.iter().enumerate() {
            for &w in &bk.token_ids {
                if w as usize >= v {
                    return Err(Error::Config(format!(
                        "token id {w} outside vocabulary of {v}"
                    )));
                }
                words.push(w);
                bucket.push(b as u32);
            }
        }
        let nb = corpus.num_buckets();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut s = GibbsSampler {
            k,
            v,
            alpha: cfg.alpha,
            beta: cfg.beta,
            z: Vec::with_capacity(n),
            fixed: Vec::with_capacity(n),
            bucket_len: corpus
                .buckets
                .iter()
                .map(|b| b.token_ids.len() as u32)
                .collect(),
            n_bk: vec![0; nb * k],
            n_wk: vec![0; v * k],
            n_k: vec![0; k],
            seeds: seeds.clone(),
            weights: vec![0.0; k],
            sweeps: 0,
            words,
            bucket,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        for i in 0..n {
            let (topic, fixed) = match seeds.topic_of(s.words[i]) {
                Some(t) => (t as u32, true),
                None => (rng.gen_range(0..k as u32), false),
            };
            s.z.push(topic);
            s.fixed.push(fixed);
            s.add(i, topic as usize);
        }
        s.rng = rng;
        Ok(s)
    }

    fn add(&mut self, i: usize, t: usize) {
        let (b, w) = (self.bucket[i] as usize, self.words[i] as usize);
        self.n_bk[b * self.k + t] += 1;
        self.n_wk[w * self.k + t] += 1;
        self.n_k[t] += 1;
    }

    fn remove(&mut self, i: usize, t: usize) {
        let (b, w) = (self.bucket[i] as usize, self.words[i] as usize);
        self.n_bk[b * self.k + t] -= 1;
        self.n_wk[w * self.k + t] -= 1;
        self.n_k[t] -= 1;
    }

    pub fn num_tokens(&self) -> usize {
        self.words.len()
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn word(&self, i: usize) -> u32 {
        self.words[i]
    }

    pub fn bucket_of(&self, i: usize) -> usize {
        self.bucket[i] as usize
    }

    pub fn is_seeded(&self, i: usize) -> bool {
        self.fixed[i]
    }

    pub fn bucket_topic_count(&self, b: usize, t: usize) -> u32 {
        self.n_bk[b * self.k + t]
    }

    pub fn topic_word_count(&self, t: usize, w: u32) -> u32 {
        self.n_wk[w as usize * self.k + t]
    }

    pub fn topic_count(&self, t: usize) -> u32 {
        self.n_k[t]
    }

    /// Normalized full conditional of position `i`'s topic with `i`'s own
    /// assignment removed from the counts. Seeded positions return a point
    /// mass on their topic.
    pub fn conditional(&self, i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.k];
        if self.fixed[i] {
            p[self.z[i] as usize] = 1.0;
            return p;
        }
        let (b, w, cur) = (
            self.bucket[i] as usize,
            self.words[i] as usize,
            self.z[i] as usize,
        );
        let vbeta = self.v as f64 * self.beta;
        for (t, slot) in p.iter_mut().enumerate() {
            let own = u32::from(t == cur);
            let nbk = (self.n_bk[b * self.k + t] - own) as f64;
            let nwk = (self.n_wk[w * self.k + t] - own) as f64;
            let nk = (self.n_k[t] - own) as f64;
            *slot = (nbk + self.alpha) * (nwk + self.beta) / (nk + vbeta);
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }

    /// Resample one position. Seeded positions are left untouched.
    pub fn resample(&mut self, i: usize) {
        if self.fixed[i] {
            return;
        }
        let old = self.z[i] as usize;
        self.remove(i, old);
        let (b, w) = (self.bucket[i] as usize, self.words[i] as usize);
        let k = self.k;
        let vbeta = self.v as f64 * self.beta;
        let row_b = &self.n_bk[b * k..(b + 1) * k];
        let row_w = &self.n_wk[w * k..(w + 1) * k];
        let mut total = 0.0;
        for t in 0..k {
            total += (row_b[t] as f64 + self.alpha) * (row_w[t] as f64 + self.beta)
                / (self.n_k[t] as f64 + vbeta);
            self.weights[t] = total;
        }
        let u = self.rng.gen::<f64>() * total;
        let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);
        self.z[i] = new as u32;
        self.add(i, new);
    }

    pub fn sweep(&mut self) {
        for i in 0..self.words.len() {
            self.resample(i);
        }
        self.sweeps += 1;
    }

    /// Count of seeded positions whose topic differs from their seed topic.
    pub fn seed_violations(&self) -> usize {
        (0..self.words.len())
            .filter(|&i| match self.seeds.topic_of(self.words[i]) {
                Some(t) => self.z[i] as usize != t,
                None => false,
            })
            .count()
    }

    /// Recompute every count from `z` and compare with the running tables.
    pub fn check_counts(&self) -> std::result::Result<(), String> {
        let k = self.k;
        let mut n_bk = vec![0u32; self.n_bk.len()];
        let mut n_wk = vec![0u32; self.n_wk.len()];
        let mut n_k = vec![0u32; k];
        for i in 0..self.words.len() {
            let t = self.z[i] as usize;
            n_bk[self.bucket[i] as usize * k + t] += 1;
            n_wk[self.words[i] as usize * k + t] += 1;
            n_k[t] += 1;
        }
        if n_bk != self.n_bk || n_wk != self.n_wk || n_k != self.n_k {
            return Err("count tables drifted from assignments".into());
        }
        for (b, &len) in self.bucket_len.iter().enumerate() {
            let row: u32 = self.n_bk[b * k..(b + 1) * k].iter().sum();
            if row != len {
                return Err(format!("bucket {b}: row sum {row} != length {len}"));
            }
        }
        for t in 0..k {
            let by_bucket: u32 = (0..self.bucket_len.len()).map(|b| self.n_bk[b * k + t]).sum();
            let by_word: u32 = (0..self.v).map(|w| self.n_wk[w * k + t]).sum();
            if by_bucket != self.n_k[t] || by_word != self.n_k[t] {
                return Err(format!("topic {t}: marginals disagree with n_k"));
            }
        }
        Ok(())
    }

    /// Point estimates of θ and φ from the current counts.
    pub fn distributions(&self) -> TopicDistributions {
        let (k, v) = (self.k, self.v);
        let nb = self.bucket_len.len();
        let mut theta = Matrix::zeros(nb, k);
        for b in 0..nb {
            let denom = self.bucket_len[b] as f64 + k as f64 * self.alpha;
            for (t, x) in theta.row_mut(b).iter_mut().enumerate() {
                *x = (self.n_bk[b * k + t] as f64 + self.alpha) / denom;
            }
        }
        let mut phi = Matrix::zeros(k, v);
        let vbeta = v as f64 * self.beta;
        for t in 0..k {
            let denom = self.n_k[t] as f64 + vbeta;
            for (w, x) in phi.row_mut(t).iter_mut().enumerate() {
                *x = (self.n_wk[w * k + t] as f64 + self.beta) / denom;
            }
        }
        TopicDistributions { theta, phi }
    }

    pub fn into_state(self) -> ModelState {
        let (k, v) = (self.k, self.v);
        let mut n_kw = vec![0u32; k * v];
        for w in 0..v {
            for t in 0..k {
                n_kw[t * v + w] = self.n_wk[w * k + t];
            }
        }
        ModelState {
            num_topics: k,
            vocab_size: v,
            z: self.z,
            n_bk: self.n_bk,
            n_kw,
            n_k: self.n_k,
            seed_map: self.seeds,
        }
    }
}

fn accumulate(into: &mut Matrix, from: &Matrix) {
    for r in 0..into.rows() {
        for (a, b) in into.row_mut(r).iter_mut().zip(from.row(r)) {
            *a += b;
        }
    }
}

fn scale(m: &mut Matrix, by: f64) {
    for r in 0..m.rows() {
        m.row_mut(r).iter_mut().for_each(|x| *x *= by);
    }
}

/// Train with an observer called after every sweep (1-based sweep number).
pub fn train_with_observer(
    corpus: &BucketedCorpus,
    seeds: &SeedAssignment,
    cfg: &ModelConfig,
    mut observer: impl FnMut(usize, &GibbsSampler),
) -> Result<(ModelState, TopicDistributions)> {
    let mut sampler = GibbsSampler::new(corpus, seeds, cfg)?;
    let mut running: Option<(TopicDistributions, usize)> = None;
    for it in 1..=cfg.iterations {
        sampler.sweep();
        observer(it, &sampler);
        if let Estimate::Average { burn_in, lag } = cfg.estimate {
            if it > burn_in && (it - burn_in) % lag == 0 {
                let d = sampler.distributions();
                match running.as_mut() {
                    Some((acc, n)) => {
                        accumulate(&mut acc.theta, &d.theta);
                        accumulate(&mut acc.phi, &d.phi);
                        *n += 1;
                    }
                    None => running = Some((d, 1)),
                }
            }
        }
    }
    let dists = match running {
        Some((mut acc, n)) => {
            scale(&mut acc.theta, 1.0 / n as f64);
            scale(&mut acc.phi, 1.0 / n as f64);
            acc
        }
        None => sampler.distributions(),
    };
    Ok((sampler.into_state(), dists))
}

pub fn train(
    corpus: &BucketedCorpus,
    seeds: &SeedAssignment,
    cfg: &ModelConfig,
) -> Result<(ModelState, TopicDistributions)> {
    train_with_observer(corpus, seeds, cfg, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symptom::Symptom;

    fn small_corpus() -> BucketedCorpus {
        BucketedCorpus::from_token_ids(
            "u",
            vec![vec![0, 1, 2, 0, 1], vec![3, 4, 3, 5], vec![], vec![0, 5, 2, 2]],
        )
    }

    fn cfg(k: usize, s: usize) -> ModelConfig {
        ModelConfig {
            num_topics: k,
            num_seeded: s,
            iterations: 50,
            ..Default::default()
        }
    }

    #[test]
    fn single_topic_is_smoothed_frequency() {
        let c = small_corpus();
        let seeds = SeedAssignment::unseeded(6);
        let (_, d) = train(&c, &seeds, &cfg(1, 0)).unwrap();
        for b in 0..c.num_buckets() {
            assert_eq!(d.theta.row(b), [1.0]);
        }
        let counts = [3.0, 2.0, 3.0, 2.0, 1.0, 2.0];
        let n = 13.0;
        for (w, c) in counts.iter().enumerate() {
            assert!((d.phi.get(0, w) - (c + 0.1) / (n + 0.6)).abs() < 1e-12);
        }
    }

    #[test]
    fn seeds_stay_pinned_and_counts_conserve() {
        let c = small_corpus();
        let seeds = SeedAssignment::from_pairs(6, [(0, 0), (3, 1)]).unwrap();
        let mut calls = 0;
        train_with_observer(&c, &seeds, &cfg(4, 2), |_, s| {
            calls += 1;
            assert_eq!(s.seed_violations(), 0);
            s.check_counts().unwrap();
        })
        .unwrap();
        assert_eq!(calls, 50);
    }

    #[test]
    fn rows_normalize() {
        let (_, d) = train(&small_corpus(), &SeedAssignment::unseeded(6), &cfg(3, 0)).unwrap();
        for r in d.theta.iter_rows().chain(d.phi.iter_rows()) {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let c = small_corpus();
        let seeds = SeedAssignment::from_pairs(6, [(2, 1)]).unwrap();
        let a = train(&c, &seeds, &cfg(4, 2)).unwrap();
        let b = train(&c, &seeds, &cfg(4, 2)).unwrap();
        assert_eq!(a, b);
        let other = ModelConfig { rng_seed: 7, ..cfg(4, 2) };
        assert_ne!(train(&c, &seeds, &other).unwrap().0.z, a.0.z);
    }

    #[test]
    fn averaged_estimate_normalizes() {
        let c = small_corpus();
        let conf = ModelConfig {
            estimate: Estimate::Average { burn_in: 10, lag: 5 },
            ..cfg(3, 0)
        };
        let (_, d) = train(&c, &SeedAssignment::unseeded(6), &conf).unwrap();
        for r in d.theta.iter_rows().chain(d.phi.iter_rows()) {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn configuration_errors() {
        let c = small_corpus();
        let bad_topic = SeedAssignment::from_pairs(6, [(0, 3)]).unwrap();
        assert!(matches!(train(&c, &bad_topic, &cfg(4, 2)), Err(Error::Config(_))));
        let empty = BucketedCorpus::from_token_ids("u", vec![vec![], vec![]]);
        assert!(matches!(
            train(&empty, &SeedAssignment::unseeded(6), &cfg(2, 0)),
            Err(Error::Empty(_))
        ));
        let small_vocab = SeedAssignment::unseeded(3);
        assert!(train(&c, &small_vocab, &cfg(2, 0)).is_err());
        assert!(SeedAssignment::from_pairs(6, [(0, 1), (0, 2)]).is_err());
        assert!(SeedAssignment::from_pairs(6, [(9, 1)]).is_err());
    }

    #[test]
    fn seed_set_must_be_in_vocabulary() {
        let vocab = Vocabulary::from_entries([("sleep".to_string(), 1)]).unwrap();
        let seeds = UserSeedSet::from_terms("u", [(Symptom::S3, "insomnia")]).unwrap();
        assert!(matches!(
            SeedAssignment::from_seed_set(&seeds, &vocab),
            Err(Error::SeedNotInVocabulary(t)) if t == "insomnia"
        ));
        let seeds = UserSeedSet::from_terms("u", [(Symptom::S3, "sleep")]).unwrap();
        let a = SeedAssignment::from_seed_set(&seeds, &vocab).unwrap();
        assert_eq!(a.topic_of(0), Some(2));
    }
}
