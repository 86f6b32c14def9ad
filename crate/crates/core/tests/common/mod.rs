#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use sstot_core::corpus::{BucketedCorpus, Document};
use sstot_core::eval::GoldBucket;
use sstot_core::model::SeedAssignment;
use sstot_core::{Symptom, SymptomSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dirichlet(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Vec<f64> {
    Dirichlet::new_with_size(alpha, n).unwrap().sample(rng)
}

fn draw(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// A corpus drawn from the seeded generative process with known parameters.
pub struct Synthetic {
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub seeds: Vec<(u32, usize)>,
    pub buckets: Vec<Vec<u32>>,
}

/// Topics are drawn from Dirichlet(beta); each topic then takes
/// `seeds_per_topic` seed words (see [`seeds_from_phi`]) which every other
/// topic gives zero probability, as a seed word is only ever emitted by its
/// own topic.
pub fn synthetic_lda(
    seed: u64,
    k: usize,
    v: usize,
    buckets: usize,
    len: usize,
    alpha: f64,
    beta: f64,
    seeds_per_topic: usize,
) -> Synthetic {
    let mut r = rng(seed);
    let mut phi: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(&mut r, beta, v)).collect();
    let seeds = seeds_from_phi(&phi, seeds_per_topic);
    for &(w, owner) in &seeds {
        for (t, row) in phi.iter_mut().enumerate() {
            if t != owner {
                row[w as usize] = 0.0;
            }
        }
    }
    for row in &mut phi {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    let theta: Vec<Vec<f64>> = (0..buckets).map(|_| dirichlet(&mut r, alpha, k)).collect();
    let docs = theta
        .iter()
        .map(|th| {
            (0..len)
                .map(|_| {
                    let t = draw(&mut r, th);
                    draw(&mut r, &phi[t]) as u32
                })
                .collect()
        })
        .collect();
    Synthetic {
        theta,
        phi,
        seeds,
        buckets: docs,
    }
}

/// `per_topic` seed words per topic: words whose highest-probability topic
/// is that topic, strongest first.
pub fn seeds_from_phi(phi: &[Vec<f64>], per_topic: usize) -> Vec<(u32, usize)> {
    let v = phi[0].len();
    let owner = |w: usize| {
        (0..phi.len())
            .max_by(|&a, &b| phi[a][w].total_cmp(&phi[b][w]))
            .unwrap()
    };
    let mut out = Vec::new();
    for (k, row) in phi.iter().enumerate() {
        let mut words: Vec<usize> = (0..v).filter(|&w| owner(w) == k).collect();
        words.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        out.extend(words.into_iter().take(per_topic).map(|w| (w as u32, k)));
    }
    out
}

/// 50 buckets x 200 tokens over `v` words with three seed words for each of
/// the nine symptom topics.
pub fn seeded_fixture(seed: u64, v: usize) -> (BucketedCorpus, SeedAssignment) {
    let mut r = rng(seed);
    let buckets: Vec<Vec<u32>> = (0..50)
        .map(|_| (0..200).map(|_| r.gen_range(0..v as u32)).collect())
        .collect();
    let seeds = SeedAssignment::from_pairs(v, (0..27).map(|i| (i as u32 * 7 % v as u32, i / 3))).unwrap();
    (BucketedCorpus::from_token_ids("fixture", buckets), seeds)
}

pub const NOISE: &[&str] = &[
    "coffee", "football", "guitar", "weekend", "train", "pizza", "movie", "garden", "rain",
    "concert", "holiday", "laptop", "kitchen", "bicycle", "beach", "museum", "office", "meeting",
    "podcast", "sunset", "library", "camera", "festival", "market", "tennis", "painting",
    "puzzle", "recipe", "jacket", "umbrella", "highway", "airport", "village", "bridge",
    "river", "mountain", "ticket", "album", "planet", "window",
];

const S3_TERMS: &[&str] = &[
    "insomnia", "sleepless", "awake", "nightmares", "up all night", "no sleep", "midnight",
    "bedtime", "cant fall asleep",
];

const S5_TERMS: &[&str] = &[
    "starving", "binge", "calories", "skinny", "kcal", "purge", "starve", "chubby", "bulimia",
];

const NEGATIVE: &[&str] = &["hate", "awful", "terrible", "horrible", "worst"];

pub const BUCKETS: usize = 20;
pub const S3_RANGE: std::ops::Range<usize> = 0..7;
pub const S5_RANGE: std::ops::Range<usize> = 10..17;

pub fn origin() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

/// One subject posting 20 documents per 14-day bucket. Buckets in
/// `S3_RANGE` and `S5_RANGE` mostly carry negative sentences using that
/// symptom's vocabulary; the rest is lexicon-free background chatter.
pub fn planted_subject(seed: u64) -> (Vec<Document>, Vec<GoldBucket>) {
    let mut r = rng(seed);
    let mut docs = Vec::new();
    let mut gold = Vec::new();
    for b in 0..BUCKETS {
        let planted = if S3_RANGE.contains(&b) {
            Some((Symptom::S3, S3_TERMS))
        } else if S5_RANGE.contains(&b) {
            Some((Symptom::S5, S5_TERMS))
        } else {
            None
        };
        let mut labels = SymptomSet::empty();
        if let Some((s, _)) = planted {
            labels.insert(s);
        }
        gold.push(GoldBucket {
            subject_id: "planted".into(),
            bucket_index: b,
            labels,
        });
        for _ in 0..20 {
            let offset = Duration::seconds(r.gen_range(0..14 * 86_400));
            let ts = origin() + Duration::days(14 * b as i64) + offset;
            let text = match planted {
                Some((_, terms)) if r.gen_bool(0.7) => {
                    let picked: Vec<&str> = terms.choose_multiple(&mut r, 3).copied().collect();
                    let neg = NEGATIVE.choose(&mut r).unwrap();
                    format!("i {neg} this {} {} {}", picked[0], picked[1], picked[2])
                }
                _ => {
                    let n = r.gen_range(4..8);
                    let words: Vec<&str> = (0..n).map(|_| *NOISE.choose(&mut r).unwrap()).collect();
                    words.join(" ")
                }
            };
            docs.push(Document {
                subject_id: "planted".into(),
                timestamp: ts,
                text,
            });
        }
    }
    // The first document anchors bucket 0 at the origin.
    docs[0].timestamp = origin();
    (docs, gold)
}

/// Total-variation distance between two distributions.
pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Greedy one-to-one alignment of learned to true topics by smallest TV;
/// returns the TV of each true topic against its match.
pub fn greedy_aligned_tv(learned: &[Vec<f64>], truth: &[Vec<f64>]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, l) in learned.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            pairs.push((tv(l, t), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_l = vec![false; learned.len()];
    let mut out = vec![f64::NAN; truth.len()];
    for (d, i, j) in pairs {
        if !used_l[i] && out[j].is_nan() {
            used_l[i] = true;
            out[j] = d;
        }
    }
    out
}
