//! Topic coherence: UMass over document counts of the training corpus, UCI
//! and NPMI over sliding-window counts of a reference corpus.

mod index;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use index::{build_doc_index, build_window_index, DocCountIndex, WindowCountIndex, INDEX_VERSION};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{top_words, TopicDistributions};

pub const DEFAULT_TOP_N: usize = 20;
pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_UMASS_EPS: f64 = 1.0;
pub const DEFAULT_PMI_EPS: f64 = 1e-12;

/// How per-pair UMass values are combined into a topic score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UmassAggregation {
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoherenceConfig {
    pub top_n: usize,
    pub umass_eps: f64,
    pub pmi_eps: f64,
    pub umass_aggregation: UmassAggregation,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            top_n: DEFAULT_TOP_N,
            umass_eps: DEFAULT_UMASS_EPS,
            pmi_eps: DEFAULT_PMI_EPS,
            umass_aggregation: UmassAggregation::Mean,
        }
    }
}

fn check_len(words: &[String]) -> Result<()> {
    if words.len() < 2 {
        return Err(Error::TooFewWords(words.len()));
    }
    Ok(())
}

/// `log((D(w_i, w_j) + eps) / D(w_j))` where `w_j` ranks above `w_i`. A
/// conditioning word with no documents is smoothed to `D(w_j) = eps`.
pub fn umass_pair(idx: &DocCountIndex, wi: &str, wj: &str, eps: f64) -> f64 {
    let dj = idx.doc_freq(wj) as f64;
    let denom = if dj == 0.0 { eps } else { dj };
    ((idx.joint_doc_freq(wi, wj) as f64 + eps) / denom).ln()
}

/// Per-pair UMass values in rank order: (1,0), (2,0), (2,1), ...
pub fn umass_pairs(words: &[String], idx: &DocCountIndex, eps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..words.len() {
        for j in 0..i {
            out.push(umass_pair(idx, &words[i], &words[j], eps));
        }
    }
    out
}

pub fn umass_with(
    words: &[String],
    idx: &DocCountIndex,
    eps: f64,
    aggregation: UmassAggregation,
) -> Result<f64> {
    check_len(words)?;
    let pairs = umass_pairs(words, idx, eps);
    let sum: f64 = pairs.iter().sum();
    Ok(match aggregation {
        UmassAggregation::Mean => sum / pairs.len() as f64,
        UmassAggregation::Sum => sum,
    })
}

/// Mean UMass over ranked word pairs.
pub fn umass(words: &[String], idx: &DocCountIndex, eps: f64) -> Result<f64> {
    umass_with(words, idx, eps, UmassAggregation::Mean)
}

/// `log((p(a,b) + eps) / (p(a) p(b)))`. A word never seen in the reference
/// corpus cannot co-occur, so the pair gets `log(eps)`.
pub fn pmi(idx: &WindowCountIndex, a: &str, b: &str, eps: f64) -> f64 {
    let (pa, pb) = (idx.prob(a), idx.prob(b));
    if pa == 0.0 || pb == 0.0 {
        return eps.ln();
    }
    ((idx.joint_prob(a, b) + eps) / (pa * pb)).ln()
}

/// PMI normalised by `-log(p(a,b) + eps)`; -1 without co-occurrence, 1 when
/// the pair fills every window.
pub fn npmi_pair(idx: &WindowCountIndex, a: &str, b: &str, eps: f64) -> f64 {
    if idx.joint_count(a, b) == 0 {
        return -1.0;
    }
    let denom = -(idx.joint_prob(a, b) + eps).ln();
    if denom <= 0.0 {
        return 1.0;
    }
    pmi(idx, a, b, eps) / denom
}

fn unordered_pairs(words: &[String], f: impl Fn(&str, &str) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            out.push(f(&words[i], &words[j]));
        }
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn npmi_pairs(words: &[String], idx: &WindowCountIndex, eps: f64) -> Vec<f64> {
    unordered_pairs(words, |a, b| npmi_pair(idx, a, b, eps))
}

/// Mean PMI over unordered word pairs.
pub fn uci(words: &[String], idx: &WindowCountIndex, eps: f64) -> Result<f64> {
    check_len(words)?;
    Ok(mean(&unordered_pairs(words, |a, b| pmi(idx, a, b, eps))))
}

/// Mean NPMI over unordered word pairs.
pub fn npmi(words: &[String], idx: &WindowCountIndex, eps: f64) -> Result<f64> {
    check_len(words)?;
    Ok(mean(&npmi_pairs(words, idx, eps)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCoherence {
    pub topic: usize,
    pub words: Vec<String>,
    pub umass: f64,
    pub uci: f64,
    pub npmi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceAverages {
    pub umass: f64,
    pub uci: f64,
    pub npmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub config: CoherenceConfig,
    pub topics: Vec<TopicCoherence>,
    pub average: CoherenceAverages,
}

impl CoherenceReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `topic,umass,uci,npmi` rows followed by a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic,umass,uci,npmi\n");
        for t in &self.topics {
            let _ = writeln!(out, "{},{},{},{}", t.topic, t.umass, t.uci, t.npmi);
        }
        let a = &self.average;
        let _ = writeln!(out, "mean,{},{},{}", a.umass, a.uci, a.npmi);
        out
    }
}

/// Score ranked word lists, one per topic.
pub fn score_topics(
    topics: &[(usize, Vec<String>)],
    docs: &DocCountIndex,
    windows: &WindowCountIndex,
    cfg: &CoherenceConfig,
) -> Result<CoherenceReport> {
    if topics.is_empty() {
        return Err(Error::Empty("no topics to score"));
    }
    let scored = topics
        .iter()
        .map(|(topic, words)| {
            Ok(TopicCoherence {
                topic: *topic,
                words: words.clone(),
                umass: umass_with(words, docs, cfg.umass_eps, cfg.umass_aggregation)?,
                uci: uci(words, windows, cfg.pmi_eps)?,
                npmi: npmi(words, windows, cfg.pmi_eps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = scored.len() as f64;
    let average = CoherenceAverages {
        umass: scored.iter().map(|t| t.umass).sum::<f64>() / n,
        uci: scored.iter().map(|t| t.uci).sum::<f64>() / n,
        npmi: scored.iter().map(|t| t.npmi).sum::<f64>() / n,
    };
    Ok(CoherenceReport {
        config: *cfg,
        topics: scored,
        average,
    })
}

/// Top-`cfg.top_n` words of each topic in rank order.
pub fn topic_word_lists(
    dists: &TopicDistributions,
    vocab: &Vocabulary,
    top_n: usize,
) -> Result<Vec<(usize, Vec<String>)>> {
    (0..dists.num_topics())
        .map(|k| {
            let words = top_words(dists, vocab, k, top_n)?;
            Ok((k, words.into_iter().map(|(w, _)| w).collect()))
        })
        .collect()
}

/// Union of all topics' top words, the universe both indexes must cover.
pub fn word_universe(topics: &[(usize, Vec<String>)]) -> BTreeSet<String> {
    topics.iter().flat_map(|(_, ws)| ws.iter().cloned()).collect()
}

pub fn score_model(
    dists: &TopicDistributions,
    vocab: &Vocabulary,
    docs: &DocCountIndex,
    windows: &WindowCountIndex,
    cfg: &CoherenceConfig,
) -> Result<CoherenceReport> {
    let topics = topic_word_lists(dists, vocab, cfg.top_n)?;
    score_topics(&topics, docs, windows, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizedDocument;
    use chrono::Utc;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn doc(s: &str) -> TokenizedDocument {
        let tokens = toks(s);
        TokenizedDocument {
            subject_id: "u".into(),
            timestamp: Utc::now(),
            sentences: vec![(0, tokens.len())],
            tokens,
        }
    }

    fn universe(s: &str) -> BTreeSet<String> {
        toks(s).into_iter().collect()
    }

    #[test]
    fn umass_always_together() {
        let docs = [doc("w1 w2"), doc("w2 w1 x"), doc("x"), doc("y")];
        let idx = build_doc_index(&docs, &universe("w1 w2")).unwrap();
        let s = umass(&toks("w1 w2"), &idx, 1.0).unwrap();
        assert!((s - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn umass_never_together() {
        let mut docs: Vec<_> = (0..5).map(|_| doc("a")).collect();
        docs.push(doc("b"));
        let idx = build_doc_index(&docs, &universe("a b")).unwrap();
        let s = umass(&toks("a b"), &idx, 1.0).unwrap();
        assert!((s - (0.2f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn umass_sum_mode_and_short_lists() {
        let docs = [doc("a b c"), doc("a c"), doc("b")];
        let idx = build_doc_index(&docs, &universe("a b c")).unwrap();
        let w = toks("a b c");
        let pairs = umass_pairs(&w, &idx, 1.0);
        assert_eq!(pairs.len(), 3);
        let sum = umass_with(&w, &idx, 1.0, UmassAggregation::Sum).unwrap();
        assert!((sum - pairs.iter().sum::<f64>()).abs() < 1e-12);
        assert!((umass(&w, &idx, 1.0).unwrap() - sum / 3.0).abs() < 1e-12);
        assert!(matches!(umass(&w[..1], &idx, 1.0), Err(Error::TooFewWords(1))));
    }

    /// Twenty one-window streams with p(a)=p(b)=0.1 and p(a,b)=0.05.
    fn fixture_05() -> WindowCountIndex {
        let mut streams = vec![toks("a b")];
        streams.extend((0..19).map(|_| toks("x y")));
        streams[1] = toks("a x");
        streams[2] = toks("b x");
        build_window_index(&streams, 2, &universe("a b")).unwrap()
    }

    #[test]
    fn uci_and_npmi_hand_values() {
        let idx = fixture_05();
        assert_eq!(idx.total_windows(), 20);
        assert!((idx.prob("a") - 0.1).abs() < 1e-15);
        assert!((idx.joint_prob("a", "b") - 0.05).abs() < 1e-15);
        let w = toks("a b");
        assert!((uci(&w, &idx, 0.0).unwrap() - 5f64.ln()).abs() < 1e-12);
        let expected = 5f64.ln() / -(0.05f64.ln());
        assert!((npmi(&w, &idx, 0.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.537).abs() < 1e-3);
    }

    #[test]
    fn npmi_edges() {
        let idx = build_window_index(&[toks("a b"), toks("a b")], 2, &universe("a b c")).unwrap();
        assert_eq!(npmi_pair(&idx, "a", "b", 0.0), 1.0);
        assert_eq!(npmi_pair(&idx, "a", "c", 0.0), -1.0);
        assert!(pmi(&idx, "a", "c", 1e-12).is_finite());
    }

    #[test]
    fn independent_pair_scores_zero() {
        // a in half the windows, b in half, both in a quarter.
        let streams = [toks("a b"), toks("a x"), toks("b x"), toks("x x")];
        let idx = build_window_index(&streams, 2, &universe("a b")).unwrap();
        assert!(pmi(&idx, "a", "b", 0.0).abs() < 1e-12);
        assert!(npmi_pair(&idx, "a", "b", 0.0).abs() < 1e-12);
    }

    #[test]
    fn report_averages_single_topic() {
        let docs = [doc("a b"), doc("b c")];
        let d = build_doc_index(&docs, &universe("a b c")).unwrap();
        let w = build_window_index(&[toks("a b c a")], 2, &universe("a b c")).unwrap();
        let topics = vec![(0, toks("a b c"))];
        let r = score_topics(&topics, &d, &w, &CoherenceConfig::default()).unwrap();
        assert_eq!(r.average.umass, r.topics[0].umass);
        assert_eq!(r.average.npmi, r.topics[0].npmi);
        let csv = r.to_csv();
        assert!(csv.starts_with("topic,umass,uci,npmi\n0,"));
        assert!(csv.lines().last().unwrap().starts_with("mean,"));
        assert!(score_topics(&[], &d, &w, &CoherenceConfig::default()).is_err());
    }
}
