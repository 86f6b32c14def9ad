//! Sentence polarity scoring.
//!
//! [`PolarityLexicon`] is a transparent word-list scorer: the polarity of a
//! sentence is the mean signed weight of the lexicon words it contains,
//! where a negator up to two tokens before a word flips that word's sign.
//! Any other scorer can be plugged in through [`PolarityScorer`].

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::corpus::BucketedCorpus;
use crate::error::{Error, Result};
use crate::lexicon::UserSeedSet;

/// How many tokens back a negator reaches.
pub const NEGATION_WINDOW: usize = 2;

pub trait PolarityScorer: Send + Sync {
    /// Score a normalized sentence in `[-1, 1]`.
    fn polarity(&self, sentence: &[String]) -> f64;
}

impl<F> PolarityScorer for F
where
    F: Fn(&[String]) -> f64 + Send + Sync,
{
    fn polarity(&self, sentence: &[String]) -> f64 {
        self(sentence)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarityLexicon {
    weights: HashMap<String, f64>,
    negators: HashSet<String>,
}

const DEFAULT_POLARITY: &str = include_str!("../data/polarity.tsv");

impl PolarityLexicon {
    pub fn new(
        weights: impl IntoIterator<Item = (String, f64)>,
        negators: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let weights: HashMap<String, f64> = weights.into_iter().collect();
        let negators: HashSet<String> = negators.into_iter().collect();
        if let Some((t, w)) = weights.iter().find(|(_, w)| !(-1.0..=1.0).contains(*w)) {
            return Err(Error::format(
                "polarity lexicon",
                format!("weight {w} for `{t}` outside [-1, 1]"),
            ));
        }
        if let Some(t) = negators.iter().find(|t| weights.contains_key(*t)) {
            return Err(Error::format(
                "polarity lexicon",
                format!("`{t}` is both a negator and a weighted token"),
            ));
        }
        Ok(PolarityLexicon { weights, negators })
    }

    /// Parse `token<TAB>weight` lines followed by an optional `[negators]`
    /// section with one token per line. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut weights = Vec::new();
        let mut negators = Vec::new();
        let mut in_negators = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                in_negators = match line {
                    "[negators]" => true,
                    "[weights]" => false,
                    _ => {
                        return Err(Error::format(
                            "polarity lexicon",
                            format!("line {}: unknown section {line}", n + 1),
                        ))
                    }
                };
                continue;
            }
            if in_negators {
                negators.push(line.to_lowercase());
                continue;
            }
            let mut parts = line.split('\t').map(str::trim);
            let (Some(tok), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::format(
                    "polarity lexicon",
                    format!("line {}: expected token<TAB>weight", n + 1),
                ));
            };
            let w: f64 = w.parse().map_err(|_| {
                Error::format("polarity lexicon", format!("line {}: bad weight `{w}`", n + 1))
            })?;
            weights.push((tok.to_lowercase(), w));
        }
        Self::new(weights, negators)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The small general-purpose word list bundled with the crate.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_POLARITY).expect("bundled polarity lexicon is valid")
    }

    pub fn weight(&self, token: &str) -> Option<f64> {
        self.weights.get(token).copied()
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    /// Weighted words and negators; the preprocessor must leave these intact.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> + '_ {
        self.weights
            .keys()
            .chain(self.negators.iter())
            .map(String::as_str)
    }

    /// The same lexicon with every weight negated.
    pub fn mirrored(&self) -> Self {
        PolarityLexicon {
            weights: self.weights.iter().map(|(k, w)| (k.clone(), -w)).collect(),
            negators: self.negators.clone(),
        }
    }
}

impl PolarityScorer for PolarityLexicon {
    fn polarity(&self, sentence: &[String]) -> f64 {
        let mut sum = 0.0;
        let mut matched = 0usize;
        for (i, tok) in sentence.iter().enumerate() {
            let Some(w) = self.weight(tok) else { continue };
            let negated = sentence[i.saturating_sub(NEGATION_WINDOW)..i]
                .iter()
                .any(|t| self.is_negator(t));
            sum += if negated { -w } else { w };
            matched += 1;
        }
        if matched == 0 {
            0.0
        } else {
            (sum / matched as f64).clamp(-1.0, 1.0)
        }
    }
}

/// Sum of polarity over the sentences that contain at least one seed token.
pub fn seeded_polarity<'a>(
    sentences: impl IntoIterator<Item = &'a [String]>,
    is_seed: impl Fn(&str) -> bool,
    scorer: &dyn PolarityScorer,
) -> f64 {
    sentences
        .into_iter()
        .filter(|s| s.iter().any(|t| is_seed(t)))
        .map(|s| scorer.polarity(s))
        .sum()
}

/// Aggregated polarity of bucket `b` over its seed-bearing sentences.
pub fn bucket_polarity(
    corpus: &BucketedCorpus,
    b: usize,
    seeds: &UserSeedSet,
    scorer: &dyn PolarityScorer,
) -> f64 {
    seeded_polarity(
        corpus.bucket_sentences(b),
        |t| seeds.category_of(t).is_some(),
        scorer,
    )
}
