//! End-to-end wiring for one subject: bucketize, personalize seeds, train,
//! mask and label.

use std::collections::HashSet;

use crate::corpus::{
    bucketize, build_vocabulary, BucketedCorpus, Document, Preprocessor, RepetitionPolicy,
    TokenizedDocument, Vocabulary,
};
use crate::error::Result;
use crate::lexicon::{personalize, SymptomLexicon, UserSeedSet};
use crate::model::{mask_and_label, train, ModelConfig, ModelState, SeedAssignment, TopicDistributions, TrendMatrix};
use crate::sentiment::{bucket_polarity, PolarityLexicon, PolarityScorer};

pub const DEFAULT_BUCKET_DAYS: u32 = 14;

/// A preprocessor that keeps symptom and polarity terms intact and, when
/// `docs` are given, collapses letter runs against the words they use.
pub fn build_preprocessor(
    lexicon: &SymptomLexicon,
    polarity: &PolarityLexicon,
    docs: Option<&[Document]>,
) -> Preprocessor {
    let mut phrases = lexicon.phrase_table();
    for w in polarity.vocabulary() {
        phrases.protect(w);
    }
    let mut pp = Preprocessor::new(phrases);
    if let Some(docs) = docs {
        pp.repetition = RepetitionPolicy::CollapseWithFallback(pp.natural_words(docs));
    }
    pp
}

/// Shared vocabulary over all subjects; lexicon terms survive `min_df`.
pub fn shared_vocabulary(
    docs: &[TokenizedDocument],
    lexicon: &SymptomLexicon,
    min_df: u32,
) -> Result<Vocabulary> {
    let keep: HashSet<String> = lexicon
        .tokens_all()
        .map(str::to_string)
        .collect();
    build_vocabulary(docs, min_df, &keep)
}

#[derive(Debug, Clone)]
pub struct SubjectRun {
    pub corpus: BucketedCorpus,
    pub seeds: UserSeedSet,
    pub seed_map: SeedAssignment,
    pub state: ModelState,
    pub dists: TopicDistributions,
    pub trend: TrendMatrix,
}

#[derive(Debug, Clone)]
pub struct SubjectOptions {
    pub bucket_days: u32,
    pub max_seeds_per_category: Option<usize>,
}

impl Default for SubjectOptions {
    fn default() -> Self {
        SubjectOptions {
            bucket_days: DEFAULT_BUCKET_DAYS,
            max_seeds_per_category: None,
        }
    }
}

/// Run the model for one subject's tokenized documents.
pub fn run_subject(
    docs: &[TokenizedDocument],
    vocab: &Vocabulary,
    lexicon: &SymptomLexicon,
    scorer: &dyn PolarityScorer,
    cfg: &ModelConfig,
    opts: &SubjectOptions,
) -> Result<SubjectRun> {
    let corpus = bucketize(docs, opts.bucket_days, vocab)?;
    let subject = corpus.subject_id.clone();
    let seeds = personalize(lexicon, &subject, &corpus.documents, scorer, opts.max_seeds_per_category);
    let seed_map = SeedAssignment::from_seed_set(&seeds, vocab)?;
    let (state, dists) = train(&corpus, &seed_map, cfg)?;
    let polarity = |b: usize| bucket_polarity(&corpus, b, &seeds, scorer);
    let trend = mask_and_label(&dists, &corpus, &seed_map, &polarity, cfg);
    Ok(SubjectRun {
        corpus,
        seeds,
        seed_map,
        state,
        dists,
        trend,
    })
}
