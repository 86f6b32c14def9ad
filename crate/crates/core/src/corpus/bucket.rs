use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{TokenizedDocument, Vocabulary};
use crate::error::{Error, Result};

/// All of one subject's in-vocabulary tokens within `[start, start + d days)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub subject_id: String,
    pub index: usize,
    pub start: DateTime<Utc>,
    pub duration_days: u32,
    pub token_ids: Vec<u32>,
    /// Indices into [`BucketedCorpus::documents`], in time order.
    pub source_docs: Vec<usize>,
}

/// One subject's time-ordered sequence of buckets. The tokenized source
/// documents travel with it so sentence-level information stays available.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketedCorpus {
    pub subject_id: String,
    pub duration_days: u32,
    pub buckets: Vec<Bucket>,
    pub documents: Vec<TokenizedDocument>,
    /// Tokens dropped because they were not in the vocabulary.
    pub dropped_oov: usize,
}

impl BucketedCorpus {
    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.buckets.iter().map(|b| b.token_ids.len()).sum()
    }

    /// Sentences (as token slices) of every document that fed bucket `b`.
    pub fn bucket_sentences(&self, b: usize) -> impl Iterator<Item = &[String]> + '_ {
        self.buckets[b]
            .source_docs
            .iter()
            .flat_map(move |&d| self.documents[d].sentence_tokens())
    }

    /// A corpus holding only the listed buckets, in the given order.
    /// Documents are shared wholesale so `source_docs` stay valid.
    pub fn subset(&self, bucket_positions: &[usize]) -> BucketedCorpus {
        BucketedCorpus {
            subject_id: self.subject_id.clone(),
            duration_days: self.duration_days,
            buckets: bucket_positions
                .iter()
                .map(|&i| self.buckets[i].clone())
                .collect(),
            documents: self.documents.clone(),
            dropped_oov: 0,
        }
    }

    /// Build directly from token-id lists; buckets carry no source documents.
    /// Handy for synthetic corpora.
    pub fn from_token_ids(subject_id: &str, buckets: Vec<Vec<u32>>) -> BucketedCorpus {
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        BucketedCorpus {
            subject_id: subject_id.to_string(),
            duration_days: 1,
            buckets: buckets
                .into_iter()
                .enumerate()
                .map(|(i, token_ids)| Bucket {
                    subject_id: subject_id.to_string(),
                    index: i,
                    start: epoch + Duration::days(i as i64),
                    duration_days: 1,
                    token_ids,
                    source_docs: Vec::new(),
                })
                .collect(),
            documents: Vec::new(),
            dropped_oov: 0,
        }
    }
}

/// Group documents by subject, preserving input order within a subject.
pub fn group_by_subject(
    docs: impl IntoIterator<Item = TokenizedDocument>,
) -> BTreeMap<String, Vec<TokenizedDocument>> {
    let mut out: BTreeMap<String, Vec<TokenizedDocument>> = BTreeMap::new();
    for d in docs {
        out.entry(d.subject_id.clone()).or_default().push(d);
    }
    out
}

/// Split one subject's documents into `days`-wide half-open windows anchored
/// at the earliest timestamp. Empty windows between active ones are kept.
pub fn bucketize(
    docs: &[TokenizedDocument],
    days: u32,
    vocab: &Vocabulary,
) -> Result<BucketedCorpus> {
    let first = docs.first().ok_or(Error::Empty("no documents to bucketize"))?;
    if days == 0 {
        return Err(Error::Config("bucket width must be at least one day".into()));
    }
    if let Some(other) = docs.iter().find(|d| d.subject_id != first.subject_id) {
        return Err(Error::format(
            "bucket input",
            format!(
                "documents from several subjects (`{}`, `{}`)",
                first.subject_id, other.subject_id
            ),
        ));
    }
    let mut documents = docs.to_vec();
    documents.sort_by_key(|d| d.timestamp);
    let origin = documents[0].timestamp;
    let width = i64::from(days) * 86_400;
    let slot = |t: DateTime<Utc>| ((t - origin).num_seconds() / width) as usize;
    let count = slot(documents[documents.len() - 1].timestamp) + 1;

    let mut buckets: Vec<Bucket> = (0..count)
        .map(|i| Bucket {
            subject_id: first.subject_id.clone(),
            index: i,
            start: origin + Duration::days(i as i64 * i64::from(days)),
            duration_days: days,
            token_ids: Vec::new(),
            source_docs: Vec::new(),
        })
        .collect();
    let mut dropped_oov = 0;
    for (di, d) in documents.iter().enumerate() {
        let b = &mut buckets[slot(d.timestamp)];
        b.source_docs.push(di);
        for t in &d.tokens {
            match vocab.id(t) {
                Some(id) => b.token_ids.push(id),
                None => dropped_oov += 1,
            }
        }
    }
    Ok(BucketedCorpus {
        subject_id: first.subject_id.clone(),
        duration_days: days,
        buckets,
        documents,
        dropped_oov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use chrono::TimeZone;
    use std::collections::HashSet;

    fn doc_at(day: i64, tokens: &[&str]) -> TokenizedDocument {
        TokenizedDocument {
            subject_id: "u1".into(),
            timestamp: Utc.with_ymd_and_hms(2015, 3, 1, 9, 0, 0).unwrap() + Duration::days(day),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            sentences: if tokens.is_empty() {
                vec![]
            } else {
                vec![(0, tokens.len())]
            },
        }
    }

    fn vocab(docs: &[TokenizedDocument]) -> Vocabulary {
        build_vocabulary(docs, 1, &HashSet::new()).unwrap()
    }

    #[test]
    fn two_buckets_over_27_days() {
        let docs = [doc_at(0, &["a"]), doc_at(27, &["b"])];
        let c = bucketize(&docs, 14, &vocab(&docs)).unwrap();
        assert_eq!(c.num_buckets(), 2);
    }

    #[test]
    fn single_doc_single_bucket() {
        let docs = [doc_at(0, &["a", "b", "a"])];
        let c = bucketize(&docs, 14, &vocab(&docs)).unwrap();
        assert_eq!(c.num_buckets(), 1);
        assert_eq!(c.buckets[0].token_ids.len(), 3);
    }

    #[test]
    fn half_open_boundary() {
        let docs = [doc_at(14, &["c"]), doc_at(0, &["a"]), doc_at(13, &["b"])];
        let v = vocab(&docs);
        let c = bucketize(&docs, 14, &v).unwrap();
        assert_eq!(c.num_buckets(), 2);
        let words = |b: &Bucket| -> Vec<&str> {
            b.token_ids.iter().map(|&i| v.token(i).unwrap()).collect()
        };
        assert_eq!(words(&c.buckets[0]), ["a", "b"]);
        assert_eq!(words(&c.buckets[1]), ["c"]);
        assert_eq!(c.buckets[1].start - c.buckets[0].start, Duration::days(14));
    }

    #[test]
    fn empty_middle_buckets_are_kept() {
        let docs = [doc_at(0, &["a"]), doc_at(50, &["b"])];
        let c = bucketize(&docs, 14, &vocab(&docs)).unwrap();
        assert_eq!(c.num_buckets(), 4);
        assert!(c.buckets[1].token_ids.is_empty() && c.buckets[2].token_ids.is_empty());
    }

    #[test]
    fn token_conservation_and_oov() {
        let docs = [doc_at(0, &["a", "b"]), doc_at(3, &["a", "zzz"]), doc_at(20, &["b"])];
        let v = build_vocabulary(&docs, 2, &HashSet::new()).unwrap();
        let c = bucketize(&docs, 7, &v).unwrap();
        assert_eq!(c.total_tokens() + c.dropped_oov, 5);
        assert_eq!(c.dropped_oov, 1);
        assert!(c.buckets.iter().flat_map(|b| &b.token_ids).all(|&t| (t as usize) < v.len()));
    }

    #[test]
    fn rejects_bad_input() {
        let v = vocab(&[doc_at(0, &["a"])]);
        assert!(bucketize(&[], 14, &v).is_err());
        assert!(bucketize(&[doc_at(0, &["a"])], 0, &v).is_err());
        let mut other = doc_at(1, &["a"]);
        other.subject_id = "u2".into();
        assert!(bucketize(&[doc_at(0, &["a"]), other], 14, &v).is_err());
    }
}
