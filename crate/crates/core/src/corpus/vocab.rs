use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::TokenizedDocument;
use crate::error::{Error, Result};

/// Dense bijection between token strings and ids `0..len()`, ordered
/// lexicographically, with per-token document frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    df: Vec<u32>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    tokens: Vec<String>,
    document_frequency: Vec<u32>,
}

impl Vocabulary {
    /// Build from `(token, df)` pairs; duplicate tokens are rejected.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, u32)>) -> Result<Self> {
        let sorted: BTreeMap<String, u32> = entries.into_iter().collect();
        let (tokens, df): (Vec<_>, Vec<_>) = sorted.into_iter().unzip();
        Self::from_parts(tokens, df)
    }

    fn from_parts(tokens: Vec<String>, df: Vec<u32>) -> Result<Self> {
        if tokens.len() != df.len() {
            return Err(Error::format("vocabulary", "token and frequency lengths differ"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::format("vocabulary", format!("duplicate token `{t}`")));
            }
        }
        Ok(Vocabulary { tokens, df, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn document_frequency(&self, id: u32) -> u32 {
        self.df[id as usize]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Hex SHA-256 over the ordered token list; ties checkpoints to the
    /// vocabulary they were trained with.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VocabularyFile {
            tokens: self.tokens.clone(),
            document_frequency: self.df.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = VocabularyFile::deserialize(d)?;
        Vocabulary::from_parts(f.tokens, f.document_frequency).map_err(serde::de::Error::custom)
    }
}

/// Count document frequencies and keep tokens with `df >= min_df`. Tokens
/// in `always_keep` (seed terms) are retained regardless of frequency as
/// long as they occur at all.
pub fn build_vocabulary(
    docs: &[TokenizedDocument],
    min_df: u32,
    always_keep: &HashSet<String>,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Empty("corpus has no documents"));
    }
    if min_df == 0 {
        return Err(Error::Config("min_df must be at least 1".into()));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for d in docs {
        let distinct: HashSet<&str> = d.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    Vocabulary::from_entries(
        df.into_iter()
            .filter(|(t, n)| *n >= min_df || always_keep.contains(*t))
            .map(|(t, n)| (t.to_string(), n)),
    )
}
