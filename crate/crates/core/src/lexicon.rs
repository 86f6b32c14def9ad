//! The nine-category symptom lexicon and per-subject seed selection.
//!
//! Lexicon files are plain text. A category opens with a `[S1]`..`[S9]`
//! header followed by one term or phrase per line, or is written inline as
//! `S3: insomnia, cant sleep`. Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{PhraseTable, TokenizedDocument};
use crate::error::{Error, Result};
use crate::sentiment::PolarityScorer;
use crate::symptom::Symptom;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymptomLexicon {
    /// Surface forms as written in the file, per category.
    surface: [BTreeSet<String>; Symptom::COUNT],
    /// Token form (phrases underscore-joined) -> category.
    by_token: HashMap<String, Symptom>,
}

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.txt");

fn header_symptom(line: &str) -> Option<Result<(Symptom, &str)>> {
    if let Some(rest) = line.strip_prefix('[') {
        let (code, tail) = rest.split_once(']')?;
        return Some(code.parse().map(|s| (s, tail)).map_err(|_| {
            Error::Lexicon(format!("unknown category header `{line}`"))
        }));
    }
    let (code, tail) = line.split_once(':')?;
    code.trim().parse().ok().map(|s| Ok((s, tail)))
}

impl SymptomLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut surface: [BTreeSet<String>; Symptom::COUNT] = Default::default();
        let mut seen = [false; Symptom::COUNT];
        let mut by_token: HashMap<String, Symptom> = HashMap::new();
        let mut current: Option<Symptom> = None;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let terms = match header_symptom(line) {
                Some(parsed) => {
                    let (s, tail) = parsed?;
                    current = Some(s);
                    seen[s.index()] = true;
                    // `[S1] lack of interest` names the category; only the
                    // inline `S1: a, b` form lists terms on the same line.
                    if line.starts_with('[') {
                        continue;
                    }
                    tail
                }
                None => line,
            };
            let cat = current.ok_or_else(|| {
                Error::Lexicon(format!("term `{line}` appears before any category header"))
            })?;
            for term in terms.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let mut table = PhraseTable::new();
                let Some(token) = table.add_term(term) else {
                    continue;
                };
                match by_token.get(&token) {
                    Some(&other) if other != cat => {
                        return Err(Error::Lexicon(format!(
                            "term `{term}` appears under both {other} and {cat}"
                        )))
                    }
                    _ => {
                        by_token.insert(token, cat);
                        surface[cat.index()].insert(term.to_lowercase());
                    }
                }
            }
        }
        for s in Symptom::ALL {
            if !seen[s.index()] {
                return Err(Error::Lexicon(format!("missing category {s}")));
            }
            if surface[s.index()].is_empty() {
                return Err(Error::Lexicon(format!("category {s} has no terms")));
            }
        }
        Ok(SymptomLexicon { surface, by_token })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Starter lexicon of roughly twenty terms per category.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    /// Token forms of one category, sorted.
    pub fn tokens(&self, s: Symptom) -> BTreeSet<&str> {
        self.by_token
            .iter()
            .filter(|(_, c)| **c == s)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    /// Token forms of every category.
    pub fn tokens_all(&self) -> impl Iterator<Item = &str> + '_ {
        self.by_token.keys().map(String::as_str)
    }

    pub fn surface_terms(&self, s: Symptom) -> &BTreeSet<String> {
        &self.surface[s.index()]
    }

    pub fn category_of(&self, token: &str) -> Option<Symptom> {
        self.by_token.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }

    /// Register every term with `table`: phrases get underscored, single
    /// words are protected from stopword removal and stemming.
    pub fn register(&self, table: &mut PhraseTable) {
        for terms in &self.surface {
            for t in terms {
                table.add_term(t);
            }
        }
    }

    pub fn phrase_table(&self) -> PhraseTable {
        let mut t = PhraseTable::new();
        self.register(&mut t);
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTerm {
    pub term: String,
    /// Occurrences in the subject's corpus.
    pub frequency: u32,
    /// Sentences with negative polarity that contain the term.
    pub negative_sentences: u32,
}

#[derive(Serialize, Deserialize)]
struct SeedSetFile {
    subject_id: String,
    categories: BTreeMap<Symptom, Vec<SeedTerm>>,
}

/// A subject's personalized seeds, ranked within each category by
/// negative-sentence count then frequency (both descending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeedSetFile", into = "SeedSetFile")]
pub struct UserSeedSet {
    subject_id: String,
    categories: BTreeMap<Symptom, Vec<SeedTerm>>,
    index: HashMap<String, Symptom>,
}

impl From<UserSeedSet> for SeedSetFile {
    fn from(s: UserSeedSet) -> Self {
        SeedSetFile {
            subject_id: s.subject_id,
            categories: s.categories,
        }
    }
}

impl TryFrom<SeedSetFile> for UserSeedSet {
    type Error = Error;

    fn try_from(f: SeedSetFile) -> Result<Self> {
        UserSeedSet::from_ranked(f.subject_id, f.categories)
    }
}

impl UserSeedSet {
    fn from_ranked(
        subject_id: String,
        categories: BTreeMap<Symptom, Vec<SeedTerm>>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (s, terms) in &categories {
            for t in terms {
                if let Some(prev) = index.insert(t.term.clone(), *s) {
                    return Err(Error::Lexicon(format!(
                        "seed `{}` listed under both {prev} and {s}",
                        t.term
                    )));
                }
            }
        }
        Ok(UserSeedSet {
            subject_id,
            categories: categories.into_iter().filter(|(_, v)| !v.is_empty()).collect(),
            index,
        })
    }

    pub fn empty(subject_id: &str) -> Self {
        UserSeedSet {
            subject_id: subject_id.to_string(),
            categories: BTreeMap::new(),
            index: HashMap::new(),
        }
    }

    /// Seeds given directly as `(category, token)` pairs, without scores.
    pub fn from_terms<'a>(
        subject_id: &str,
        terms: impl IntoIterator<Item = (Symptom, &'a str)>,
    ) -> Result<Self> {
        let mut categories: BTreeMap<Symptom, Vec<SeedTerm>> = BTreeMap::new();
        for (s, t) in terms {
            categories.entry(s).or_default().push(SeedTerm {
                term: t.to_string(),
                frequency: 0,
                negative_sentences: 0,
            });
        }
        Self::from_ranked(subject_id.to_string(), categories)
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn category_of(&self, token: &str) -> Option<Symptom> {
        self.index.get(token).copied()
    }

    pub fn seeds(&self, s: Symptom) -> &[SeedTerm] {
        self.categories.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symptom, &SeedTerm)> + '_ {
        self.categories
            .iter()
            .flat_map(|(s, v)| v.iter().map(move |t| (*s, t)))
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Select the lexicon terms a subject actually uses in at least one
/// negative-polarity sentence (score strictly below zero).
pub fn personalize(
    lexicon: &SymptomLexicon,
    subject_id: &str,
    docs: &[TokenizedDocument],
    scorer: &dyn PolarityScorer,
    max_seeds_per_category: Option<usize>,
) -> UserSeedSet {
    let mut stats: HashMap<&str, (u32, u32)> = HashMap::new();
    for d in docs {
        for sentence in d.sentence_tokens() {
            let terms: BTreeSet<&str> = sentence
                .iter()
                .map(String::as_str)
                .filter(|t| lexicon.category_of(t).is_some())
                .collect();
            if terms.is_empty() {
                continue;
            }
            let negative = scorer.polarity(sentence) < 0.0;
            for t in sentence.iter().filter(|t| terms.contains(t.as_str())) {
                stats.entry(t).or_default().0 += 1;
            }
            if negative {
                for t in &terms {
                    stats.entry(t).or_default().1 += 1;
                }
            }
        }
    }
    let mut categories: BTreeMap<Symptom, Vec<SeedTerm>> = BTreeMap::new();
    for (term, (frequency, negative_sentences)) in stats {
        if negative_sentences == 0 {
            continue;
        }
        let cat = lexicon.category_of(term).expect("filtered to lexicon terms");
        categories.entry(cat).or_default().push(SeedTerm {
            term: term.to_string(),
            frequency,
            negative_sentences,
        });
    }
    for terms in categories.values_mut() {
        terms.sort_by(|a, b| {
            b.negative_sentences
                .cmp(&a.negative_sentences)
                .then(b.frequency.cmp(&a.frequency))
                .then_with(|| a.term.cmp(&b.term))
        });
        if let Some(k) = max_seeds_per_category {
            terms.truncate(k);
        }
    }
    UserSeedSet::from_ranked(subject_id.to_string(), categories)
        .expect("lexicon categories are disjoint")
}
