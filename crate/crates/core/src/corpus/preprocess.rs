use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::{Document, TokenizedDocument};

/// Platform placeholders. They are the only tokens allowed to be uppercase.
pub const PLACEHOLDERS: [&str; 3] = ["RT", "MENTION", "URL"];

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn is_placeholder(tok: &str) -> bool {
    PLACEHOLDERS.contains(&tok)
}

/// Split already-lowercased ASCII text into word tokens. Apostrophes are
/// deleted so that contractions fuse (`can't` -> `cant`); every other
/// character outside `[A-Za-z0-9_]` separates tokens.
fn split_words(text: &str) -> Vec<String> {
    text.replace('\'', "")
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Normalize a lexicon term into the word sequence the tokenizer would
/// produce for it.
pub(crate) fn term_words(term: &str) -> Vec<String> {
    let lowered: String = term.to_lowercase().chars().filter(char::is_ascii).collect();
    split_words(&lowered)
}

/// Multi-word phrases merged into single underscore-joined tokens, plus
/// single-word terms that must survive stopword removal and stemming
/// untouched.
#[derive(Debug, Clone, Default)]
pub struct PhraseTable {
    phrases: HashSet<String>,
    protected: HashSet<String>,
    max_words: usize,
}

impl PhraseTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a term. Multi-word terms become phrases; the joined form is
    /// returned either way (`lack of interest` -> `lack_of_interest`).
    pub fn add_term(&mut self, term: &str) -> Option<String> {
        let words = term_words(term);
        match words.len() {
            0 => None,
            1 => {
                self.protected.insert(words[0].clone());
                Some(words[0].clone())
            }
            n => {
                self.max_words = self.max_words.max(n);
                self.phrases.insert(words.join(" "));
                let joined = words.join("_");
                self.protected.insert(joined.clone());
                Some(joined)
            }
        }
    }

    pub fn protect(&mut self, word: &str) {
        self.protected.insert(word.to_string());
    }

    pub fn is_protected(&self, tok: &str) -> bool {
        self.protected.contains(tok)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Greedy left-to-right longest-match merge.
    pub fn merge(&self, tokens: Vec<String>) -> Vec<String> {
        if self.phrases.is_empty() {
            return tokens;
        }
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let longest = (self.max_words.min(tokens.len() - i)).max(1);
            let hit = (2..=longest)
                .rev()
                .find(|&n| self.phrases.contains(&tokens[i..i + n].join(" ")));
            match hit {
                Some(n) => {
                    out.push(tokens[i..i + n].join("_"));
                    i += n;
                }
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }
}

/// How runs of three or more identical letters are shortened.
#[derive(Debug, Clone, Default)]
pub enum RepetitionPolicy {
    Off,
    /// Runs collapse to two letters.
    #[default]
    CollapseToTwo,
    /// Runs collapse to two letters when that form is a known word,
    /// otherwise to one.
    CollapseWithFallback(HashSet<String>),
}

fn collapse_runs(word: &str, keep: usize) -> String {
    let mut out = String::with_capacity(word.len());
    let chars: Vec<char> = word.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i;
        while j < chars.len() && chars[j] == c {
            j += 1;
        }
        let run = j - i;
        let n = if run >= 3 && c.is_ascii_alphabetic() {
            keep
        } else {
            run
        };
        out.extend(std::iter::repeat_n(c, n));
        i = j;
    }
    out
}

fn has_long_run(word: &str) -> bool {
    let b = word.as_bytes();
    b.windows(3)
        .any(|w| w[0] == w[1] && w[1] == w[2] && w[0].is_ascii_alphabetic())
}

/// Shorten emphatic letter runs (`sleeeeeep` -> `sleep`). With `known`, a
/// two-letter collapse absent from it falls back to one letter
/// (`fattttt` -> `fat`).
pub fn collapse_repetitions(word: &str, known: Option<&HashSet<String>>) -> String {
    if !has_long_run(word) {
        return word.to_string();
    }
    let two = collapse_runs(word, 2);
    match known {
        Some(k) if !k.contains(&two) => collapse_runs(word, 1),
        _ => two,
    }
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| b"aeiouy".contains(&b))
}

fn undouble(stem: &str) -> &str {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !b"aeioulsz".contains(&b[n - 1]) {
        &stem[..n - 1]
    } else {
        stem
    }
}

/// Light suffix stripper: plural `-s`/`-ies`/`-sses`, then `-ing` and
/// `-ed` with consonant undoubling (`stopped` -> `stop`).
pub fn light_stem(word: &str) -> String {
    if word.len() <= 3 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w: &str = word;
    let owned;
    if let Some(s) = w.strip_suffix("ies").filter(|s| s.len() >= 2) {
        owned = format!("{s}y");
        w = &owned;
    } else if let Some(s) = w.strip_suffix("sses") {
        owned = format!("{s}ss");
        w = &owned;
    } else if w.ends_with('s') && !(w.ends_with("ss") || w.ends_with("us") || w.ends_with("is")) {
        w = &w[..w.len() - 1];
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if stem.len() >= 3 && has_vowel(stem) {
                return undouble(stem).to_string();
            }
        }
    }
    w.to_string()
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[a-z0-9_]+").unwrap())
}

fn retweet_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\brt\b").unwrap())
}

/// The short-text normalization pipeline. Steps, in order: lowercase,
/// platform placeholders, non-ASCII removal, sentence split, tokenization,
/// repetition collapse, phrase underscoring, stopword removal, stemming.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub phrases: PhraseTable,
    pub stopwords: HashSet<String>,
    pub repetition: RepetitionPolicy,
    pub stem: bool,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            phrases: PhraseTable::new(),
            stopwords: default_stopwords(),
            repetition: RepetitionPolicy::default(),
            stem: true,
        }
    }
}

impl Preprocessor {
    pub fn new(phrases: PhraseTable) -> Self {
        Preprocessor {
            phrases,
            ..Default::default()
        }
    }

    /// Lowercase, substitute placeholders and drop non-ASCII characters.
    fn clean(&self, text: &str) -> String {
        let lower = text.to_lowercase();
        let s = url_re().replace_all(&lower, " URL ");
        let s = mention_re().replace_all(&s, " MENTION ");
        let s = retweet_re().replace_all(&s, " RT ");
        s.chars().filter(char::is_ascii).collect()
    }

    fn normalize_word(&self, tok: String) -> String {
        if is_placeholder(&tok) {
            return tok;
        }
        match &self.repetition {
            RepetitionPolicy::Off => tok,
            RepetitionPolicy::CollapseToTwo => collapse_repetitions(&tok, None),
            RepetitionPolicy::CollapseWithFallback(known) => collapse_repetitions(&tok, Some(known)),
        }
    }

    fn keep(&self, tok: &str) -> bool {
        is_placeholder(tok) || self.phrases.is_protected(tok) || !self.stopwords.contains(tok)
    }

    fn finish(&self, tok: String) -> String {
        if !self.stem || is_placeholder(&tok) || tok.contains('_') || self.phrases.is_protected(&tok)
        {
            tok
        } else {
            light_stem(&tok)
        }
    }

    /// Tokens plus sentence spans for raw text.
    pub fn tokenize(&self, text: &str) -> (Vec<String>, Vec<(usize, usize)>) {
        let cleaned = self.clean(text);
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        for sentence in cleaned.split(['.', '!', '?', '\n']) {
            let words: Vec<String> = split_words(sentence)
                .into_iter()
                .map(|w| self.normalize_word(w))
                .collect();
            let start = tokens.len();
            tokens.extend(
                self.phrases
                    .merge(words)
                    .into_iter()
                    .filter(|t| self.keep(t))
                    .map(|t| self.finish(t)),
            );
            if tokens.len() > start {
                spans.push((start, tokens.len()));
            }
        }
        (tokens, spans)
    }

    pub fn preprocess(&self, doc: &Document) -> TokenizedDocument {
        let (tokens, sentences) = self.tokenize(&doc.text);
        TokenizedDocument {
            subject_id: doc.subject_id.clone(),
            timestamp: doc.timestamp,
            tokens,
            sentences,
        }
    }

    /// Every lowercase word in `docs` that has no emphatic run; used as the
    /// known-word set for [`RepetitionPolicy::CollapseWithFallback`].
    pub fn natural_words<'a>(&self, docs: impl IntoIterator<Item = &'a Document>) -> HashSet<String> {
        docs.into_iter()
            .flat_map(|d| split_words(&self.clean(&d.text)))
            .filter(|w| !is_placeholder(w) && !has_long_run(w))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp() -> Preprocessor {
        Preprocessor::default()
    }

    #[test]
    fn platform_substitution() {
        let (toks, _) = pp().tokenize("RT @john I can't sleep http://t.co/x");
        assert_eq!(toks, ["RT", "MENTION", "i", "cant", "sleep", "URL"]);
    }

    #[test]
    fn phrase_underscoring() {
        let mut table = PhraseTable::new();
        table.add_term("lack of interest");
        let (toks, _) = Preprocessor::new(table).tokenize("total lack of interest today");
        assert!(toks.contains(&"lack_of_interest".to_string()), "{toks:?}");
    }

    #[test]
    fn longest_match_wins() {
        let mut table = PhraseTable::new();
        table.add_term("lack of");
        table.add_term("lack of interest");
        let merged = table.merge(split_words("total lack of interest"));
        assert_eq!(merged, ["total", "lack_of_interest"]);
        let merged = table.merge(split_words("lack of sleep"));
        assert_eq!(merged, ["lack_of", "sleep"]);
    }

    #[test]
    fn repetition_collapse() {
        assert_eq!(collapse_repetitions("sleeeeeep", None), "sleep");
        assert_eq!(collapse_repetitions("fattttttttt", None), "fatt");
        let known: HashSet<String> = ["sleep", "fat"].iter().map(|s| s.to_string()).collect();
        assert_eq!(collapse_repetitions("sleeeeeep", Some(&known)), "sleep");
        assert_eq!(collapse_repetitions("fattttttttt", Some(&known)), "fat");
        assert_eq!(collapse_repetitions("sleep", Some(&known)), "sleep");
        assert_eq!(collapse_repetitions("1000", None), "1000");
    }

    #[test]
    fn fallback_policy_in_pipeline() {
        let docs = [Document {
            subject_id: "u".into(),
            timestamp: chrono::Utc::now(),
            text: "so fat. sleep. sleeeeeep fattttttttt".into(),
        }];
        let mut p = pp();
        p.repetition = RepetitionPolicy::CollapseWithFallback(p.natural_words(&docs));
        let (toks, spans) = p.tokenize(&docs[0].text);
        assert_eq!(toks, ["fat", "sleep", "sleep", "fat"]);
        assert_eq!(spans, [(0, 1), (1, 2), (2, 4)]);
    }

    #[test]
    fn stemming_rules() {
        assert_eq!(light_stem("sleeping"), "sleep");
        assert_eq!(light_stem("stopped"), "stop");
        assert_eq!(light_stem("cutting"), "cut");
        assert_eq!(light_stem("killed"), "kill");
        assert_eq!(light_stem("tears"), "tear");
        assert_eq!(light_stem("worries"), "worry");
        assert_eq!(light_stem("need"), "need");
        assert_eq!(light_stem("thing"), "thing");
        assert_eq!(light_stem("glass"), "glass");
        assert_eq!(light_stem("feelings"), "feel");
    }

    #[test]
    fn protected_terms_skip_stemming_and_stopwords() {
        let mut table = PhraseTable::new();
        table.add_term("tired");
        table.add_term("down");
        let p = Preprocessor::new(table);
        let (toks, _) = p.tokenize("feeling down and tired");
        assert_eq!(toks, ["feel", "down", "tired"]);
        let mut q = pp();
        q.stem = false;
        assert_eq!(q.tokenize("feeling down").0, ["feeling"]);
    }

    #[test]
    fn sentences_and_empty_output() {
        let (toks, spans) = pp().tokenize("I'm sad. The end!\nnot happy?");
        assert_eq!(toks, ["im", "sad", "end", "not", "happy"]);
        assert_eq!(spans, [(0, 2), (2, 3), (3, 5)]);
        let (toks, spans) = pp().tokenize("the of and");
        assert!(toks.is_empty() && spans.is_empty());
    }

    #[test]
    fn non_ascii_is_stripped() {
        let (toks, _) = pp().tokenize("caf\u{e9} \u{1F622} sad");
        assert_eq!(toks, ["caf", "sad"]);
    }

    proptest! {
        #[test]
        fn token_and_span_invariants(text in "\\PC{0,120}") {
            let p = pp();
            let (a, spans) = p.tokenize(&text);
            let (b, _) = p.tokenize(&text);
            prop_assert_eq!(&a, &b);
            let mut cursor = 0;
            for &(s, e) in &spans {
                prop_assert_eq!(s, cursor);
                prop_assert!(e > s);
                cursor = e;
            }
            prop_assert_eq!(cursor, a.len());
            for t in &a {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert!(is_placeholder(t) || t.chars().all(|c| !c.is_uppercase()));
            }
        }
    }
}
