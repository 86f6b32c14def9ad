use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::corpus::TokenizedDocument;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SSTCIDX\0";
pub const INDEX_VERSION: u32 = 1;

/// Word table shared by both index kinds: sorted universe, per-word counts
/// and sparse counts for unordered pairs keyed `(lo, hi)` by word id.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Counts {
    words: Vec<String>,
    ids: HashMap<String, u32>,
    single: Vec<u64>,
    pairs: BTreeMap<(u32, u32), u64>,
}

impl Counts {
    fn new(universe: &BTreeSet<String>) -> Self {
        let words: Vec<String> = universe.iter().cloned().collect();
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Counts {
            single: vec![0; words.len()],
            words,
            ids,
            pairs: BTreeMap::new(),
        }
    }

    /// Count one context (document or window) given its distinct word ids.
    fn observe(&mut self, present: &BTreeSet<u32>) {
        let ids: Vec<u32> = present.iter().copied().collect();
        for (i, &a) in ids.iter().enumerate() {
            self.single[a as usize] += 1;
            for &b in &ids[i + 1..] {
                *self.pairs.entry((a, b)).or_insert(0) += 1;
            }
        }
    }

    fn present<'a>(&self, tokens: impl IntoIterator<Item = &'a String>) -> BTreeSet<u32> {
        tokens
            .into_iter()
            .filter_map(|t| self.ids.get(t).copied())
            .collect()
    }

    fn single(&self, w: &str) -> u64 {
        self.ids.get(w).map_or(0, |&i| self.single[i as usize])
    }

    fn pair(&self, a: &str, b: &str) -> u64 {
        match (self.ids.get(a), self.ids.get(b)) {
            (Some(&x), Some(&y)) if x != y => {
                let key = if x < y { (x, y) } else { (y, x) };
                self.pairs.get(&key).copied().unwrap_or(0)
            }
            (Some(&x), Some(_)) => self.single[x as usize],
            _ => 0,
        }
    }

    fn contains(&self, w: &str) -> bool {
        self.ids.contains_key(w)
    }
}

/// Document-level co-occurrence counts over the training corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocCountIndex {
    counts: Counts,
    total_docs: u64,
}

impl DocCountIndex {
    /// Documents containing `w`.
    pub fn doc_freq(&self, w: &str) -> u64 {
        self.counts.single(w)
    }

    /// Documents containing both words.
    pub fn joint_doc_freq(&self, a: &str, b: &str) -> u64 {
        self.counts.pair(a, b)
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn contains(&self, w: &str) -> bool {
        self.counts.contains(w)
    }

    pub fn words(&self) -> &[String] {
        &self.counts.words
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_index(path, 0, 0, self.total_docs, &self.counts)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (kind, _, total, counts) = read_index(path)?;
        if kind != 0 {
            return Err(Error::format("coherence index", "not a document-count index"));
        }
        Ok(DocCountIndex {
            counts,
            total_docs: total,
        })
    }
}

/// Boolean sliding-window co-occurrence counts over a reference corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCountIndex {
    counts: Counts,
    window: usize,
    total_windows: u64,
}

impl WindowCountIndex {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn count(&self, w: &str) -> u64 {
        self.counts.single(w)
    }

    pub fn joint_count(&self, a: &str, b: &str) -> u64 {
        self.counts.pair(a, b)
    }

    pub fn prob(&self, w: &str) -> f64 {
        self.count(w) as f64 / self.total_windows as f64
    }

    pub fn joint_prob(&self, a: &str, b: &str) -> f64 {
        self.joint_count(a, b) as f64 / self.total_windows as f64
    }

    pub fn contains(&self, w: &str) -> bool {
        self.counts.contains(w)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_index(path, 1, self.window as u32, self.total_windows, &self.counts)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (kind, window, total, counts) = read_index(path)?;
        if kind != 1 {
            return Err(Error::format("coherence index", "not a sliding-window index"));
        }
        Ok(WindowCountIndex {
            counts,
            window: window as usize,
            total_windows: total,
        })
    }
}

/// Exact document and pair frequencies for the words in `universe`.
pub fn build_doc_index(
    docs: &[TokenizedDocument],
    universe: &BTreeSet<String>,
) -> Result<DocCountIndex> {
    if docs.is_empty() {
        return Err(Error::Empty("no documents to index"));
    }
    if universe.is_empty() {
        return Err(Error::Empty("coherence word universe"));
    }
    let mut counts = Counts::new(universe);
    for d in docs {
        let present = counts.present(&d.tokens);
        counts.observe(&present);
    }
    Ok(DocCountIndex {
        counts,
        total_docs: docs.len() as u64,
    })
}

/// Slide a `window`-token window one token at a time over each stream and
/// count, per window, which universe words (and pairs) it contains. A
/// stream shorter than the window contributes one truncated window; empty
/// streams contribute nothing. Windows never span two streams.
pub fn build_window_index<S: AsRef<[String]>>(
    streams: &[S],
    window: usize,
    universe: &BTreeSet<String>,
) -> Result<WindowCountIndex> {
    if window < 2 {
        return Err(Error::Config(format!("window size must be at least 2, got {window}")));
    }
    if universe.is_empty() {
        return Err(Error::Empty("coherence word universe"));
    }
    let mut counts = Counts::new(universe);
    let mut total = 0u64;
    for stream in streams {
        let toks = stream.as_ref();
        if toks.is_empty() {
            continue;
        }
        let ids: Vec<Option<u32>> = toks.iter().map(|t| counts.ids.get(t).copied()).collect();
        let n_windows = toks.len().saturating_sub(window) + 1;
        for start in 0..n_windows {
            let end = (start + window).min(toks.len());
            let present: BTreeSet<u32> = ids[start..end].iter().flatten().copied().collect();
            counts.observe(&present);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Empty("reference corpus has no tokens"));
    }
    Ok(WindowCountIndex {
        counts,
        window,
        total_windows: total,
    })
}

fn write_index(path: &Path, kind: u8, window: u32, total: u64, c: &Counts) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    buf.push(kind);
    buf.extend_from_slice(&window.to_le_bytes());
    buf.extend_from_slice(&total.to_le_bytes());
    buf.extend_from_slice(&(c.words.len() as u32).to_le_bytes());
    for w in &c.words {
        buf.extend_from_slice(&(w.len() as u32).to_le_bytes());
        buf.extend_from_slice(w.as_bytes());
    }
    for n in &c.single {
        buf.extend_from_slice(&n.to_le_bytes());
    }
    buf.extend_from_slice(&(c.pairs.len() as u64).to_le_bytes());
    for (&(a, b), n) in &c.pairs {
        buf.extend_from_slice(&a.to_le_bytes());
        buf.extend_from_slice(&b.to_le_bytes());
        buf.extend_from_slice(&n.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::format("coherence index", "truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_index(path: &Path) -> Result<(u8, u32, u64, Counts)> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { buf: &buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::format("coherence index", "bad magic"));
    }
    let version = r.u32()?;
    if version != INDEX_VERSION {
        return Err(Error::format(
            "coherence index",
            format!("unsupported version {version}"),
        ));
    }
    let kind = r.u8()?;
    let window = r.u32()?;
    let total = r.u64()?;
    let nwords = r.u32()? as usize;
    let mut universe = BTreeSet::new();
    let mut order = Vec::with_capacity(nwords);
    for _ in 0..nwords {
        let len = r.u32()? as usize;
        let w = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format("coherence index", "word is not UTF-8"))?
            .to_string();
        order.push(w.clone());
        universe.insert(w);
    }
    let mut counts = Counts::new(&universe);
    if counts.words != order {
        return Err(Error::format("coherence index", "word table is not sorted"));
    }
    for i in 0..nwords {
        counts.single[i] = r.u64()?;
    }
    let npairs = r.u64()?;
    for _ in 0..npairs {
        let (a, b, n) = (r.u32()?, r.u32()?, r.u64()?);
        if a >= b || b as usize >= nwords {
            return Err(Error::format("coherence index", "bad pair key"));
        }
        counts.pairs.insert((a, b), n);
    }
    if r.pos != buf.len() {
        return Err(Error::format("coherence index", "trailing bytes"));
    }
    Ok((kind, window, total, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn set(s: &str) -> BTreeSet<String> {
        toks(s).into_iter().collect()
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

    #[test]
    fn doc_counts() {
        let docs = [doc("w1 w2 x"), doc("w2 w1 w1"), doc("x y"), doc("y")];
        let idx = build_doc_index(&docs, &set("w1 w2 x")).unwrap();
        assert_eq!(idx.doc_freq("w1"), 2);
        assert_eq!(idx.joint_doc_freq("w1", "w2"), 2);
        assert_eq!(idx.joint_doc_freq("w2", "w1"), 2);
        assert_eq!(idx.joint_doc_freq("w1", "x"), 1);
        assert_eq!(idx.total_docs(), 4);
        assert!(!idx.contains("y"));
        assert_eq!(idx.doc_freq("y"), 0);
    }

    #[test]
    fn window_counts_abc() {
        let idx = build_window_index(&[toks("a b c")], 2, &set("a b c")).unwrap();
        assert_eq!(idx.total_windows(), 2);
        assert_eq!(idx.joint_count("a", "b"), 1);
        assert_eq!(idx.joint_count("b", "c"), 1);
        assert_eq!(idx.joint_count("a", "c"), 0);
    }

    #[test]
    fn repeated_word_has_no_pairs() {
        let idx = build_window_index(&[toks("a a a a a")], 3, &set("a b")).unwrap();
        assert_eq!(idx.count("a"), 3);
        assert_eq!(idx.joint_count("a", "b"), 0);
    }

    #[test]
    fn short_stream_is_one_window() {
        let idx = build_window_index(&[toks("a b")], 10, &set("a b")).unwrap();
        assert_eq!(idx.total_windows(), 1);
        assert_eq!(idx.joint_prob("a", "b"), 1.0);
        assert!(build_window_index(&[Vec::<String>::new()], 10, &set("a")).is_err());
        assert!(build_window_index(&[toks("a b")], 1, &set("a")).is_err());
    }

    #[test]
    fn persistence_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let w = build_window_index(&[toks("a b c a d b"), toks("c d")], 3, &set("a b c d")).unwrap();
        let p = dir.path().join("w.idx");
        w.save(&p).unwrap();
        assert_eq!(WindowCountIndex::load(&p).unwrap(), w);
        assert!(DocCountIndex::load(&p).is_err());

        let d = build_doc_index(&[doc("a b"), doc("b c")], &set("a b c")).unwrap();
        let p2 = dir.path().join("d.idx");
        d.save(&p2).unwrap();
        assert_eq!(DocCountIndex::load(&p2).unwrap(), d);

        let mut bytes = std::fs::read(&p2).unwrap();
        bytes.pop();
        std::fs::write(&p2, &bytes).unwrap();
        assert!(DocCountIndex::load(&p2).is_err());
    }
}
