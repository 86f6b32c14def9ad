//! Bucket-level multi-label evaluation and inter-annotator agreement.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TrendMatrix;
use crate::symptom::{Symptom, SymptomSet};

/// Key of a bucket across subjects.
pub type BucketKey = (String, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldBucket {
    pub subject_id: String,
    pub bucket_index: usize,
    pub labels: SymptomSet,
}

/// Predicted (or gold) label sets keyed by subject and bucket index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMatrix {
    entries: BTreeMap<BucketKey, SymptomSet>,
}

impl LabelMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_trend(subject_id: &str, trend: &TrendMatrix) -> Self {
        let mut m = Self::new();
        m.add_trend(subject_id, trend);
        m
    }

    pub fn add_trend(&mut self, subject_id: &str, trend: &TrendMatrix) {
        for (row, &b) in trend.bucket_index.iter().enumerate() {
            let set = trend.labels[row]
                .iter()
                .enumerate()
                .filter(|(_, &on)| on)
                .filter_map(|(s, _)| Symptom::from_index(s))
                .collect();
            self.entries.insert((subject_id.to_string(), b), set);
        }
    }

    /// Union `labels` into the bucket's set.
    pub fn insert(&mut self, subject_id: &str, bucket_index: usize, labels: SymptomSet) {
        let e = self
            .entries
            .entry((subject_id.to_string(), bucket_index))
            .or_default();
        *e = e.union(labels);
    }

    pub fn get(&self, subject_id: &str, bucket_index: usize) -> Option<SymptomSet> {
        self.entries
            .get(&(subject_id.to_string(), bucket_index))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BucketKey, &SymptomSet)> {
        self.entries.iter()
    }

    pub fn to_gold(&self) -> Vec<GoldBucket> {
        self.entries
            .iter()
            .map(|((s, b), l)| GoldBucket {
                subject_id: s.clone(),
                bucket_index: *b,
                labels: *l,
            })
            .collect()
    }

    /// `subject_id,bucket_index,labels` CSV, the gold file layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id,bucket_index,labels\n");
        for ((s, b), l) in &self.entries {
            let _ = writeln!(out, "{},{},{}", csv_field(s), b, l.to_codes());
        }
        out
    }

    /// Read a `subject_id,bucket_index,labels` file. Repeated rows for one
    /// bucket are merged by union.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut m = Self::new();
        for g in read_gold(path)? {
            m.insert(&g.subject_id, g.bucket_index, g.labels);
        }
        Ok(m)
    }

    /// Read a per-subject label matrix (`bucket_index,start_date,S1..`, 0/1).
    pub fn read_trend_labels(path: &Path, subject_id: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let headers = rdr.headers()?.clone();
        let mut cols = Vec::new();
        for (i, h) in headers.iter().enumerate().skip(2) {
            let s: Symptom = h.parse()?;
            cols.push((i, s));
        }
        if headers.get(0) != Some("bucket_index") {
            return Err(Error::format("label file", "expected a bucket_index column first"));
        }
        let mut m = Self::new();
        for rec in rdr.records() {
            let rec = rec?;
            let b = parse_index(&rec[0])?;
            let mut set = SymptomSet::empty();
            for &(i, s) in &cols {
                match rec.get(i).map(str::trim) {
                    Some("1") => set.insert(s),
                    Some("0") => {}
                    other => {
                        return Err(Error::format(
                            "label file",
                            format!("bucket {b}: expected 0 or 1, got {other:?}"),
                        ))
                    }
                }
            }
            m.insert(subject_id, b, set);
        }
        Ok(m)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::format("csv", format!("{kind:?}")),
    }
}

fn parse_index(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::format("label file", format!("bad bucket index `{s}`")))
}

/// Read gold annotations (`subject_id,bucket_index,labels`, labels
/// `;`-joined, empty for none). Rows are returned as written.
pub fn read_gold(path: &Path) -> Result<Vec<GoldBucket>> {
    #[derive(Deserialize)]
    struct Row {
        subject_id: String,
        bucket_index: String,
        #[serde(default)]
        labels: Option<String>,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        out.push(GoldBucket {
            bucket_index: parse_index(&row.bucket_index)?,
            labels: SymptomSet::parse_codes(row.labels.as_deref().unwrap_or(""))?,
            subject_id: row.subject_id,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymptomScores {
    pub symptom: Symptom,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub accuracy: f64,
    /// Gold-positive buckets.
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl SymptomScores {
    fn from_counts(symptom: Symptom, tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_score = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        SymptomScores {
            symptom,
            precision,
            recall,
            f_score,
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            support: tp + fn_,
            tp,
            fp,
            fn_,
            tn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub buckets: usize,
    pub per_symptom: Vec<SymptomScores>,
    /// Unweighted mean of the per-symptom accuracies.
    pub average_accuracy: f64,
    /// Fraction of buckets whose predicted set equals the gold set.
    pub subset_accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f_score: f64,
}

impl EvalReport {
    pub fn symptom(&self, s: Symptom) -> &SymptomScores {
        &self.per_symptom[s.index()]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rows P, R, F and ACC; columns S1..S9 and AA. The AA column holds
    /// macro means for P/R/F and the average accuracy on the ACC row.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("metric");
        for s in Symptom::ALL {
            let _ = write!(out, ",{}", s.code());
        }
        out.push_str(",AA\n");
        let rows: [(&str, fn(&SymptomScores) -> f64, f64); 4] = [
            ("P", |s| s.precision, self.macro_precision),
            ("R", |s| s.recall, self.macro_recall),
            ("F", |s| s.f_score, self.macro_f_score),
            ("ACC", |s| s.accuracy, self.average_accuracy),
        ];
        for (name, get, aa) in rows {
            out.push_str(name);
            for s in &self.per_symptom {
                let _ = write!(out, ",{:.4}", get(s));
            }
            let _ = writeln!(out, ",{aa:.4}");
        }
        out
    }
}

/// Per-symptom binary evaluation over buckets. Gold rows for the same bucket
/// are merged by union; an empty gold set counts as all-negative.
pub fn evaluate(pred: &LabelMatrix, gold: &[GoldBucket]) -> Result<EvalReport> {
    let mut g = LabelMatrix::new();
    for b in gold {
        g.insert(&b.subject_id, b.bucket_index, b.labels);
    }
    if g.is_empty() {
        return Err(Error::Empty("no gold buckets"));
    }
    let show = |keys: Vec<&BucketKey>| {
        keys.iter()
            .map(|(s, b)| format!("{s}#{b}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let unpredicted: Vec<&BucketKey> = g.entries.keys().filter(|k| !pred.entries.contains_key(*k)).collect();
    let ungolded: Vec<&BucketKey> = pred.entries.keys().filter(|k| !g.entries.contains_key(*k)).collect();
    if !unpredicted.is_empty() || !ungolded.is_empty() {
        let mut parts = Vec::new();
        if !unpredicted.is_empty() {
            parts.push(format!("no prediction for {}", show(unpredicted)));
        }
        if !ungolded.is_empty() {
            parts.push(format!("no gold annotation for {}", show(ungolded)));
        }
        return Err(Error::BucketMismatch(parts.join("; ")));
    }
    let mut counts = [[0usize; 4]; Symptom::COUNT];
    let mut exact = 0usize;
    for (k, gold_set) in g.iter() {
        let p = pred.entries[k];
        if p == *gold_set {
            exact += 1;
        }
        for s in Symptom::ALL {
            let slot = match (p.contains(s), gold_set.contains(s)) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            counts[s.index()][slot] += 1;
        }
    }
    let per_symptom: Vec<SymptomScores> = Symptom::ALL
        .iter()
        .map(|&s| {
            let [tp, fp, fn_, tn] = counts[s.index()];
            SymptomScores::from_counts(s, tp, fp, fn_, tn)
        })
        .collect();
    let n = Symptom::COUNT as f64;
    let mean = |f: fn(&SymptomScores) -> f64| per_symptom.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        buckets: g.len(),
        average_accuracy: mean(|s| s.accuracy),
        macro_precision: mean(|s| s.precision),
        macro_recall: mean(|s| s.recall),
        macro_f_score: mean(|s| s.f_score),
        subset_accuracy: exact as f64 / g.len() as f64,
        per_symptom,
    })
}

/// Cohen's kappa between two annotators labelling the same items.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("annotation sequences"));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let p_o = agree as f64 / n;
    let mut marginals: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let p_e: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
