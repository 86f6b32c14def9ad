use std::collections::HashSet;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Matrix, ModelConfig, SeedAssignment, TopicDistributions};
use crate::corpus::BucketedCorpus;
use crate::symptom::Symptom;

/// Masked symptom probabilities and labels per bucket. Rows are not
/// renormalized after masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendMatrix {
    pub bucket_index: Vec<usize>,
    pub start: Vec<DateTime<Utc>>,
    /// Bucket × symptom.
    pub masked: Matrix,
    pub labels: Vec<Vec<bool>>,
}

/// Distinct seed word types of each seeded topic present in each bucket.
pub fn seed_type_counts(
    corpus: &BucketedCorpus,
    seeds: &SeedAssignment,
    num_symptoms: usize,
) -> Vec<Vec<usize>> {
    corpus
        .buckets
        .iter()
        .map(|b| {
            let mut row = vec![0usize; num_symptoms];
            let distinct: HashSet<u32> = b.token_ids.iter().copied().collect();
            for w in distinct {
                if let Some(t) = seeds.topic_of(w).filter(|&t| t < num_symptoms) {
                    row[t] += 1;
                }
            }
            row
        })
        .collect()
}

/// Zero a symptom in a bucket holding fewer than `tau_count` of its seed
/// types, zero the whole row when the bucket's seed-sentence polarity is
/// positive, then label entries strictly above `tau_prob`.
pub fn apply_masks(
    theta: &Matrix,
    num_symptoms: usize,
    seed_types: &[Vec<usize>],
    polarity: &[f64],
    tau_count: usize,
    tau_prob: f64,
) -> (Matrix, Vec<Vec<bool>>) {
    let mut masked = Matrix::zeros(theta.rows(), num_symptoms);
    let mut labels = Vec::with_capacity(theta.rows());
    for b in 0..theta.rows() {
        let positive = polarity[b] > 0.0;
        let row = masked.row_mut(b);
        for (s, x) in row.iter_mut().enumerate() {
            *x = if positive || seed_types[b][s] < tau_count {
                0.0
            } else {
                theta.get(b, s)
            };
        }
        labels.push(row.iter().map(|&p| p > tau_prob).collect());
    }
    (masked, labels)
}

/// Turn θ into a [`TrendMatrix`] over the seeded topics.
/// `bucket_polarity(b)` gives the aggregated seed-sentence polarity of
/// bucket `b`.
pub fn mask_and_label(
    dists: &TopicDistributions,
    corpus: &BucketedCorpus,
    seeds: &SeedAssignment,
    bucket_polarity: &dyn Fn(usize) -> f64,
    cfg: &ModelConfig,
) -> TrendMatrix {
    let s = cfg.num_seeded;
    let counts = seed_type_counts(corpus, seeds, s);
    let polarity: Vec<f64> = (0..corpus.num_buckets()).map(bucket_polarity).collect();
    let (masked, labels) = apply_masks(&dists.theta, s, &counts, &polarity, cfg.tau_count, cfg.tau_prob);
    TrendMatrix {
        bucket_index: corpus.buckets.iter().map(|b| b.index).collect(),
        start: corpus.buckets.iter().map(|b| b.start).collect(),
        masked,
        labels,
    }
}

fn symptom_header(n: usize) -> String {
    let mut h = String::from("bucket_index,start_date");
    for s in 1..=n {
        let _ = write!(h, ",S{s}");
    }
    h
}

impl TrendMatrix {
    pub fn num_buckets(&self) -> usize {
        self.masked.rows()
    }

    pub fn num_symptoms(&self) -> usize {
        self.masked.cols()
    }

    /// `bucket_index,start_date,S1..` with masked probabilities.
    pub fn probability_csv(&self) -> String {
        let mut out = symptom_header(self.num_symptoms());
        out.push('\n');
        for b in 0..self.num_buckets() {
            let _ = write!(out, "{},{}", self.bucket_index[b], self.start[b].format("%Y-%m-%d"));
            for p in self.masked.row(b) {
                let _ = write!(out, ",{p}");
            }
            out.push('\n');
        }
        out
    }

    /// Same layout as [`Self::probability_csv`] with 0/1 labels.
    pub fn label_csv(&self) -> String {
        let mut out = symptom_header(self.num_symptoms());
        out.push('\n');
        for b in 0..self.num_buckets() {
            let _ = write!(out, "{},{}", self.bucket_index[b], self.start[b].format("%Y-%m-%d"));
            for &l in &self.labels[b] {
                out.push_str(if l { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }

    /// Self-contained SVG heatmap: buckets along x, symptoms along y, cell
    /// opacity equal to the masked probability. Labelled cells get a dot.
    pub fn svg_heatmap(&self, title: &str) -> String {
        const CELL: usize = 22;
        const LEFT: usize = 190;
        const TOP: usize = 40;
        const BOTTOM: usize = 80;
        let (nb, ns) = (self.num_buckets(), self.num_symptoms());
        let width = LEFT + nb.max(1) * CELL + 20;
        let height = TOP + ns * CELL + BOTTOM;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, "<title>{}</title>", xml_escape(title));
        let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#,
            xml_escape(title)
        );
        for row in 0..ns {
            let y = TOP + row * CELL;
            let name = Symptom::from_index(row).map_or(String::new(), |sym| {
                format!("{} {}", sym.code(), sym.name())
            });
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6,
                y + CELL / 2 + 4,
                xml_escape(&name)
            );
            for b in 0..nb {
                let x = LEFT + b * CELL;
                let p = self.masked.get(b, row);
                let _ = writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#b2182b" fill-opacity="{p:.4}" stroke="#dddddd"><title>S{} bucket {}: {p:.4}</title></rect>"##,
                    row + 1,
                    self.bucket_index[b]
                );
                if self.labels[b][row] {
                    let _ = writeln!(
                        s,
                        r##"<circle cx="{}" cy="{}" r="3" fill="#000000"/>"##,
                        x + CELL / 2,
                        y + CELL / 2
                    );
                }
            }
        }
        let step = nb.div_ceil(16).max(1);
        let base = TOP + ns * CELL + 12;
        for b in (0..nb).step_by(step) {
            let x = LEFT + b * CELL + CELL / 2;
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{base}" transform="rotate(45 {x} {base})">{}</text>"#,
                self.start[b].format("%Y-%m-%d")
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seed_count_mask() {
        // Bucket 0 has one distinct S5 seed word (repeated), bucket 1 has two.
        let corpus = BucketedCorpus::from_token_ids("u", vec![vec![7, 7, 7, 1], vec![7, 8]]);
        let seeds = SeedAssignment::from_pairs(10, [(7, 4), (8, 4)]).unwrap();
        let counts = seed_type_counts(&corpus, &seeds, 9);
        assert_eq!(counts[0][4], 1);
        assert_eq!(counts[1][4], 2);
        let theta = Matrix::from_rows(vec![vec![0.1; 10], vec![0.1; 10]]);
        let (masked, _) = apply_masks(&theta, 9, &counts, &[0.0, 0.0], 2, 0.05);
        assert_eq!(masked.get(0, 4), 0.0);
        assert_eq!(masked.get(1, 4), 0.1);
    }

    #[test]
    fn positive_polarity_zeroes_row() {
        let theta = Matrix::from_rows(vec![vec![0.5; 9]]);
        let (masked, labels) = apply_masks(&theta, 9, &[vec![5; 9]], &[0.3], 1, 0.1);
        assert!(masked.row(0).iter().all(|&x| x == 0.0));
        assert!(labels[0].iter().all(|&l| !l));
    }

    #[test]
    fn threshold_labels() {
        let mut row = vec![0.50, 0.30, 0.05];
        row.extend(std::iter::repeat_n(0.15 / 12.0, 12));
        let theta = Matrix::from_rows(vec![row]);
        let (masked, labels) = apply_masks(&theta, 9, &[vec![9; 9]], &[-1.0], 1, 0.4);
        assert_eq!(masked.get(0, 1), 0.30);
        let on: Vec<usize> = (0..9).filter(|&s| labels[0][s]).collect();
        assert_eq!(on, [0]);
    }

    #[test]
    fn csv_and_svg_exports() {
        let corpus = BucketedCorpus::from_token_ids("u", vec![vec![0], vec![1]]);
        let seeds = SeedAssignment::from_pairs(2, [(0, 0), (1, 1)]).unwrap();
        let dists = TopicDistributions {
            theta: Matrix::from_rows(vec![vec![0.75, 0.25], vec![0.5, 0.5]]),
            phi: Matrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
        };
        let cfg = ModelConfig {
            num_topics: 2,
            num_seeded: 2,
            tau_count: 1,
            tau_prob: 0.4,
            ..Default::default()
        };
        let trend = mask_and_label(&dists, &corpus, &seeds, &|_| 0.0, &cfg);
        assert_eq!(
            trend.probability_csv(),
            "bucket_index,start_date,S1,S2\n0,1970-01-01,0.75,0\n1,1970-01-02,0,0.5\n"
        );
        assert_eq!(
            trend.label_csv(),
            "bucket_index,start_date,S1,S2\n0,1970-01-01,1,0\n1,1970-01-02,0,1\n"
        );
        let svg = trend.svg_heatmap("subject <u>");
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("subject &lt;u&gt;"));
        assert!(svg.contains("fill-opacity=\"0.7500\""));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    fn arb_case() -> impl Strategy<Value = (Matrix, Vec<Vec<usize>>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|b| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), b),
                prop::collection::vec(prop::collection::vec(0usize..5, 9), b),
                prop::collection::vec(-1.0f64..1.0, b),
            )
                .prop_map(|(rows, counts, pol)| {
                    let rows = rows
                        .into_iter()
                        .map(|r| {
                            let s: f64 = r.iter().sum::<f64>() + 1e-9;
                            r.into_iter().map(|x| x / s).collect()
                        })
                        .collect();
                    (Matrix::from_rows(rows), counts, pol)
                })
        })
    }

    proptest! {
        #[test]
        fn labels_match_threshold((theta, counts, pol) in arb_case(), tc in 1usize..5, tp in 0.01f64..0.99) {
            let (masked, labels) = apply_masks(&theta, 9, &counts, &pol, tc, tp);
            for b in 0..theta.rows() {
                for s in 0..9 {
                    prop_assert_eq!(labels[b][s], masked.get(b, s) > tp);
                    prop_assert!(masked.get(b, s) == 0.0 || masked.get(b, s) == theta.get(b, s));
                }
            }
        }
    }
}
