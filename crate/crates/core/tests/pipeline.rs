mod common;

use std::io::Write;

use common::*;
use sstot_core::coherence::{
    build_doc_index, build_window_index, score_model, topic_word_lists, word_universe,
    CoherenceConfig, DocCountIndex, WindowCountIndex,
};
use sstot_core::corpus::{ingest, InputFormat, TokenizedDocument};
use sstot_core::eval::{evaluate, LabelMatrix};
use sstot_core::lexicon::SymptomLexicon;
use sstot_core::model::{Checkpoint, ModelConfig};
use sstot_core::pipeline::{build_preprocessor, run_subject, shared_vocabulary, SubjectOptions};
use sstot_core::sentiment::PolarityLexicon;
use sstot_core::Symptom;

#[test]
fn jsonl_to_labels_and_coherence() {
    let (docs, gold) = planted_subject(3);
    let mut f = tempfile::Builder::new().suffix(".jsonl").tempfile().unwrap();
    for d in &docs {
        writeln!(f, "{}", serde_json::to_string(d).unwrap()).unwrap();
    }
    writeln!(f, "{{\"subject_id\":\"planted\"}}").unwrap();
    let report = ingest(f.path(), InputFormat::Jsonl).unwrap();
    assert_eq!(report.documents, docs);
    assert_eq!(report.skipped.len(), 1);

    let lexicon = SymptomLexicon::bundled();
    let polarity = PolarityLexicon::bundled();
    let pp = build_preprocessor(&lexicon, &polarity, Some(&report.documents));
    let toks: Vec<TokenizedDocument> = report.documents.iter().map(|d| pp.preprocess(d)).collect();
    let vocab = shared_vocabulary(&toks, &lexicon, 1).unwrap();
    let cfg = ModelConfig {
        iterations: 200,
        ..Default::default()
    };
    let run = run_subject(&toks, &vocab, &lexicon, &polarity, &cfg, &SubjectOptions::default()).unwrap();
    assert_eq!(run.corpus.num_buckets(), BUCKETS);
    assert!(!run.seeds.seeds(Symptom::S3).is_empty());
    assert!(!run.seeds.seeds(Symptom::S5).is_empty());

    let pred = LabelMatrix::from_trend("planted", &run.trend);
    let ev = evaluate(&pred, &gold).unwrap();
    assert_eq!(ev.buckets, BUCKETS);
    assert_eq!(ev.subset_accuracy, 1.0, "{}", pred.to_csv());

    // A checkpoint restores the same distributions and rejects other vocabularies.
    let dir = tempfile::tempdir().unwrap();
    let cp_path = dir.path().join("model.json");
    Checkpoint::new("planted", &cfg, &vocab, &run.dists, None).save(&cp_path).unwrap();
    let cp = Checkpoint::load(&cp_path).unwrap();
    assert_eq!(cp.distributions(), run.dists);
    cp.check_vocabulary(&vocab).unwrap();
    let other = shared_vocabulary(&toks[..20], &lexicon, 1).unwrap();
    assert!(cp.check_vocabulary(&other).is_err());

    // Indexes survive a save/load cycle and score identically.
    let ccfg = CoherenceConfig {
        top_n: 8,
        ..Default::default()
    };
    let uni = word_universe(&topic_word_lists(&run.dists, &vocab, ccfg.top_n).unwrap());
    let di = build_doc_index(&toks, &uni).unwrap();
    let streams: Vec<Vec<String>> = toks.iter().map(|d| d.tokens.clone()).collect();
    let wi = build_window_index(&streams, 10, &uni).unwrap();
    di.save(&dir.path().join("d.idx")).unwrap();
    wi.save(&dir.path().join("w.idx")).unwrap();
    let di2 = DocCountIndex::load(&dir.path().join("d.idx")).unwrap();
    let wi2 = WindowCountIndex::load(&dir.path().join("w.idx")).unwrap();
    let a = score_model(&run.dists, &vocab, &di, &wi, &ccfg).unwrap();
    let b = score_model(&run.dists, &vocab, &di2, &wi2, &ccfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.topics.len(), cfg.num_topics);
    for t in &a.topics {
        assert!(t.umass.is_finite() && (-1.0..=1.0).contains(&t.npmi), "{t:?}");
    }
}
