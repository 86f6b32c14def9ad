use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sstot_core::coherence::{
    build_doc_index, build_window_index, score_topics, topic_word_lists, word_universe,
    CoherenceConfig, CoherenceReport,
};
use sstot_core::corpus::{
    bucketize, group_by_subject, ingest, BucketedCorpus, Document, InputFormat, Preprocessor,
    RepetitionPolicy, TokenizedDocument, Vocabulary,
};
use sstot_core::eval::{evaluate, read_gold, LabelMatrix};
use sstot_core::lexicon::{personalize, SymptomLexicon};
use sstot_core::model::{choose_k, select_k_scores, Checkpoint, ModelConfig, SeedAssignment};
use sstot_core::pipeline::{build_preprocessor, run_subject, shared_vocabulary, SubjectOptions};
use sstot_core::sentiment::PolarityLexicon;

use crate::config::{PipelineConfig, ReportFormat};
use crate::error::{CliError, Context};

pub const CORPUS_FILE: &str = "corpus.json";
pub const VOCAB_FILE: &str = "vocab.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MANIFEST_FILE: &str = "train_manifest.json";
pub const SUBJECTS_DIR: &str = "subjects";

/// Output of `preprocess`: every subject's bucketed corpus plus what is
/// needed to tokenize further text the same way.
#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusFile {
    pub bucket_days: u32,
    /// Words seen in the input, used to resolve letter-run collapsing.
    pub natural_words: Vec<String>,
    pub subjects: Vec<BucketedCorpus>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub subject_id: String,
    pub dir: String,
    pub documents: usize,
    pub buckets: usize,
    pub tokens: usize,
    pub seed_terms: usize,
    pub num_topics: usize,
    /// Held-out perplexity per candidate K, when a grid was given.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub perplexity: Vec<(usize, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainManifest {
    pub model: ModelConfig,
    pub vocabulary_fingerprint: String,
    pub subjects: Vec<SubjectEntry>,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text)
        .map_err(sstot_core::Error::from)
        .context(|| path.display().to_string())
}

/// A directory name for a subject id: anything outside `[A-Za-z0-9._-]`
/// becomes `_`.
pub fn subject_dir_name(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || s == "." || s == ".." {
        format!("_{s}")
    } else {
        s
    }
}

fn subject_dirs<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<String>, CliError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for id in ids {
        let d = subject_dir_name(id);
        if let Some(prev) = seen.insert(d.clone(), id) {
            return Err(CliError::Config(format!(
                "subjects `{prev}` and `{id}` map to the same output directory `{d}`"
            )));
        }
        out.push(d);
    }
    Ok(out)
}

fn load_lexicons(cfg: &PipelineConfig) -> Result<(SymptomLexicon, PolarityLexicon), CliError> {
    let lexicon = match &cfg.lexicon {
        Some(p) => SymptomLexicon::load(p).context(|| "symptom lexicon".into())?,
        None => SymptomLexicon::bundled(),
    };
    let polarity = match &cfg.polarity {
        Some(p) => PolarityLexicon::load(p).context(|| "polarity lexicon".into())?,
        None => PolarityLexicon::bundled(),
    };
    Ok((lexicon, polarity))
}

fn preprocessor(
    lexicon: &SymptomLexicon,
    polarity: &PolarityLexicon,
    natural_words: &[String],
) -> Preprocessor {
    let mut pp = build_preprocessor(lexicon, polarity, None);
    pp.repetition =
        RepetitionPolicy::CollapseWithFallback(natural_words.iter().cloned().collect::<HashSet<_>>());
    pp
}

fn load_corpus(out_dir: &Path) -> Result<(CorpusFile, Vocabulary), CliError> {
    let corpus: CorpusFile = parse_json(&out_dir.join(CORPUS_FILE))?;
    let vocab: Vocabulary = parse_json(&out_dir.join(VOCAB_FILE))?;
    Ok((corpus, vocab))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreprocessStats {
    pub documents: usize,
    pub skipped_records: usize,
    pub subjects: usize,
    pub vocabulary: usize,
    pub tokens: usize,
    pub dropped_tokens: usize,
    pub buckets: usize,
}

/// Ingest, normalize, build the shared vocabulary and bucket every subject.
pub fn preprocess(cfg: &PipelineConfig) -> Result<PreprocessStats, CliError> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Config("no input corpus given (--input)".into()))?;
    let format = cfg
        .input_format
        .map(InputFormat::from)
        .unwrap_or_else(|| InputFormat::from_path(input));
    let (lexicon, polarity) = load_lexicons(cfg)?;
    let report = ingest(input, format).context(|| "ingest".into())?;
    let docs: &[Document] = &report.documents;

    let pp = build_preprocessor(&lexicon, &polarity, Some(docs));
    let natural_words: Vec<String> = {
        let set: BTreeSet<String> = pp.natural_words(docs).into_iter().collect();
        set.into_iter().collect()
    };
    let tokenized: Vec<TokenizedDocument> = docs.iter().map(|d| pp.preprocess(d)).collect();
    let vocab = shared_vocabulary(&tokenized, &lexicon, cfg.min_df).context(|| "vocabulary".into())?;

    let mut subjects = Vec::new();
    for (id, docs) in group_by_subject(tokenized) {
        if docs.len() < cfg.min_documents {
            log::warn!(
                "subject `{id}` has {} documents, fewer than the recommended {}",
                docs.len(),
                cfg.min_documents
            );
        }
        subjects.push(bucketize(&docs, cfg.bucket_days, &vocab).context(|| format!("subject `{id}`"))?);
    }

    let stats = PreprocessStats {
        documents: docs.len(),
        skipped_records: report.skipped.len(),
        subjects: subjects.len(),
        vocabulary: vocab.len(),
        tokens: subjects.iter().map(BucketedCorpus::total_tokens).sum(),
        dropped_tokens: subjects.iter().map(|c| c.dropped_oov).sum(),
        buckets: subjects.iter().map(BucketedCorpus::num_buckets).sum(),
    };
    let file = CorpusFile {
        bucket_days: cfg.bucket_days,
        natural_words,
        subjects,
    };
    create_dir(&cfg.out_dir)?;
    write(&cfg.out_dir.join(CORPUS_FILE), to_json(&file))?;
    write(&cfg.out_dir.join(VOCAB_FILE), to_json(&vocab))?;
    Ok(stats)
}

struct Trained {
    entry: SubjectEntry,
    labels: LabelMatrix,
}

fn train_one(
    corpus: &BucketedCorpus,
    dir_name: &str,
    vocab: &Vocabulary,
    lexicon: &SymptomLexicon,
    polarity: &PolarityLexicon,
    cfg: &PipelineConfig,
) -> Result<Trained, CliError> {
    let id = &corpus.subject_id;
    let ctx = || format!("subject `{id}`");
    let opts = SubjectOptions {
        bucket_days: corpus.duration_days,
        max_seeds_per_category: cfg.max_seeds_per_category,
    };
    let mut model = cfg.model.clone();
    let mut perplexity = Vec::new();
    if !cfg.k_grid.is_empty() {
        let seeds = personalize(lexicon, id, &corpus.documents, polarity, opts.max_seeds_per_category);
        let seed_map = SeedAssignment::from_seed_set(&seeds, vocab).context(ctx)?;
        perplexity = select_k_scores(corpus, &seed_map, &model, &cfg.k_grid).context(ctx)?;
        model.num_topics = choose_k(&perplexity).expect("non-empty grid");
        log::info!("subject `{id}`: selected K = {}", model.num_topics);
    }
    let run = run_subject(&corpus.documents, vocab, lexicon, polarity, &model, &opts).context(ctx)?;

    let dir = cfg.out_dir.join(SUBJECTS_DIR).join(dir_name);
    create_dir(&dir)?;
    let cp = Checkpoint::new(id, &model, vocab, &run.dists, Some(run.state.z.clone()));
    write(&dir.join("model.json"), cp.to_json().context(ctx)?)?;
    write(&dir.join("seeds.json"), to_json(&run.seeds))?;
    write(&dir.join("trend.csv"), run.trend.probability_csv())?;
    write(&dir.join("labels.csv"), run.trend.label_csv())?;
    write(&dir.join("heatmap.svg"), run.trend.svg_heatmap(id))?;

    Ok(Trained {
        entry: SubjectEntry {
            subject_id: id.clone(),
            dir: format!("{SUBJECTS_DIR}/{dir_name}"),
            documents: corpus.documents.len(),
            buckets: run.corpus.num_buckets(),
            tokens: run.corpus.total_tokens(),
            seed_terms: run.seeds.len(),
            num_topics: model.num_topics,
            perplexity,
        },
        labels: LabelMatrix::from_trend(id, &run.trend),
    })
}

/// Train one model per subject, at most `jobs` at a time (0 lets the
/// thread pool decide).
pub fn train(cfg: &PipelineConfig, jobs: usize) -> Result<TrainManifest, CliError> {
    let (corpus, vocab) = load_corpus(&cfg.out_dir)?;
    let (lexicon, polarity) = load_lexicons(cfg)?;
    if corpus.subjects.is_empty() {
        return Err(CliError::Config("the preprocessed corpus has no subjects".into()));
    }
    let dirs = subject_dirs(corpus.subjects.iter().map(|c| c.subject_id.as_str()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Trained, CliError>> = pool.install(|| {
        corpus
            .subjects
            .par_iter()
            .zip(dirs.par_iter())
            .map(|(c, d)| train_one(c, d, &vocab, &lexicon, &polarity, cfg))
            .collect()
    });

    let mut predictions = LabelMatrix::new();
    let mut subjects = Vec::new();
    for r in results {
        let t = r?;
        for ((subject, bucket), labels) in t.labels.iter() {
            predictions.insert(subject, *bucket, *labels);
        }
        subjects.push(t.entry);
    }
    let manifest = TrainManifest {
        model: cfg.model.clone(),
        vocabulary_fingerprint: vocab.fingerprint(),
        subjects,
    };
    write(&cfg.out_dir.join(PREDICTIONS_FILE), predictions.to_csv())?;
    write(&cfg.out_dir.join(MANIFEST_FILE), to_json(&manifest))?;
    Ok(manifest)
}

#[derive(Debug, Serialize)]
pub struct CoherenceSummaryRow {
    pub subject_id: String,
    pub umass: f64,
    pub uci: f64,
    pub npmi: f64,
}

/// Read a plain-text reference corpus, one document per line, and
/// tokenize it like the training data.
fn reference_streams(path: &Path, pp: &Preprocessor) -> Result<Vec<Vec<String>>, CliError> {
    let text = read(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| pp.tokenize(line).0)
        .filter(|t| !t.is_empty())
        .collect())
}

/// Score each subject's topics: UMass over that subject's own documents,
/// UCI and NPMI over sliding windows of the reference corpus.
pub fn coherence(cfg: &PipelineConfig) -> Result<Vec<CoherenceSummaryRow>, CliError> {
    let reference = cfg
        .reference
        .as_deref()
        .ok_or_else(|| CliError::Config("no reference corpus given (--reference)".into()))?;
    let (corpus, vocab) = load_corpus(&cfg.out_dir)?;
    let (lexicon, polarity) = load_lexicons(cfg)?;
    let pp = preprocessor(&lexicon, &polarity, &corpus.natural_words);
    let streams = reference_streams(reference, &pp)?;
    let ccfg = CoherenceConfig {
        top_n: cfg.coherence.top_n,
        umass_eps: cfg.coherence.umass_eps,
        pmi_eps: cfg.coherence.pmi_eps,
        umass_aggregation: cfg.coherence.umass_aggregation,
    };
    let dirs = subject_dirs(corpus.subjects.iter().map(|c| c.subject_id.as_str()))?;

    let mut summary = Vec::new();
    for (c, d) in corpus.subjects.iter().zip(&dirs) {
        let id = &c.subject_id;
        let ctx = || format!("subject `{id}`");
        let dir = cfg.out_dir.join(SUBJECTS_DIR).join(d);
        let cp_path = dir.join("model.json");
        if !cp_path.exists() {
            return Err(CliError::io(
                &cp_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no checkpoint; run `train` first"),
            ));
        }
        let cp = Checkpoint::load(&cp_path).context(ctx)?;
        cp.check_vocabulary(&vocab).context(ctx)?;
        let topics = topic_word_lists(&cp.distributions(), &vocab, ccfg.top_n).context(ctx)?;
        let universe = word_universe(&topics);
        let doc_index = build_doc_index(&c.documents, &universe).context(ctx)?;
        let win_index =
            build_window_index(&streams, cfg.coherence.window, &universe).context(|| "reference corpus".into())?;
        let report: CoherenceReport = score_topics(&topics, &doc_index, &win_index, &ccfg).context(ctx)?;
        if cfg.wants(ReportFormat::Json) {
            write(&dir.join("coherence.json"), report.to_json().context(ctx)? + "\n")?;
        }
        if cfg.wants(ReportFormat::Csv) {
            write(&dir.join("coherence.csv"), report.to_csv())?;
        }
        summary.push(CoherenceSummaryRow {
            subject_id: id.clone(),
            umass: report.average.umass,
            uci: report.average.uci,
            npmi: report.average.npmi,
        });
    }
    if cfg.wants(ReportFormat::Json) {
        write(&cfg.out_dir.join("coherence_summary.json"), to_json(&summary))?;
    }
    if cfg.wants(ReportFormat::Csv) {
        let mut csv = String::from("subject_id,umass,uci,npmi\n");
        for r in &summary {
            csv.push_str(&format!("{},{},{},{}\n", quote(&r.subject_id), r.umass, r.uci, r.npmi));
        }
        write(&cfg.out_dir.join("coherence_summary.csv"), csv)?;
    }
    Ok(summary)
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Score predicted labels against gold annotations.
pub fn evaluate_cmd(
    cfg: &PipelineConfig,
    gold: &Path,
    predictions: Option<&Path>,
) -> Result<sstot_core::eval::EvalReport, CliError> {
    let pred_path: PathBuf = predictions
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join(PREDICTIONS_FILE));
    let pred = LabelMatrix::read_csv(&pred_path).context(|| pred_path.display().to_string())?;
    let gold_rows = read_gold(gold).context(|| gold.display().to_string())?;
    let report = evaluate(&pred, &gold_rows).context(|| "evaluate".into())?;
    create_dir(&cfg.out_dir)?;
    if cfg.wants(ReportFormat::Json) {
        write(&cfg.out_dir.join("eval.json"), report.to_json().context(|| "eval".into())? + "\n")?;
    }
    if cfg.wants(ReportFormat::Csv) {
        write(&cfg.out_dir.join("eval_table.csv"), report.to_table_csv())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dir_names_are_safe() {
        assert_eq!(subject_dir_name("user_01"), "user_01");
        assert_eq!(subject_dir_name("a/b c"), "a_b_c");
        assert_eq!(subject_dir_name(".."), "_..");
        assert!(subject_dirs(["a/b", "a_b"]).is_err());
    }
}
