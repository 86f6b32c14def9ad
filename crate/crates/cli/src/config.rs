use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sstot_core::coherence::{UmassAggregation, DEFAULT_PMI_EPS, DEFAULT_TOP_N, DEFAULT_UMASS_EPS, DEFAULT_WINDOW};
use sstot_core::corpus::InputFormat;
use sstot_core::model::ModelConfig;
use sstot_core::pipeline::DEFAULT_BUCKET_DAYS;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => InputFormat::Jsonl,
            FormatArg::Csv => InputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSection {
    pub top_n: usize,
    pub window: usize,
    pub umass_eps: f64,
    pub pmi_eps: f64,
    pub umass_aggregation: UmassAggregation,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        CoherenceSection {
            top_n: DEFAULT_TOP_N,
            window: DEFAULT_WINDOW,
            umass_eps: DEFAULT_UMASS_EPS,
            pmi_eps: DEFAULT_PMI_EPS,
            umass_aggregation: UmassAggregation::Mean,
        }
    }
}

/// Everything a run needs. Read from TOML; command-line flags override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub input_format: Option<FormatArg>,
    /// Symptom lexicon; the bundled starter lexicon when unset.
    pub lexicon: Option<PathBuf>,
    /// Polarity lexicon; the bundled one when unset.
    pub polarity: Option<PathBuf>,
    /// Plain-text reference corpus for UCI/NPMI, one document per line.
    pub reference: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub bucket_days: u32,
    pub min_df: u32,
    /// Subjects with fewer documents get a warning.
    pub min_documents: usize,
    pub max_seeds_per_category: Option<usize>,
    /// Topic counts to choose from by held-out perplexity; empty keeps
    /// `model.num_topics`.
    pub k_grid: Vec<usize>,
    pub formats: Vec<ReportFormat>,
    pub model: ModelConfig,
    pub coherence: CoherenceSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            input_format: None,
            lexicon: None,
            polarity: None,
            reference: None,
            out_dir: PathBuf::from("sstot-out"),
            bucket_days: DEFAULT_BUCKET_DAYS,
            min_df: 1,
            min_documents: 100,
            max_seeds_per_category: None,
            k_grid: Vec::new(),
            formats: vec![ReportFormat::Json, ReportFormat::Csv],
            model: ModelConfig::default(),
            coherence: CoherenceSection::default(),
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, global = true, env = "SSTOT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Input corpus (JSONL or CSV with subject_id, timestamp, text).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub input_format: Option<FormatArg>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    pub polarity: Option<PathBuf>,
    /// Reference corpus for UCI/NPMI coherence.
    #[arg(long, global = true)]
    pub reference: Option<PathBuf>,
    #[arg(long, short = 'o', global = true)]
    pub out_dir: Option<PathBuf>,
    /// Bucket width in days.
    #[arg(long, global = true)]
    pub bucket_days: Option<u32>,
    #[arg(long, global = true)]
    pub min_df: Option<u32>,
    #[arg(long, global = true)]
    pub min_documents: Option<usize>,
    #[arg(long, global = true)]
    pub max_seeds_per_category: Option<usize>,
    /// Comma-separated topic counts to select from by perplexity.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    /// Report formats to write.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub formats: Option<Vec<ReportFormat>>,
    #[arg(long, global = true)]
    pub num_topics: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub rng_seed: Option<u64>,
    #[arg(long, global = true)]
    pub tau_count: Option<usize>,
    #[arg(long, global = true)]
    pub tau_prob: Option<f64>,
    #[arg(long, global = true)]
    pub fold_in_sweeps: Option<usize>,
    /// Top words per topic scored for coherence.
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    /// Sliding-window size for UCI/NPMI.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    #[arg(long, global = true)]
    pub umass_eps: Option<f64>,
    #[arg(long, global = true)]
    pub pmi_eps: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub umass_aggregation: Option<UmassAggregationArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UmassAggregationArg {
    Mean,
    Sum,
}

impl From<UmassAggregationArg> for UmassAggregation {
    fn from(a: UmassAggregationArg) -> Self {
        match a {
            UmassAggregationArg::Mean => UmassAggregation::Mean,
            UmassAggregationArg::Sum => UmassAggregation::Sum,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    /// Parse a TOML file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.input);
        resolve(base, &mut cfg.lexicon);
        resolve(base, &mut cfg.polarity);
        resolve(base, &mut cfg.reference);
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn load(args: &ConfigArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(args);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, a: &ConfigArgs) {
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = a.$src.clone() { $dst = v.into(); })*
            };
        }
        set!(
            out_dir => self.out_dir,
            bucket_days => self.bucket_days,
            min_df => self.min_df,
            min_documents => self.min_documents,
            k_grid => self.k_grid,
            formats => self.formats,
            num_topics => self.model.num_topics,
            alpha => self.model.alpha,
            beta => self.model.beta,
            iterations => self.model.iterations,
            rng_seed => self.model.rng_seed,
            tau_count => self.model.tau_count,
            tau_prob => self.model.tau_prob,
            fold_in_sweeps => self.model.fold_in_sweeps,
            top_n => self.coherence.top_n,
            window => self.coherence.window,
            umass_eps => self.coherence.umass_eps,
            pmi_eps => self.coherence.pmi_eps,
            umass_aggregation => self.coherence.umass_aggregation,
        );
        for (src, dst) in [
            (&a.input, &mut self.input),
            (&a.lexicon, &mut self.lexicon),
            (&a.polarity, &mut self.polarity),
            (&a.reference, &mut self.reference),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        if a.input_format.is_some() {
            self.input_format = a.input_format;
        }
        if a.max_seeds_per_category.is_some() {
            self.max_seeds_per_category = a.max_seeds_per_category;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.bucket_days == 0 {
            return Err(CliError::Config("bucket_days must be at least 1".into()));
        }
        if self.min_df == 0 {
            return Err(CliError::Config("min_df must be at least 1".into()));
        }
        if self.coherence.top_n < 2 {
            return Err(CliError::Config("coherence top_n must be at least 2".into()));
        }
        if self.coherence.window < 2 {
            return Err(CliError::Config("coherence window must be at least 2".into()));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("no report formats selected".into()));
        }
        Ok(())
    }

    pub fn wants(&self, f: ReportFormat) -> bool {
        self.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_paths_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "input = \"data/tweets.jsonl\"\nout_dir = \"out\"\nbucket_days = 7\n\n[model]\nnum_topics = 12\nalpha = 0.25\n\n[coherence]\ntop_n = 10\n",
        )
        .unwrap();
        let args = ConfigArgs {
            config: Some(path),
            num_topics: Some(20),
            ..Default::default()
        };
        let cfg = PipelineConfig::load(&args).unwrap();
        assert_eq!(cfg.input.unwrap(), dir.path().join("data/tweets.jsonl"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        assert_eq!(cfg.bucket_days, 7);
        assert_eq!(cfg.model.num_topics, 20);
        assert_eq!(cfg.model.alpha, 0.25);
        assert_eq!(cfg.model.beta, 0.1);
        assert_eq!(cfg.coherence.top_n, 10);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, "bucket_dayz = 3\n").unwrap();
        let args = ConfigArgs {
            config: Some(path.clone()),
            ..Default::default()
        };
        assert_eq!(PipelineConfig::load(&args).unwrap_err().exit_code(), 2);
        fs::write(&path, "[model]\ntau_prob = 1.5\n").unwrap();
        assert_eq!(PipelineConfig::load(&args).unwrap_err().exit_code(), 2);
    }
}
