//! `sstot`: batch front end for symptom trend modelling over short texts.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigArgs, PipelineConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sstot", version, about = "Semi-supervised symptom topic trends")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    /// Maximum subjects trained concurrently (0 = one per core).
    #[arg(long, short = 'j', global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest and normalize the corpus, then write bucketed corpora and
    /// the shared vocabulary.
    Preprocess,
    /// Train one model per subject and export trends, labels and heatmaps.
    Train,
    /// Score trained topics with UMass, UCI and NPMI.
    Coherence,
    /// Compare predicted bucket labels against gold annotations.
    Evaluate {
        /// Gold CSV with `subject_id,bucket_index,labels` columns.
        #[arg(long)]
        gold: PathBuf,
        /// Predicted labels; defaults to `predictions.csv` in the output
        /// directory.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(&cli.config)?;
    match cli.command {
        Command::Preprocess => {
            let s = commands::preprocess(&cfg)?;
            println!("documents        {}", s.documents);
            println!("skipped records  {}", s.skipped_records);
            println!("subjects         {}", s.subjects);
            println!("vocabulary       {}", s.vocabulary);
            println!("tokens           {}", s.tokens);
            println!("dropped tokens   {}", s.dropped_tokens);
            println!("buckets          {}", s.buckets);
        }
        Command::Train => {
            let m = commands::train(&cfg, cli.jobs)?;
            for s in &m.subjects {
                println!(
                    "{}: {} buckets, {} tokens, {} seed terms, K={} -> {}",
                    s.subject_id, s.buckets, s.tokens, s.seed_terms, s.num_topics, s.dir
                );
            }
        }
        Command::Coherence => {
            println!("subject_id\tumass\tuci\tnpmi");
            for r in commands::coherence(&cfg)? {
                println!("{}\t{:.4}\t{:.4}\t{:.4}", r.subject_id, r.umass, r.uci, r.npmi);
            }
        }
        Command::Evaluate { gold, predictions } => {
            let r = commands::evaluate_cmd(&cfg, &gold, predictions.as_deref())?;
            print!("{}", r.to_table_csv());
            println!("buckets {}, subset accuracy {:.4}", r.buckets, r.subset_accuracy);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
