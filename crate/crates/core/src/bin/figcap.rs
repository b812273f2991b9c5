use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use figcap::eval::{evaluate_system, render_report, write_baseline, EvalReport};
use figcap::ingest::Split;
use figcap::pipeline::{build_dataset, dataset_stats, BuildConfig};
use figcap::textprep::PackBudget;
use figcap::{CaptionVariant, Error, Result};

#[derive(Parser)]
#[command(name = "figcap", version, about = "Build and evaluate a figure-captioning corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a prediction file (one caption per line) against gold JSONL.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        variant: CaptionVariant,
        /// JSON report to create or update; a `.txt` table is written beside it.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Mark the system as consuming the figure image.
        #[arg(long)]
        image_input: bool,
        /// Mark the system as consuming the packed text context.
        #[arg(long)]
        text_input: bool,
    },
    /// Write first-reference-sentence predictions for a gold JSONL file.
    Baseline {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the JSONL datasets and image tensors for one split.
    Build {
        #[arg(long)]
        scicap_root: PathBuf,
        #[arg(long)]
        metadata_dump: PathBuf,
        #[arg(long)]
        fulltext_dir: PathBuf,
        #[arg(long)]
        split: Split,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long, default_value_t = 100)]
        title_chars: usize,
        #[arg(long, default_value_t = 150)]
        abstract_chars: usize,
        #[arg(long, default_value_t = 2048)]
        total_chars: usize,
        #[arg(long, default_value_t = 0.6)]
        mask_threshold: f64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Summarize every JSONL file of a built dataset.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval {
            pred,
            gold,
            name,
            variant,
            report,
            image_input,
            text_input,
        } => {
            let mut row = evaluate_system(&pred, &gold, &name, variant)?;
            row.image_input = image_input;
            row.text_input = text_input;
            print!("{}", render_report(std::slice::from_ref(&row)));
            if let Some(path) = report {
                let mut rep = if path.exists() {
                    EvalReport::load(&path)?
                } else {
                    EvalReport::default()
                };
                rep.upsert(row);
                rep.save(&path)?;
            }
        }
        Command::Baseline { gold, out } => {
            let n = write_baseline(&gold, &out)?;
            eprintln!("wrote {n} baseline predictions to {}", out.display());
        }
        Command::Build {
            scicap_root,
            metadata_dump,
            fulltext_dir,
            split,
            out,
            window,
            title_chars,
            abstract_chars,
            total_chars,
            mask_threshold,
            jobs,
        } => {
            let mut cfg = BuildConfig::new(scicap_root, metadata_dump, fulltext_dir, split, out);
            cfg.window = window;
            cfg.budget = PackBudget {
                title_chars,
                abstract_chars,
                total_chars,
            };
            cfg.mask_threshold = mask_threshold;
            cfg.jobs = jobs;
            println!("{}", build_dataset(&cfg)?);
        }
        Command::Stats { dataset } => {
            for s in dataset_stats(&dataset)? {
                println!("{s}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
