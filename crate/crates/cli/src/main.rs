//! `adtext` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or model errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use adtext::synth::SynthConfig;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::{Failure, HighlightArgs, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "adtext", version, about = "Two-stage price regression and keyword analysis for property listings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deduplicate listings and drop implausible prices.
    Clean(RunArgs),
    /// Fit a two-stage model and write <out>/model.json.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Clean the input before training.
        #[arg(long)]
        clean: bool,
    },
    /// Cross-validate with and without text features.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Clean the input before evaluating.
        #[arg(long)]
        clean: bool,
    },
    /// Print the strongest positive and negative terms of a model.
    Keywords {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Colour the words of listings by their stage-2 weights.
    Highlight {
        #[arg(long)]
        model: PathBuf,
        /// Listings file (.csv or .jsonl).
        #[arg(long, conflicts_with = "text")]
        input: Option<PathBuf>,
        /// Record to highlight; defaults to the first.
        #[arg(long, requires = "input", conflicts_with = "all")]
        index: Option<usize>,
        /// Highlight every record of --input.
        #[arg(long, requires = "input")]
        all: bool,
        /// Free text to highlight instead of a listing file.
        #[arg(long)]
        text: Option<String>,
        /// Title to go with --text.
        #[arg(long, default_value = "", requires = "text")]
        title: String,
        /// Share an n-gram's weight evenly among its words.
        #[arg(long)]
        split: bool,
        /// Score by weight times TF-IDF value rather than weight alone.
        #[arg(long)]
        weight_times_value: bool,
        /// Output HTML file.
        #[arg(long, default_value = "highlight.html")]
        out: PathBuf,
    },
    /// Generate synthetic listings with planted keyword effects.
    Synth {
        #[arg(long, default_value_t = 2000)]
        records: usize,
        #[arg(long, default_value_t = 20)]
        keywords: usize,
        /// Standard deviation of the price noise in AED.
        #[arg(long, default_value_t = 5000.0)]
        noise: f64,
        /// Probability that a listing contains a given keyword.
        #[arg(long, default_value_t = 0.2)]
        probability: f64,
        /// Plant keywords without any price effect.
        #[arg(long)]
        null_effect: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for synth.csv and planted.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Flags shared by the data commands. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Args)]
struct RunArgs {
    /// Config file: a JSON object or `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Listings file (.csv or .jsonl).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Listing category, e.g. apartment-rent or villa-sale.
    #[arg(long)]
    category: Option<String>,
    /// Stage-1 model: lr, nn or svr.
    #[arg(long)]
    stage1: Option<String>,
    #[arg(long)]
    ngram_max: Option<usize>,
    #[arg(long)]
    df_min: Option<f64>,
    #[arg(long)]
    df_max: Option<f64>,
    #[arg(long)]
    corr_threshold: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            category: self.category.clone(),
            stage1: self.stage1.clone(),
            ngram_max: self.ngram_max,
            df_min: self.df_min,
            df_max: self.df_max,
            corr_threshold: self.corr_threshold,
            folds: self.folds,
            seed: self.seed,
            out: self.out.clone(),
            ..RunConfig::default()
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Clean(run) => commands::clean(&commands::resolve(run.config.as_deref(), &run.flags())?),
        Command::Train { run, clean } => commands::train(&commands::resolve(run.config.as_deref(), &run.flags())?, clean),
        Command::Evaluate { run, clean } => {
            commands::evaluate(&commands::resolve(run.config.as_deref(), &run.flags())?, clean)
        }
        Command::Keywords { model, top, json } => commands::keywords(&model, top, json),
        Command::Highlight { model, input, index, all, text, title, split, weight_times_value, out } => {
            commands::highlight_cmd(&HighlightArgs { model, input, index, all, text, title, split, weight_times_value, out })
        }
        Command::Synth { records, keywords, noise, probability, null_effect, seed, out } => {
            let config = SynthConfig {
                records,
                keywords,
                noise_sigma: noise,
                keyword_probability: probability,
                null_effect,
                seed,
                ..SynthConfig::default()
            };
            commands::synth_cmd(&config, &out)
        }
    }
}

fn main() -> ExitCode {
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
