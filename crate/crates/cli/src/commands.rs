use std::fs;
use std::path::{Path, PathBuf};

use adtext::eval::{cross_validate_with, rmse, CvConfig};
use adtext::ingest::{read_records, write_csv, IngestReport};
use adtext::keywords::{highlight, html_page, keyword_table, Attribution, HighlightConfig, ScoreMode};
use adtext::pipeline::{fit_two_stage_with, load_model, save_model, TwoStageModel};
use adtext::record::{clean_with_summary, ClassifiedRecord, CleaningSummary};
use adtext::synth::{self, SynthConfig};
use anyhow::{anyhow, Context};
use serde_json::json;

use crate::config::{Resolved, RunConfig};

/// Usage errors exit with 1, data and model errors with 2.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

pub fn resolve(file: Option<&Path>, flags: &RunConfig) -> Result<Resolved, Failure> {
    let base = match file {
        Some(path) => RunConfig::from_file(path).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    base.overlay(flags).resolve().map_err(Failure::Usage)
}

fn input_path(config: &Resolved) -> Result<&Path, Failure> {
    config.input.as_deref().ok_or_else(|| usage("no input file: pass --input or set `input` in the config file"))
}

fn warn_rejections(path: &Path, report: &IngestReport) {
    if report.rejected == 0 {
        return;
    }
    eprintln!("warning: {}: rejected {} of {} rows", path.display(), report.rejected, report.total());
    for (line, reason) in report.rejection_reasons.iter().take(5) {
        eprintln!("  line {line}: {reason}");
    }
    if report.rejection_reasons.len() > 5 {
        eprintln!("  ...");
    }
}

/// Reads listings, treating a blank file as an empty list.
fn load_records(path: &Path) -> Result<Vec<ClassifiedRecord>, Failure> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if raw.iter().all(u8::is_ascii_whitespace) {
        eprintln!("warning: {} is empty", path.display());
        return Ok(Vec::new());
    }
    let (records, report) = read_records(path).with_context(|| format!("reading {}", path.display()))?;
    warn_rejections(path, &report);
    Ok(records)
}

fn prepare_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json value serialises");
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cleaned(config: &Resolved, records: Vec<ClassifiedRecord>) -> (Vec<ClassifiedRecord>, CleaningSummary) {
    clean_with_summary(&records, config.category, &config.cleaning)
}

pub fn clean(config: &Resolved) -> Outcome {
    let input = input_path(config)?;
    let records = load_records(input)?;
    let (kept, summary) = cleaned(config, records);
    prepare_out_dir(&config.out)?;
    let csv_path = config.out.join("cleaned.csv");
    write_csv(&csv_path, &kept).with_context(|| format!("writing {}", csv_path.display()))?;
    write_json(
        &config.out.join("cleaned.meta.json"),
        &json!({
            "config": config.echo_json(),
            "input": summary.input,
            "after_dedup": summary.after_dedup,
            "after_threshold": summary.after_threshold,
        }),
    )?;
    println!("{summary}");
    Ok(())
}

pub fn train(config: &Resolved, apply_cleaning: bool) -> Outcome {
    let input = input_path(config)?;
    let mut records = load_records(input)?;
    if apply_cleaning {
        let (kept, summary) = cleaned(config, records);
        eprintln!("cleaning: {summary}");
        records = kept;
    }
    let mut model = fit_two_stage_with(&records, &config.model).context("training failed")?;
    if apply_cleaning {
        model.cleaning_config = Some(config.cleaning);
    }
    let mut echo = config.echo_json();
    echo["clean"] = json!(apply_cleaning);
    model.run_config = Some(echo);

    let prices: Vec<f64> = records.iter().map(|r| r.price as f64).collect();
    let rmse_stage1 = rmse(&model.predict_stage1_only(&records), &prices)?;
    let rmse_both = rmse(&model.predict(&records), &prices)?;

    prepare_out_dir(&config.out)?;
    let path = config.out.join("model.json");
    save_model(&model, &path).with_context(|| format!("writing {}", path.display()))?;
    println!("records: {}", records.len());
    println!("stage 1: {}", model.stage1.regressor.kind());
    println!("text columns kept: {}", model.kept_text_columns().len());
    println!("training RMSE w/o text-mining: {rmse_stage1:.2}");
    println!("training RMSE with text mining: {rmse_both:.2}");
    println!("model written to {}", path.display());
    Ok(())
}

pub fn evaluate(config: &Resolved, apply_cleaning: bool) -> Outcome {
    let input = input_path(config)?;
    let mut records = load_records(input)?;
    if apply_cleaning {
        let (kept, summary) = cleaned(config, records);
        eprintln!("cleaning: {summary}");
        records = kept;
    }
    let dataset = input.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    let cv = CvConfig {
        dataset,
        category: config.category,
        folds: config.folds,
        seed: config.seed,
        spread: config.spread,
        model: config.model.clone(),
        parallel: true,
    };
    let report = cross_validate_with(&records, &cv).context("evaluation failed")?;
    prepare_out_dir(&config.out)?;
    let mut echo = config.echo_json();
    echo["clean"] = json!(apply_cleaning);
    write_json(&config.out.join("evaluation.json"), &json!({ "config": echo, "report": report }))?;
    print!("{report}");
    Ok(())
}

fn open_model(path: &Path) -> Result<TwoStageModel, Failure> {
    Ok(load_model(path).with_context(|| format!("loading model {}", path.display()))?)
}

pub fn keywords(model_path: &Path, top: usize, as_json: bool) -> Outcome {
    if top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    let model = open_model(model_path)?;
    let table = keyword_table(&model, top)?;
    if as_json {
        println!("{}", table.to_json());
    } else {
        print!("{table}");
    }
    Ok(())
}

pub struct HighlightArgs {
    pub model: PathBuf,
    pub input: Option<PathBuf>,
    pub index: Option<usize>,
    pub all: bool,
    pub text: Option<String>,
    pub title: String,
    pub split: bool,
    pub weight_times_value: bool,
    pub out: PathBuf,
}

pub fn highlight_cmd(args: &HighlightArgs) -> Outcome {
    let documents: Vec<ClassifiedRecord> = match (&args.text, &args.input) {
        (Some(text), None) => vec![ClassifiedRecord {
            title: args.title.clone(),
            description: text.clone(),
            beds: 0,
            baths: 0,
            size: 0,
            location: String::new(),
            price: 0,
        }],
        (None, Some(path)) => {
            let records = load_records(path)?;
            if args.all {
                records
            } else {
                let index = args.index.unwrap_or(0);
                let record = records
                    .get(index)
                    .ok_or_else(|| anyhow!("index {index} out of range: {} has {} records", path.display(), records.len()))?;
                vec![record.clone()]
            }
        }
        _ => return Err(usage("pass exactly one of --text or --input")),
    };
    let model = open_model(&args.model)?;
    let config = HighlightConfig {
        attribution: if args.split { Attribution::SplitEvenly } else { Attribution::Full },
        score: if args.weight_times_value { ScoreMode::WeightTimesValue } else { ScoreMode::Weight },
    };
    let highlighted: Vec<_> = documents.iter().map(|r| highlight(&model, r, &config)).collect();
    let note = json!({
        "model": args.model.display().to_string(),
        "highlight": config,
        "run_config": model.run_config,
    });
    let note = serde_json::to_string_pretty(&note).expect("json value serialises");
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_out_dir(parent)?;
    }
    fs::write(&args.out, html_page(&highlighted, Some(&note)))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("highlighted {} listing(s) into {}", highlighted.len(), args.out.display());
    Ok(())
}

pub fn synth_cmd(config: &SynthConfig, out: &Path) -> Outcome {
    if config.keywords > 40 {
        return Err(usage("--keywords must be at most 40"));
    }
    if !(0.0..=1.0).contains(&config.keyword_probability) {
        return Err(usage("--probability must lie in [0, 1]"));
    }
    if !config.noise_sigma.is_finite() || config.noise_sigma < 0.0 {
        return Err(usage("--noise must be a non-negative number"));
    }
    let corpus = synth::generate(config);
    prepare_out_dir(out)?;
    let csv_path = out.join("synth.csv");
    write_csv(&csv_path, &corpus.records).with_context(|| format!("writing {}", csv_path.display()))?;
    write_json(&out.join("planted.json"), &json!({ "config": corpus.config, "planted": corpus.planted }))?;
    println!("wrote {} listings with {} planted keywords to {}", corpus.records.len(), corpus.planted.len(), out.display());
    Ok(())
}
