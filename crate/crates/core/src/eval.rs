//! k-fold comparison of the structured-only (one-stage) model against the
//! two-stage model, scored by RMSE and Pearson correlation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{fit_two_stage_from, prices, PipelineError, StructuredModel, TwoStageConfig};
use crate::record::{ClassifiedRecord, ListingCategory};
use crate::regress::{RegressorKind, RegressorSpec};
use crate::text::TextConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {predicted} predictions vs {actual} actual values")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("cannot score empty vectors")]
    EmptyVectors,
    #[error("need at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("{records} records cannot be split into {folds} folds")]
    TooFewRecords { records: usize, folds: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch { predicted: predicted.len(), actual: actual.len() });
    }
    if predicted.is_empty() {
        return Err(EvalError::EmptyVectors);
    }
    let sse: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

/// Pearson correlation; `None` when either side has zero variance (or fewer
/// than two points).
pub fn pearson(predicted: &[f64], actual: &[f64]) -> Result<Option<f64>, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch { predicted: predicted.len(), actual: actual.len() });
    }
    let n = predicted.len();
    if n < 2 {
        return Ok(None);
    }
    let mp = predicted.iter().sum::<f64>() / n as f64;
    let ma = actual.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, a) in predicted.iter().zip(actual) {
        let (dp, da) = (p - mp, a - ma);
        sxy += dp * da;
        sxx += dp * dp;
        syy += da * da;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Shuffles `0..n` with `seed` and cuts it into `k` near-equal test folds
/// (the first `n % k` folds get one extra index). Indices within a fold are
/// sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    folds
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    OneStage,
    TwoStage,
}

/// What the "±" in the summary means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadKind {
    /// Sample standard deviation across folds.
    #[default]
    StdDev,
    /// Standard deviation divided by sqrt(folds).
    StdErr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub dataset: String,
    pub category: ListingCategory,
    pub folds: usize,
    pub seed: u64,
    pub spread: SpreadKind,
    pub model: TwoStageConfig,
    /// Evaluate folds on separate threads. Results are identical either way.
    pub parallel: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            dataset: "dataset".into(),
            category: ListingCategory::default(),
            folds: 10,
            seed: 0,
            spread: SpreadKind::StdDev,
            model: TwoStageConfig::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub variant: Variant,
    pub test_size: usize,
    pub rmse: f64,
    /// `None` when undefined (constant predictions or targets).
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub corr_mean: Option<f64>,
    pub corr_std: Option<f64>,
    /// Folds whose correlation was undefined and left out of `corr_*`.
    pub undefined_correlations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub category: ListingCategory,
    pub stage1_kind: RegressorKind,
    pub folds: usize,
    pub seed: u64,
    pub spread: SpreadKind,
    pub per_fold: Vec<FoldResult>,
    pub one_stage: VariantSummary,
    pub two_stage: VariantSummary,
}

impl EvaluationReport {
    pub fn summary(&self, variant: Variant) -> &VariantSummary {
        match variant {
            Variant::OneStage => &self.one_stage,
            Variant::TwoStage => &self.two_stage,
        }
    }

    /// Relative RMSE reduction of the two-stage model, `1 − two/one`.
    pub fn rmse_improvement(&self) -> f64 {
        1.0 - self.two_stage.rmse_mean / self.one_stage.rmse_mean
    }
}

/// `(mean, spread)`; spread is `None` for fewer than two values.
fn mean_spread(values: &[f64], kind: SpreadKind) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let spread = match kind {
        SpreadKind::StdDev => std,
        SpreadKind::StdErr => std / n.sqrt(),
    };
    (mean, Some(spread))
}

fn summarise(results: &[&FoldResult], kind: SpreadKind) -> VariantSummary {
    let rmses: Vec<f64> = results.iter().map(|r| r.rmse).collect();
    let corrs: Vec<f64> = results.iter().filter_map(|r| r.correlation).collect();
    let (rmse_mean, rmse_std) = mean_spread(&rmses, kind);
    let (corr_mean, corr_std) = if corrs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_spread(&corrs, kind);
        (Some(m), s)
    };
    VariantSummary {
        rmse_mean,
        rmse_std: rmse_std.unwrap_or(0.0),
        corr_mean,
        corr_std,
        undefined_correlations: results.len() - corrs.len(),
    }
}

pub fn cross_validate(
    records: &[ClassifiedRecord],
    category: ListingCategory,
    stage1_spec: &RegressorSpec,
    text_config: &TextConfig,
    folds: usize,
    seed: u64,
) -> Result<EvaluationReport, EvalError> {
    let config = CvConfig {
        dataset: category.to_string(),
        category,
        folds,
        seed,
        model: TwoStageConfig { stage1: stage1_spec.clone(), text: text_config.clone(), ..Default::default() },
        ..Default::default()
    };
    cross_validate_with(records, &config)
}

pub fn cross_validate_with(records: &[ClassifiedRecord], config: &CvConfig) -> Result<EvaluationReport, EvalError> {
    if config.folds < 2 {
        return Err(EvalError::InvalidFolds(config.folds));
    }
    // each training split needs at least two records
    if records.len() < config.folds || records.len() - records.len().div_ceil(config.folds) < 2 {
        return Err(EvalError::TooFewRecords { records: records.len(), folds: config.folds });
    }
    config.model.text.validate().map_err(PipelineError::from)?;

    let splits = kfold_indices(records.len(), config.folds, config.seed);
    let run = |fold: usize| evaluate_fold(records, &splits[fold], fold, &config.model);
    let outcomes: Vec<Result<[FoldResult; 2], EvalError>> = if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.folds).map(|f| scope.spawn(move || run(f))).collect();
            handles.into_iter().map(|h| h.join().expect("fold worker panicked")).collect()
        })
    } else {
        (0..config.folds).map(run).collect()
    };

    let mut per_fold = Vec::with_capacity(2 * config.folds);
    for outcome in outcomes {
        per_fold.extend(outcome?);
    }
    let pick = |v: Variant| per_fold.iter().filter(|r| r.variant == v).collect::<Vec<_>>();
    let one_stage = summarise(&pick(Variant::OneStage), config.spread);
    let two_stage = summarise(&pick(Variant::TwoStage), config.spread);
    Ok(EvaluationReport {
        dataset: config.dataset.clone(),
        category: config.category,
        stage1_kind: config.model.stage1.kind(),
        folds: config.folds,
        seed: config.seed,
        spread: config.spread,
        per_fold,
        one_stage,
        two_stage,
    })
}

fn evaluate_fold(
    records: &[ClassifiedRecord],
    test_idx: &[usize],
    fold: usize,
    model: &TwoStageConfig,
) -> Result<[FoldResult; 2], EvalError> {
    let mut is_test = vec![false; records.len()];
    test_idx.iter().for_each(|&i| is_test[i] = true);
    let train: Vec<ClassifiedRecord> =
        records.iter().zip(&is_test).filter(|(_, t)| !**t).map(|(r, _)| r.clone()).collect();
    let test: Vec<ClassifiedRecord> = test_idx.iter().map(|&i| records[i].clone()).collect();
    let actual = prices(&test);

    let stage1 = StructuredModel::fit(&train, &model.stage1)?;
    let one = stage1.predict(&test);
    let two_stage = fit_two_stage_from(&train, model, stage1)?;
    let two = two_stage.predict(&test);

    let score = |variant, predicted: &[f64]| -> Result<FoldResult, EvalError> {
        Ok(FoldResult {
            fold,
            variant,
            test_size: test.len(),
            rmse: rmse(predicted, &actual)?,
            correlation: pearson(predicted, &actual)?,
        })
    };
    Ok([score(Variant::OneStage, &one)?, score(Variant::TwoStage, &two)?])
}

fn fmt_cell(mean: Option<f64>, spread: Option<f64>, decimals: usize) -> String {
    match (mean, spread) {
        (Some(m), Some(s)) => format!("{m:.decimals$} +/- {s:.decimals$}"),
        (Some(m), None) => format!("{m:.decimals$}"),
        _ => "undefined".to_string(),
    }
}

impl fmt::Display for EvaluationReport {
    /// Two-column table: without text features versus with them.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spread = match self.spread {
            SpreadKind::StdDev => "std dev",
            SpreadKind::StdErr => "std err",
        };
        writeln!(
            f,
            "dataset: {}  stage 1: {}  folds: {}  seed: {}  (+/- is {spread})",
            self.dataset, self.stage1_kind, self.folds, self.seed
        )?;
        let (one, two) = (&self.one_stage, &self.two_stage);
        let rows = [
            ("Metric", "w/o text-mining".to_string(), "with text mining".to_string()),
            ("RMSE", fmt_cell(Some(one.rmse_mean), Some(one.rmse_std), 3), fmt_cell(Some(two.rmse_mean), Some(two.rmse_std), 3)),
            ("Corr.", fmt_cell(one.corr_mean, one.corr_std, 3), fmt_cell(two.corr_mean, two.corr_std, 3)),
        ];
        let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let w2 = rows.iter().map(|r| r.2.len()).max().unwrap_or(0);
        for (i, (name, a, b)) in rows.iter().enumerate() {
            writeln!(f, "| {name:<6} | {a:<w1$} | {b:<w2$} |")?;
            if i == 0 {
                writeln!(f, "|--------|-{}-|-{}-|", "-".repeat(w1), "-".repeat(w2))?;
            }
        }
        let undefined = one.undefined_correlations + two.undefined_correlations;
        if undefined > 0 {
            writeln!(f, "({undefined} fold correlations undefined and excluded)")?;
        }
        Ok(())
    }
}
