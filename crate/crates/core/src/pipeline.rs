//! The two-stage model.
//!
//! Training: stage 1 regresses price on the structured encoding; its
//! residuals (actual minus predicted price) become the target of a linear
//! stage 2 over TF-IDF text features. Prediction adds the two components.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::kfold_indices;
use crate::features::{encode_structured, fit_location_encoder, FeatureError, FeatureMatrix, LocationEncoder};
use crate::record::{ClassifiedRecord, CleaningConfig};
use crate::regress::{self, FittedRegressor, LinearModel, LinearParams, LinearWeights, RegressError, RegressorSpec};
use crate::text::{correlation_filter_indices, fit_vocabulary, tfidf_encode, TextConfig, TextError, TextVocabulary};

pub const MODEL_FORMAT: &str = "adtext-two-stage";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need at least {needed} records to fit, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("FormatVersionMismatch: expected {MODEL_FORMAT} v{MODEL_FORMAT_VERSION}, found {found}")]
    FormatVersionMismatch { found: String },
    #[error("malformed model file: {0}")]
    Malformed(String),
}

/// How stage-2 training targets are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ResidualMode {
    /// Residuals of stage 1 on the same records it was trained on.
    #[default]
    InSample,
    /// Each record's residual comes from a stage-1 model that did not see it.
    OutOfFold { folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoStageConfig {
    pub stage1: RegressorSpec,
    pub text: TextConfig,
    pub stage2: LinearParams,
    pub residual_mode: ResidualMode,
}

impl Default for TwoStageConfig {
    fn default() -> Self {
        Self {
            stage1: RegressorSpec::linear(),
            text: TextConfig::default(),
            stage2: LinearParams::default(),
            residual_mode: ResidualMode::InSample,
        }
    }
}

/// Location encoder plus a regressor over the structured features.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredModel {
    pub location_encoder: LocationEncoder,
    pub regressor: FittedRegressor,
}

impl StructuredModel {
    pub fn fit(records: &[ClassifiedRecord], spec: &RegressorSpec) -> Result<Self, PipelineError> {
        let location_encoder = fit_location_encoder(records)?;
        let x = encode_structured(records, &location_encoder);
        let regressor = regress::fit(spec, &x, &prices(records))?;
        Ok(Self { location_encoder, regressor })
    }

    pub fn predict(&self, records: &[ClassifiedRecord]) -> Vec<f64> {
        let x = encode_structured(records, &self.location_encoder);
        self.regressor.predict(&x).expect("encoder and regressor share columns")
    }
}

pub(crate) fn prices(records: &[ClassifiedRecord]) -> Vec<f64> {
    records.iter().map(|r| r.price as f64).collect()
}

/// A fitted two-stage model. Immutable; all predictions are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageModel {
    pub stage1: StructuredModel,
    pub text_config: TextConfig,
    pub vocabulary: TextVocabulary,
    /// Vocabulary indices surviving the correlation filter, in stage-2
    /// column order.
    kept_indices: Vec<usize>,
    /// Linear model over the kept text columns.
    pub stage2: LinearModel,
    pub cleaning_config: Option<CleaningConfig>,
    /// Free-form record of the configuration that produced the model.
    pub run_config: Option<serde_json::Value>,
}

pub fn fit_two_stage(
    records: &[ClassifiedRecord],
    stage1_spec: &RegressorSpec,
    text_config: &TextConfig,
) -> Result<TwoStageModel, PipelineError> {
    let config = TwoStageConfig { stage1: stage1_spec.clone(), text: text_config.clone(), ..Default::default() };
    fit_two_stage_with(records, &config)
}

pub fn fit_two_stage_with(records: &[ClassifiedRecord], config: &TwoStageConfig) -> Result<TwoStageModel, PipelineError> {
    if records.len() < 2 {
        return Err(PipelineError::TooFewRecords { needed: 2, got: records.len() });
    }
    config.text.validate()?;
    let stage1 = StructuredModel::fit(records, &config.stage1)?;
    fit_two_stage_from(records, config, stage1)
}

/// Fits stage 2 on top of an already fitted stage 1, which must have been
/// trained on `records` with `config.stage1`.
pub(crate) fn fit_two_stage_from(
    records: &[ClassifiedRecord],
    config: &TwoStageConfig,
    stage1: StructuredModel,
) -> Result<TwoStageModel, PipelineError> {
    if records.len() < 2 {
        return Err(PipelineError::TooFewRecords { needed: 2, got: records.len() });
    }
    let y = prices(records);
    let fitted = match config.residual_mode {
        ResidualMode::InSample => stage1.predict(records),
        ResidualMode::OutOfFold { folds } => out_of_fold_predictions(records, &config.stage1, folds)?,
    };
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, p)| a - p).collect();

    let vocabulary = fit_vocabulary(records, &config.text)?;
    let text = tfidf_encode(records, &vocabulary, &config.text);
    let filtered = correlation_filter_indices(text.values(), config.text.correlation_threshold);
    let kept = text.select_columns(&filtered.kept);
    let stage2 = regress::linear::fit(&config.stage2, &kept, &residuals)?;

    Ok(TwoStageModel {
        stage1,
        text_config: config.text.clone(),
        vocabulary,
        kept_indices: filtered.kept,
        stage2,
        cleaning_config: None,
        run_config: None,
    })
}

fn out_of_fold_predictions(
    records: &[ClassifiedRecord],
    spec: &RegressorSpec,
    folds: usize,
) -> Result<Vec<f64>, PipelineError> {
    let folds = folds.clamp(2, records.len());
    let mut out = vec![0.0; records.len()];
    for test in kfold_indices(records.len(), folds, spec.seed) {
        let mut is_test = vec![false; records.len()];
        test.iter().for_each(|&i| is_test[i] = true);
        let train: Vec<_> = records.iter().zip(&is_test).filter(|(_, t)| !**t).map(|(r, _)| r.clone()).collect();
        let held_out: Vec<_> = test.iter().map(|&i| records[i].clone()).collect();
        let model = StructuredModel::fit(&train, spec)?;
        for (&i, p) in test.iter().zip(model.predict(&held_out)) {
            out[i] = p;
        }
    }
    Ok(out)
}

impl TwoStageModel {
    /// Stage-2 column names.
    pub fn kept_text_columns(&self) -> &[String] {
        &self.stage2.columns
    }

    /// TF-IDF features restricted to the kept columns.
    pub fn text_features(&self, records: &[ClassifiedRecord]) -> FeatureMatrix {
        tfidf_encode(records, &self.vocabulary, &self.text_config).select_columns(&self.kept_indices)
    }

    pub fn predict_stage1_only(&self, records: &[ClassifiedRecord]) -> Vec<f64> {
        self.stage1.predict(records)
    }

    /// Stage-2 contribution per record (intercept included).
    pub fn stage2_component(&self, records: &[ClassifiedRecord]) -> Vec<f64> {
        let x = self.text_features(records);
        x.values().row_iter().map(|row| self.stage2.predict_row(row.iter().copied())).collect()
    }

    /// Stage 1 plus stage 2, summed in that order.
    pub fn predict(&self, records: &[ClassifiedRecord]) -> Vec<f64> {
        let base = self.predict_stage1_only(records);
        let text = self.stage2_component(records);
        base.iter().zip(&text).map(|(a, b)| a + b).collect()
    }

    pub fn stage2_weights(&self) -> LinearWeights {
        self.stage2.weights()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| PipelineError::FormatVersionMismatch { found: format!("unparsable file ({e})") })?;
        let format = value.get("format").and_then(|v| v.as_str());
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if format != Some(MODEL_FORMAT) || version != Some(u64::from(MODEL_FORMAT_VERSION)) {
            return Err(PipelineError::FormatVersionMismatch {
                found: format!("{} v{}", format.unwrap_or("<none>"), version.map_or("<none>".into(), |v| v.to_string())),
            });
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| PipelineError::Malformed(e.to_string()))?;
        file.try_into()
    }
}

pub fn predict_two_stage(model: &TwoStageModel, records: &[ClassifiedRecord]) -> Vec<f64> {
    model.predict(records)
}

pub fn predict_stage1_only(model: &TwoStageModel, records: &[ClassifiedRecord]) -> Vec<f64> {
    model.predict_stage1_only(records)
}

/// Writes the model as a single JSON document. Identical models produce
/// identical bytes.
pub fn save_model(model: &TwoStageModel, path: impl AsRef<Path>) -> Result<(), PipelineError> {
    std::fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TwoStageModel, PipelineError> {
    TwoStageModel::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    stage1: FittedRegressor,
    stage2: Stage2File,
    vocabulary: TextVocabulary,
    location_encoder: LocationEncoder,
    text_config: TextConfig,
    cleaning_config: Option<CleaningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run_config: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Stage2File {
    /// Term → weight, in stage-2 column order.
    weights: serde_json::Map<String, serde_json::Value>,
    intercept: f64,
}

impl From<&TwoStageModel> for ModelFile {
    fn from(m: &TwoStageModel) -> Self {
        let weights = m
            .stage2
            .columns
            .iter()
            .zip(&m.stage2.weights)
            .map(|(c, w)| (c.clone(), serde_json::Value::from(*w)))
            .collect();
        Self {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_FORMAT_VERSION,
            stage1: m.stage1.regressor.clone(),
            stage2: Stage2File { weights, intercept: m.stage2.intercept },
            vocabulary: m.vocabulary.clone(),
            location_encoder: m.stage1.location_encoder.clone(),
            text_config: m.text_config.clone(),
            cleaning_config: m.cleaning_config,
            run_config: m.run_config.clone(),
        }
    }
}

impl TryFrom<ModelFile> for TwoStageModel {
    type Error = PipelineError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        let malformed = |msg: String| PipelineError::Malformed(msg);
        let vocab = &f.vocabulary;
        if vocab.doc_frequency.len() != vocab.terms.len() {
            return Err(malformed("vocabulary terms and doc_frequency differ in length".into()));
        }
        if vocab.doc_frequency.iter().any(|&df| df == 0 || df > vocab.corpus_size) {
            return Err(malformed("document frequency outside 1..=corpus_size".into()));
        }
        let mut columns = Vec::with_capacity(f.stage2.weights.len());
        let mut weights = Vec::with_capacity(f.stage2.weights.len());
        let mut kept_indices = Vec::with_capacity(f.stage2.weights.len());
        for (term, w) in f.stage2.weights {
            let idx = vocab.index_of(&term).ok_or_else(|| malformed(format!("stage-2 term `{term}` not in vocabulary")))?;
            let w = w.as_f64().ok_or_else(|| malformed(format!("weight for `{term}` is not a number")))?;
            kept_indices.push(idx);
            columns.push(term);
            weights.push(w);
        }
        let expected_stage1: Vec<String> = crate::features::STRUCTURED_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(f.location_encoder.column_names().iter().cloned())
            .collect();
        if f.stage1.columns() != expected_stage1.as_slice() {
            return Err(malformed("stage-1 columns do not match the location encoder".into()));
        }
        Ok(Self {
            stage1: StructuredModel { location_encoder: f.location_encoder, regressor: f.stage1 },
            text_config: f.text_config,
            vocabulary: f.vocabulary,
            kept_indices,
            stage2: LinearModel { columns, weights, intercept: f.stage2.intercept },
            cleaning_config: f.cleaning_config,
            run_config: f.run_config,
        })
    }
}
