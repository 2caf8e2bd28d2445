//! Run configuration: a flat set of keys that can come from a config file
//! (JSON object or `key = value` lines) and from command-line flags, with
//! flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adtext::eval::SpreadKind;
use adtext::pipeline::{ResidualMode, TwoStageConfig};
use adtext::record::{CleaningConfig, ListingCategory};
use adtext::regress::linear::LinearParams;
use adtext::regress::mlp::MlpParams;
use adtext::regress::svr::SvrParams;
use adtext::regress::{RegressorKind, RegressorParams, RegressorSpec};
use adtext::text::{StopWords, TextConfig, TfNorm};
use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Every key is optional so that file and flag layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub category: Option<String>,
    pub rent_avg_min: Option<f64>,
    pub rent_avg_max: Option<f64>,
    pub sale_avg_min: Option<f64>,
    pub sale_avg_max: Option<f64>,
    pub min_token_length: Option<usize>,
    pub ngram_max: Option<usize>,
    pub df_min: Option<f64>,
    pub df_max: Option<f64>,
    pub corr_threshold: Option<f64>,
    pub tf_norm: Option<String>,
    /// Stop-word list file; the bundled English list when unset.
    pub stopwords: Option<PathBuf>,
    pub stage1: Option<String>,
    pub ridge: Option<f64>,
    pub mlp_hidden: Option<usize>,
    pub mlp_epochs: Option<usize>,
    pub mlp_learning_rate: Option<f64>,
    pub svr_c: Option<f64>,
    pub svr_epsilon: Option<f64>,
    /// `in_sample` or `out_of_fold`.
    pub residual_mode: Option<String>,
    pub residual_folds: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    /// `std` or `stderr`.
    pub spread: Option<String>,
    pub out: Option<PathBuf>,
}

const STRING_KEYS: [&str; 8] = ["input", "category", "tf_norm", "stopwords", "stage1", "residual_mode", "spread", "out"];

macro_rules! layer {
    ($base:expr, $over:expr, $($field:ident),+ $(,)?) => {
        RunConfig { $($field: $over.$field.clone().or_else(|| $base.$field.clone())),+ }
    };
}

impl RunConfig {
    /// Parses a config file. JSON if the first non-blank character is `{`,
    /// otherwise `key = value` lines with `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).context("invalid JSON config");
        }
        let mut map = serde_json::Map::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", n + 1))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim().trim_matches('"');
            let json = if STRING_KEYS.contains(&key.as_str()) {
                serde_json::Value::String(value.to_string())
            } else {
                serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()))
            };
            if map.insert(key.clone(), json).is_some() {
                bail!("config line {}: `{key}` set twice", n + 1);
            }
        }
        serde_json::from_value(serde_json::Value::Object(map)).context("invalid config")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Values from `over` win; unset keys fall back to `self`.
    pub fn overlay(&self, over: &RunConfig) -> RunConfig {
        layer!(
            self, over, input, category, rent_avg_min, rent_avg_max, sale_avg_min, sale_avg_max, min_token_length,
            ngram_max, df_min, df_max, corr_threshold, tf_norm, stopwords, stage1, ridge, mlp_hidden, mlp_epochs,
            mlp_learning_rate, svr_c, svr_epsilon, residual_mode, residual_folds, folds, seed, spread, out,
        )
    }

    /// The configuration with every default filled in, in the same flat
    /// schema as the config file. Keys without a meaningful default (input,
    /// stop-word file, MLP width, SVR epsilon) stay unset.
    pub fn effective(&self) -> RunConfig {
        let text = TextConfig::default();
        let cleaning = CleaningConfig::default();
        let mlp = MlpParams::default();
        let svr = SvrParams::default();
        let defaults = RunConfig {
            input: None,
            category: Some(ListingCategory::default().to_string()),
            rent_avg_min: Some(cleaning.rent_avg_min),
            rent_avg_max: Some(cleaning.rent_avg_max),
            sale_avg_min: Some(cleaning.sale_avg_min),
            sale_avg_max: Some(cleaning.sale_avg_max),
            min_token_length: Some(text.min_token_length),
            ngram_max: Some(text.ngram_max),
            df_min: Some(text.df_min_fraction),
            df_max: Some(text.df_max_fraction),
            corr_threshold: Some(text.correlation_threshold),
            tf_norm: Some("l2".into()),
            stopwords: None,
            stage1: Some("lr".into()),
            ridge: Some(LinearParams::default().ridge),
            mlp_hidden: None,
            mlp_epochs: Some(mlp.epochs),
            mlp_learning_rate: Some(mlp.learning_rate),
            svr_c: Some(svr.c),
            svr_epsilon: None,
            residual_mode: Some("in_sample".into()),
            residual_folds: Some(10),
            folds: Some(10),
            seed: Some(0),
            spread: Some("std".into()),
            out: Some(PathBuf::from(".")),
        };
        defaults.overlay(self)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let c = self.effective();
        let category: ListingCategory = c.category.as_deref().unwrap_or_default().parse()?;
        let cleaning = CleaningConfig {
            rent_avg_min: c.rent_avg_min.unwrap_or_default(),
            rent_avg_max: c.rent_avg_max.unwrap_or_default(),
            sale_avg_min: c.sale_avg_min.unwrap_or_default(),
            sale_avg_max: c.sale_avg_max.unwrap_or_default(),
        };
        cleaning.validate()?;

        let tf_norm = match c.tf_norm.as_deref() {
            Some("l2") => TfNorm::L2,
            Some("token_count" | "token-count") => TfNorm::TokenCount,
            other => bail!("tf_norm must be `l2` or `token_count`, got {other:?}"),
        };
        let stopwords = match &c.stopwords {
            Some(path) => StopWords::from_file(path).with_context(|| format!("reading stop words {}", path.display()))?,
            None => StopWords::default(),
        };
        let text = TextConfig {
            min_token_length: c.min_token_length.unwrap_or_default(),
            ngram_max: c.ngram_max.unwrap_or_default(),
            df_min_fraction: c.df_min.unwrap_or_default(),
            df_max_fraction: c.df_max.unwrap_or_default(),
            stopwords,
            correlation_threshold: c.corr_threshold.unwrap_or_default(),
            tf_norm,
        };
        text.validate()?;

        let seed = c.seed.unwrap_or_default();
        let kind: RegressorKind = c.stage1.as_deref().unwrap_or_default().parse()?;
        let params = match kind {
            RegressorKind::Linear => {
                RegressorParams::Linear(LinearParams { ridge: c.ridge.unwrap_or_default(), ..Default::default() })
            }
            RegressorKind::Mlp => RegressorParams::Mlp(MlpParams {
                hidden: c.mlp_hidden,
                epochs: c.mlp_epochs.unwrap_or_default(),
                learning_rate: c.mlp_learning_rate.unwrap_or_default(),
                ..Default::default()
            }),
            RegressorKind::Svr => RegressorParams::Svr(SvrParams {
                c: c.svr_c.unwrap_or_default(),
                epsilon: c.svr_epsilon,
                ..Default::default()
            }),
        };
        let residual_mode = match c.residual_mode.as_deref() {
            Some("in_sample" | "in-sample") => ResidualMode::InSample,
            Some("out_of_fold" | "out-of-fold") => ResidualMode::OutOfFold { folds: c.residual_folds.unwrap_or(10) },
            other => bail!("residual_mode must be `in_sample` or `out_of_fold`, got {other:?}"),
        };
        let spread = match c.spread.as_deref() {
            Some("std") => SpreadKind::StdDev,
            Some("stderr") => SpreadKind::StdErr,
            other => bail!("spread must be `std` or `stderr`, got {other:?}"),
        };
        let folds = c.folds.unwrap_or_default();
        if folds < 2 {
            bail!("folds must be at least 2, got {folds}");
        }
        Ok(Resolved {
            input: c.input.clone(),
            category,
            cleaning,
            model: TwoStageConfig {
                stage1: RegressorSpec { params, seed },
                text,
                stage2: LinearParams::default(),
                residual_mode,
            },
            folds,
            seed,
            spread,
            out: c.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            echo: c,
        })
    }

    /// The flat key/value view, for printing.
    pub fn to_pairs(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self).expect("config serialises") {
            serde_json::Value::Object(map) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
            _ => unreachable!("struct serialises to an object"),
        }
    }
}

/// A validated configuration in library terms, plus the effective flat
/// config for echoing into artefacts.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub input: Option<PathBuf>,
    pub category: ListingCategory,
    pub cleaning: CleaningConfig,
    pub model: TwoStageConfig,
    pub folds: usize,
    pub seed: u64,
    pub spread: SpreadKind,
    pub out: PathBuf,
    pub echo: RunConfig,
}

impl Resolved {
    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.echo.to_pairs().into_iter().collect())
    }
}
