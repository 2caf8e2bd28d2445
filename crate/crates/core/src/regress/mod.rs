//! Regression learners behind one fit/predict contract.
//!
//! * [`linear`]: least squares via ridge-stabilised normal equations, with
//!   weights exposed per column.
//! * [`mlp`]: one-hidden-layer perceptron trained by full-batch
//!   backpropagation.
//! * [`svr`]: linear support vector regression with the ε-insensitive loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;

pub mod linear;
pub mod mlp;
pub mod svr;

pub use linear::{LinearModel, LinearParams, LinearWeights};
pub use mlp::{MlpModel, MlpNetwork, MlpParams};
pub use svr::{SvrModel, SvrParams};

#[derive(Debug, Error, PartialEq)]
pub enum RegressError {
    #[error("cannot fit on an empty training set")]
    EmptyTrainingSet,
    #[error("feature matrix has {rows} rows but target has {targets} values")]
    DimensionMismatch { rows: usize, targets: usize },
    #[error("prediction columns {found:?} do not match training columns {expected:?}")]
    ColumnMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("{0} model has no linear weights")]
    NotLinear(RegressorKind),
    #[error("target contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Linear,
    Mlp,
    Svr,
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Mlp => "mlp",
            Self::Svr => "svr",
        })
    }
}

impl FromStr for RegressorKind {
    type Err = RegressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" | "linear" => Ok(Self::Linear),
            "nn" | "mlp" | "ann" => Ok(Self::Mlp),
            "svr" | "svm" | "svmr" => Ok(Self::Svr),
            other => Err(RegressError::InvalidHyperparameter(format!("unknown regressor kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hyperparameters", rename_all = "lowercase")]
pub enum RegressorParams {
    Linear(LinearParams),
    Mlp(MlpParams),
    Svr(SvrParams),
}

/// What to fit, with a seed for the stochastic learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    #[serde(flatten)]
    pub params: RegressorParams,
    #[serde(default)]
    pub seed: u64,
}

impl RegressorSpec {
    pub fn linear() -> Self {
        Self::of_kind(RegressorKind::Linear)
    }

    pub fn mlp() -> Self {
        Self::of_kind(RegressorKind::Mlp)
    }

    pub fn svr() -> Self {
        Self::of_kind(RegressorKind::Svr)
    }

    /// Default hyperparameters for `kind`, seed 0.
    pub fn of_kind(kind: RegressorKind) -> Self {
        let params = match kind {
            RegressorKind::Linear => RegressorParams::Linear(LinearParams::default()),
            RegressorKind::Mlp => RegressorParams::Mlp(MlpParams::default()),
            RegressorKind::Svr => RegressorParams::Svr(SvrParams::default()),
        };
        Self { params, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> RegressorKind {
        match self.params {
            RegressorParams::Linear(_) => RegressorKind::Linear,
            RegressorParams::Mlp(_) => RegressorKind::Mlp,
            RegressorParams::Svr(_) => RegressorKind::Svr,
        }
    }
}

/// A trained model of any kind. Immutable; predictions are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum FittedRegressor {
    Linear(LinearModel),
    Mlp(MlpModel),
    Svr(SvrModel),
}

impl FittedRegressor {
    pub fn kind(&self) -> RegressorKind {
        match self {
            Self::Linear(_) => RegressorKind::Linear,
            Self::Mlp(_) => RegressorKind::Mlp,
            Self::Svr(_) => RegressorKind::Svr,
        }
    }

    /// Training column names, in order.
    pub fn columns(&self) -> &[String] {
        match self {
            Self::Linear(m) => &m.columns,
            Self::Mlp(m) => &m.columns,
            Self::Svr(m) => &m.columns,
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>, RegressError> {
        if x.column_names() != self.columns() {
            return Err(RegressError::ColumnMismatch {
                expected: self.columns().to_vec(),
                found: x.column_names().to_vec(),
            });
        }
        Ok(match self {
            Self::Linear(m) => m.predict_values(x.values()),
            Self::Mlp(m) => m.predict_values(x.values()),
            Self::Svr(m) => m.predict_values(x.values()),
        })
    }

    pub fn linear_weights(&self) -> Result<LinearWeights, RegressError> {
        match self {
            Self::Linear(m) => Ok(m.weights()),
            other => Err(RegressError::NotLinear(other.kind())),
        }
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match self {
            Self::Linear(m) => Some(m),
            _ => None,
        }
    }
}

pub fn fit(spec: &RegressorSpec, x: &FeatureMatrix, y: &[f64]) -> Result<FittedRegressor, RegressError> {
    if x.nrows() != y.len() {
        return Err(RegressError::DimensionMismatch { rows: x.nrows(), targets: y.len() });
    }
    if y.is_empty() {
        return Err(RegressError::EmptyTrainingSet);
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite(i));
    }
    Ok(match &spec.params {
        RegressorParams::Linear(p) => FittedRegressor::Linear(linear::fit(p, x, y)?),
        RegressorParams::Mlp(p) => FittedRegressor::Mlp(mlp::fit(p, x, y, spec.seed)?),
        RegressorParams::Svr(p) => FittedRegressor::Svr(svr::fit(p, x, y, spec.seed)?),
    })
}

pub fn predict(model: &FittedRegressor, x: &FeatureMatrix) -> Result<Vec<f64>, RegressError> {
    model.predict(x)
}

pub fn linear_weights(model: &FittedRegressor) -> Result<LinearWeights, RegressError> {
    model.linear_weights()
}

/// Per-column mean and scale used by the learners that standardise inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population standard deviation; zero-variance columns get scale 1.
    pub fn fit(x: &nalgebra::DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn identity(ncols: usize) -> Self {
        Self { mean: vec![0.0; ncols], scale: vec![1.0; ncols] }
    }

    /// Row-major standardised copy of `x`.
    pub fn transform_rows(&self, x: &nalgebra::DMatrix<f64>) -> Vec<f64> {
        let (n, d) = x.shape();
        let mut out = vec![0.0; n * d];
        for j in 0..d {
            for i in 0..n {
                out[i * d + j] = (x[(i, j)] - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

pub(crate) fn target_scaler(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
}
