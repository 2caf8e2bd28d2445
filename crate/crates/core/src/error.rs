use thiserror::Error;

use crate::{eval::EvalError, features::FeatureError, ingest::IngestError, keywords::KeywordError};
use crate::{pipeline::PipelineError, record::ConfigError, regress::RegressError, text::TextError};

/// Umbrella error for callers that drive several stages at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Keyword(#[from] KeywordError),
}
