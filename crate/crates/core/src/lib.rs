//! Two-stage price regression for real-estate classifieds.
//!
//! Stage 1 predicts a base price from the structured fields of a listing
//! (bedrooms, bathrooms, built area and a one-hot encoded location). Stage 2
//! is a linear model over TF-IDF n-gram features of the title and
//! description, trained on the stage-1 residual. The final prediction is the
//! sum of both components, and the stage-2 weights double as a per-keyword
//! explanation of why a listing is priced above or below what its structured
//! attributes suggest.
//!
//! ```
//! use adtext::prelude::*;
//!
//! let records = adtext::synth::generate(&SynthConfig {
//!     records: 200,
//!     ..SynthConfig::default()
//! })
//! .records;
//! let model = fit_two_stage(&records, &RegressorSpec::linear(), &TextConfig::default()).unwrap();
//! let predicted = model.predict(&records[..3]);
//! assert_eq!(predicted.len(), 3);
//! ```

pub mod eval;
pub mod features;
pub mod ingest;
pub mod keywords;
pub mod pipeline;
pub mod record;
pub mod regress;
pub mod synth;
pub mod text;

mod error;

pub use error::Error;

/// Shared types re-exported for downstream crates.
pub mod prelude {
    pub use crate::eval::{
        cross_validate, pearson, rmse, CvConfig, EvaluationReport, SpreadKind, Variant,
    };
    pub use crate::features::{encode_structured, fit_location_encoder, FeatureMatrix, LocationEncoder};
    pub use crate::ingest::{read_csv, read_jsonl, read_records, write_csv, IngestReport};
    pub use crate::keywords::{highlight, keyword_table, render_html, HighlightConfig, HighlightedDocument, KeywordTable};
    pub use crate::pipeline::{
        fit_two_stage, fit_two_stage_with, load_model, save_model, ResidualMode, TwoStageConfig,
        TwoStageModel,
    };
    pub use crate::record::{
        clean, deduplicate, CleaningConfig, ClassifiedRecord, ListingCategory, OfferKind, UnitKind,
    };
    pub use crate::regress::{FittedRegressor, RegressorKind, RegressorSpec};
    pub use crate::synth::SynthConfig;
    pub use crate::text::{TextConfig, TextVocabulary, TfNorm};
    pub use crate::Error;
}
