//! Listing records and the cleaning procedure applied before modelling.
//!
//! Cleaning removes duplicate listings, drops listings whose price per
//! bedroom falls outside a plausible band for the offer kind, and lower-cases
//! the free text.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One classified listing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassifiedRecord {
    pub title: String,
    pub description: String,
    pub beds: u32,
    pub baths: u32,
    /// Built area in square feet.
    pub size: u64,
    pub location: String,
    /// Annual rent or sale price in AED.
    pub price: u64,
}

impl ClassifiedRecord {
    /// Title and description joined by a single space.
    pub fn text(&self) -> String {
        let mut out = String::with_capacity(self.title.len() + self.description.len() + 1);
        out.push_str(&self.title);
        out.push(' ');
        out.push_str(&self.description);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Apartment,
    House,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OfferKind {
    Rent,
    Sale,
}

/// Which of the four listing populations a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ListingCategory {
    pub unit_kind: UnitKind,
    pub offer_kind: OfferKind,
}

impl ListingCategory {
    pub const fn new(unit_kind: UnitKind, offer_kind: OfferKind) -> Self {
        Self { unit_kind, offer_kind }
    }
}

impl Default for ListingCategory {
    fn default() -> Self {
        Self::new(UnitKind::Apartment, OfferKind::Rent)
    }
}

impl fmt::Display for ListingCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.unit_kind {
            UnitKind::Apartment => "apartment",
            UnitKind::House => "house",
        };
        let offer = match self.offer_kind {
            OfferKind::Rent => "rent",
            OfferKind::Sale => "sale",
        };
        write!(f, "{unit}-{offer}")
    }
}

impl FromStr for ListingCategory {
    type Err = ConfigError;

    /// Accepts `apartment-rent`, `house_sale`, `villa-rent` and similar.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        let mut parts = lower.split(['-', '_', ':', '/']);
        let (Some(unit), Some(offer), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(ConfigError::UnknownCategory(s.to_string()));
        };
        let unit_kind = match unit {
            "apartment" | "flat" => UnitKind::Apartment,
            "house" | "villa" => UnitKind::House,
            _ => return Err(ConfigError::UnknownCategory(s.to_string())),
        };
        let offer_kind = match offer {
            "rent" => OfferKind::Rent,
            "sale" => OfferKind::Sale,
            _ => return Err(ConfigError::UnknownCategory(s.to_string())),
        };
        Ok(Self { unit_kind, offer_kind })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown listing category `{0}` (expected e.g. apartment-rent, house-sale)")]
    UnknownCategory(String),
    #[error("invalid {name} bounds: need 0 < min < max, got [{min}, {max}]")]
    InvalidBounds { name: &'static str, min: f64, max: f64 },
}

/// Inclusive bounds on price per bedroom, in AED.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub rent_avg_min: f64,
    pub rent_avg_max: f64,
    pub sale_avg_min: f64,
    pub sale_avg_max: f64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            rent_avg_min: 10_000.0,
            rent_avg_max: 100_000.0,
            sale_avg_min: 100_000.0,
            sale_avg_max: 1_000_000.0,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |name, min: f64, max: f64| {
            if min > 0.0 && min < max && max.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::InvalidBounds { name, min, max })
            }
        };
        check("rent", self.rent_avg_min, self.rent_avg_max)?;
        check("sale", self.sale_avg_min, self.sale_avg_max)
    }

    pub fn bounds(&self, offer: OfferKind) -> (f64, f64) {
        match offer {
            OfferKind::Rent => (self.rent_avg_min, self.rent_avg_max),
            OfferKind::Sale => (self.sale_avg_min, self.sale_avg_max),
        }
    }
}

/// Price divided by `beds + 1`, so studios (zero bedrooms) stay finite.
pub fn average_price_per_bedroom(record: &ClassifiedRecord) -> f64 {
    record.price as f64 / (f64::from(record.beds) + 1.0)
}

/// Drops later records whose trimmed title and description both equal an
/// earlier record's. Order of survivors is preserved.
pub fn deduplicate(records: &[ClassifiedRecord]) -> Vec<ClassifiedRecord> {
    dedup_by(records, |r| (r.title.trim().to_string(), r.description.trim().to_string()))
}

fn dedup_by<K, F>(records: &[ClassifiedRecord], key: F) -> Vec<ClassifiedRecord>
where
    K: std::hash::Hash + Eq,
    F: Fn(&ClassifiedRecord) -> K,
{
    let mut seen = HashSet::with_capacity(records.len());
    records.iter().filter(|r| seen.insert(key(r))).cloned().collect()
}

/// Record counts after each cleaning step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub input: usize,
    pub after_dedup: usize,
    pub after_threshold: usize,
}

impl fmt::Display for CleaningSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} -> {}", self.input, self.after_dedup, self.after_threshold)
    }
}

/// Dedup, price-per-bedroom filter, then lower-casing of title and
/// description.
pub fn clean(
    records: &[ClassifiedRecord],
    category: ListingCategory,
    config: &CleaningConfig,
) -> Vec<ClassifiedRecord> {
    clean_with_summary(records, category, config).0
}

/// [`clean`] plus the intermediate counts.
///
/// Duplicates are detected on the lower-cased, trimmed text so that cleaning
/// an already cleaned list is a no-op.
pub fn clean_with_summary(
    records: &[ClassifiedRecord],
    category: ListingCategory,
    config: &CleaningConfig,
) -> (Vec<ClassifiedRecord>, CleaningSummary) {
    let deduped = dedup_by(records, |r| (r.title.trim().to_lowercase(), r.description.trim().to_lowercase()));
    let after_dedup = deduped.len();
    let (min, max) = config.bounds(category.offer_kind);
    let cleaned: Vec<_> = deduped
        .into_iter()
        .filter(|r| {
            let avg = average_price_per_bedroom(r);
            min <= avg && avg <= max
        })
        .map(|mut r| {
            r.title = r.title.to_lowercase();
            r.description = r.description.to_lowercase();
            r
        })
        .collect();
    let summary = CleaningSummary { input: records.len(), after_dedup, after_threshold: cleaned.len() };
    (cleaned, summary)
}
