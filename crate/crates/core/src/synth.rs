//! Synthetic listings with known keyword effects.
//!
//! Every description holds exactly `words_per_listing` distinct words. Most
//! are neutral filler; each planted keyword is present independently with
//! probability `keyword_probability` and, when present, replaces one filler
//! word. Because the word count never changes, a keyword's TF-IDF value is
//! the same in every listing that contains it, so its price effect is exactly
//! linear in the text features.
//!
//! Price is an integer-valued linear function of the structured fields plus
//! the effects of the keywords present plus optional Gaussian noise.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::record::ClassifiedRecord;

const FILLER: [&str; 60] = [
    "spacious", "bright", "modern", "kitchen", "storage", "parking", "community", "family", "quiet", "friendly",
    "cosy", "layout", "flooring", "wardrobe", "windows", "lobby", "reception", "elevator", "security", "maintenance",
    "cheque", "cheques", "contract", "viewing", "contact", "agent", "broker", "tenant", "landlord", "listing",
    "tower", "building", "floor", "level", "corner", "closed", "laundry", "pantry", "hallway", "entrance",
    "grocery", "school", "mosque", "metro", "station", "highway", "market", "clinic", "garden", "lawn",
    "stairs", "corridor", "unit", "block", "plaza", "centre", "neighbourhood", "residents", "utilities", "chiller",
];

const POSITIVE: [&str; 20] = [
    "seaview", "penthouse", "furnished", "renovated", "beachfront", "upgraded", "skyline", "duplex", "jacuzzi",
    "marble", "waterfront", "panoramic", "terrace", "concierge", "smarthome", "infinity", "rooftop", "yacht",
    "golfcourse", "designer",
];

const NEGATIVE: [&str; 20] = [
    "noisy", "unfurnished", "partition", "basement", "cramped", "outdated", "construction", "damaged", "bedspace",
    "sharing", "leaking", "dusty", "industrial", "warehouse", "sewage", "cracked", "flyover", "landfill", "roadside",
    "shabby",
];

const LOCATIONS: [(&str, i64); 8] = [
    ("Dubai Marina", 40_000),
    ("Palm Jumeirah", 60_000),
    ("Downtown Dubai", 55_000),
    ("Jumeirah Lake Towers", 25_000),
    ("Business Bay", 30_000),
    ("International City", 0),
    ("Discovery Gardens", 8_000),
    ("Al Barsha", 15_000),
];

/// Titles use only tokens shorter than the default minimum length, so they
/// never reach the vocabulary or form n-grams with the description.
fn title(beds: u32) -> String {
    format!("{beds} BR apt")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub records: usize,
    /// Planted keywords, split as evenly as possible into positive and
    /// negative ones (at most 20 of each).
    pub keywords: usize,
    /// Smallest planted |effect| in AED.
    pub effect_min: f64,
    /// Largest planted |effect| in AED.
    pub effect_max: f64,
    pub keyword_probability: f64,
    pub words_per_listing: usize,
    /// Standard deviation of the Gaussian price noise; 0 for none.
    pub noise_sigma: f64,
    /// Plant the keywords but give them no effect on price.
    pub null_effect: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            records: 2000,
            keywords: 20,
            effect_min: 5_000.0,
            effect_max: 20_000.0,
            keyword_probability: 0.2,
            words_per_listing: 10,
            noise_sigma: 5_000.0,
            null_effect: false,
            seed: 0,
        }
    }
}

/// A planted keyword and its price effect in AED.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedKeyword {
    pub term: String,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub records: Vec<ClassifiedRecord>,
    pub planted: Vec<PlantedKeyword>,
}

/// Structured price component, in AED.
pub fn structured_price(beds: u32, baths: u32, size: u64, location: &str) -> i64 {
    let loc = LOCATIONS.iter().find(|(name, _)| *name == location).map_or(0, |(_, e)| *e);
    150_000 + 15_000 * i64::from(beds) + 5_000 * i64::from(baths) + 30 * size as i64 + loc
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    assert!(config.keywords <= POSITIVE.len() + NEGATIVE.len(), "at most 40 keywords");
    assert!(config.words_per_listing >= 1 && config.words_per_listing <= FILLER.len(), "words_per_listing out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n_pos = config.keywords.div_ceil(2);
    let n_neg = config.keywords - n_pos;
    let mut planted = Vec::with_capacity(config.keywords);
    for (words, sign) in [(&POSITIVE[..n_pos], 1.0), (&NEGATIVE[..n_neg], -1.0)] {
        for w in words {
            // whole hundreds keep noiseless prices integral
            let magnitude = (rng.random_range(config.effect_min..=config.effect_max) / 100.0).round() * 100.0;
            planted.push(PlantedKeyword { term: (*w).to_string(), effect: sign * magnitude });
        }
    }

    let noise = (config.noise_sigma > 0.0).then(|| Normal::new(0.0, config.noise_sigma).expect("finite sigma"));
    let mut records = Vec::with_capacity(config.records);
    for _ in 0..config.records {
        let beds: u32 = rng.random_range(0..=5);
        let baths: u32 = rng.random_range(1..=beds.max(1) + 1);
        let size: u64 = 400 + 350 * u64::from(beds) + rng.random_range(0..=600);
        let (location, _) = *LOCATIONS.choose(&mut rng).expect("non-empty");

        let mut present: Vec<usize> =
            (0..planted.len()).filter(|_| rng.random_bool(config.keyword_probability)).collect();
        present.truncate(config.words_per_listing);
        let mut words: Vec<&str> = FILLER
            .choose_multiple(&mut rng, config.words_per_listing - present.len())
            .copied()
            .collect();
        words.extend(present.iter().map(|&k| planted[k].term.as_str()));
        words.shuffle(&mut rng);

        let mut price = structured_price(beds, baths, size, location) as f64;
        if !config.null_effect {
            price += present.iter().map(|&k| planted[k].effect).sum::<f64>();
        }
        if let Some(noise) = &noise {
            price += noise.sample(&mut rng);
        }
        records.push(ClassifiedRecord {
            title: title(beds),
            description: words.join(" "),
            beds,
            baths,
            size,
            location: location.to_string(),
            price: price.round().max(1.0) as u64,
        });
    }
    SynthCorpus { config: config.clone(), records, planted }
}

impl SynthCorpus {
    /// Two listings identical except that one filler word of the second is
    /// replaced by `keyword`. Their true price difference is the keyword's
    /// planted effect.
    pub fn minimal_pair(&self, keyword: &str) -> (ClassifiedRecord, ClassifiedRecord) {
        let k = self.config.words_per_listing;
        let without: Vec<&str> = FILLER[..k].to_vec();
        let mut with = without.clone();
        with[0] = keyword;
        let base = ClassifiedRecord {
            title: title(2),
            description: without.join(" "),
            beds: 2,
            baths: 2,
            size: 1_300,
            location: LOCATIONS[0].0.to_string(),
            price: 0,
        };
        let other = ClassifiedRecord { description: with.join(" "), ..base.clone() };
        (base, other)
    }

    pub fn effect_of(&self, term: &str) -> Option<f64> {
        self.planted.iter().find(|p| p.term == term).map(|p| p.effect)
    }
}
