//! Text features: tokenisation, n-grams, document-frequency pruning, TF-IDF
//! weighting and removal of near-duplicate feature columns.
//!
//! A listing's title and description are joined into one document. Tokens are
//! maximal alphanumeric runs; short tokens and stop words are dropped before
//! n-grams are formed, so a bigram may bridge a removed word. Terms are the
//! n-grams joined with `_` (`palm_jumeirah`).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::record::ClassifiedRecord;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("invalid text configuration: {0}")]
    InvalidConfig(String),
    #[error("reading stop-word list: {0}")]
    Io(#[from] std::io::Error),
}

/// A set of lower-case stop words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StopWords(BTreeSet<String>);

impl StopWords {
    pub fn none() -> Self {
        Self(BTreeSet::new())
    }

    /// One word per line; `#` starts a comment; blank lines ignored.
    pub fn parse(list: &str) -> Self {
        let words = list
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self(words)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TextError> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for StopWords {
    /// The bundled English list.
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

/// Denominator of the term-frequency ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfNorm {
    /// Euclidean norm of the document's vocabulary-term counts.
    #[default]
    L2,
    /// Total count of vocabulary-term occurrences in the document.
    TokenCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    pub min_token_length: usize,
    pub ngram_max: usize,
    /// Terms in a smaller fraction of documents than this are dropped.
    pub df_min_fraction: f64,
    /// Terms in a larger fraction of documents than this are dropped.
    pub df_max_fraction: f64,
    pub stopwords: StopWords,
    /// Columns whose |correlation| with an earlier kept column exceeds this
    /// are removed.
    pub correlation_threshold: f64,
    pub tf_norm: TfNorm,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            min_token_length: 4,
            ngram_max: 2,
            df_min_fraction: 0.01,
            df_max_fraction: 0.5,
            stopwords: StopWords::default(),
            correlation_threshold: 0.99,
            tf_norm: TfNorm::L2,
        }
    }
}

impl TextConfig {
    pub fn validate(&self) -> Result<(), TextError> {
        let bad = |msg: String| Err(TextError::InvalidConfig(msg));
        if self.ngram_max < 1 {
            return bad("ngram_max must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.df_min_fraction) {
            return bad(format!("df_min_fraction {} not in [0, 1)", self.df_min_fraction));
        }
        if !(self.df_max_fraction > 0.0 && self.df_max_fraction <= 1.0) {
            return bad(format!("df_max_fraction {} not in (0, 1]", self.df_max_fraction));
        }
        if self.df_min_fraction >= self.df_max_fraction {
            return bad(format!(
                "df_min_fraction {} must be below df_max_fraction {}",
                self.df_min_fraction, self.df_max_fraction
            ));
        }
        if !(self.correlation_threshold > 0.0 && self.correlation_threshold <= 1.0) {
            return bad(format!("correlation_threshold {} not in (0, 1]", self.correlation_threshold));
        }
        Ok(())
    }
}

/// Anything that can be turned into one text document.
pub trait Document {
    fn document_text(&self) -> String;
}

impl Document for ClassifiedRecord {
    fn document_text(&self) -> String {
        self.text()
    }
}

impl<T: AsRef<str>, D: AsRef<str>> Document for (T, D) {
    fn document_text(&self) -> String {
        format!("{} {}", self.0.as_ref(), self.1.as_ref())
    }
}

impl Document for str {
    fn document_text(&self) -> String {
        self.to_string()
    }
}

impl<T: Document + ?Sized> Document for &T {
    fn document_text(&self) -> String {
        (**self).document_text()
    }
}

impl Document for String {
    fn document_text(&self) -> String {
        self.clone()
    }
}

/// Byte spans of the maximal alphanumeric runs in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Whether a (lower-case) word survives the length and stop-word filters.
pub fn keeps_token(word: &str, config: &TextConfig) -> bool {
    word.chars().count() >= config.min_token_length && !config.stopwords.contains(word)
}

/// Splits on non-alphanumeric characters and drops short tokens and stop
/// words. Expects lower-case input.
pub fn tokenize(text: &str, config: &TextConfig) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| &text[s..e])
        .filter(|w| keeps_token(w, config))
        .map(str::to_string)
        .collect()
}

/// All 1..=`n_max` grams: every unigram in order, then every bigram, and so on.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=n_max.min(tokens.len()) {
        for window in tokens.windows(n) {
            let mut term = String::from(window[0].as_ref());
            for t in &window[1..] {
                term.push('_');
                term.push_str(t.as_ref());
            }
            out.push(term);
        }
    }
    out
}

/// Lower-cased alphanumeric runs of `text` with their byte spans in the
/// original (not lower-cased) string. No filtering.
pub fn raw_tokens(text: &str) -> Vec<((usize, usize), String)> {
    token_spans(text).into_iter().map(|(s, e)| ((s, e), text[s..e].to_lowercase())).collect()
}

/// The term sequence of one document: split, lower-case, filter, n-gram.
pub fn document_terms<D: Document + ?Sized>(doc: &D, config: &TextConfig) -> Vec<String> {
    let tokens: Vec<String> = raw_tokens(&doc.document_text())
        .into_iter()
        .map(|(_, t)| t)
        .filter(|t| keeps_token(t, config))
        .collect();
    ngrams(&tokens, config.ngram_max)
}

/// Surviving terms with their document frequencies and IDF weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile")]
pub struct TextVocabulary {
    /// Lexicographically ordered.
    pub terms: Vec<String>,
    pub doc_frequency: Vec<usize>,
    pub corpus_size: usize,
    #[serde(skip)]
    idf: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct VocabularyFile {
    terms: Vec<String>,
    doc_frequency: Vec<usize>,
    corpus_size: usize,
}

impl From<VocabularyFile> for TextVocabulary {
    fn from(f: VocabularyFile) -> Self {
        Self::new(f.terms, f.doc_frequency, f.corpus_size)
    }
}

impl TextVocabulary {
    /// IDF values are derived as `ln(N / N_i)`.
    pub fn new(terms: Vec<String>, doc_frequency: Vec<usize>, corpus_size: usize) -> Self {
        let n = corpus_size as f64;
        let idf = doc_frequency.iter().map(|&df| (n / df as f64).ln()).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { terms, doc_frequency, corpus_size, idf, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

pub fn fit_vocabulary<D: Document>(documents: &[D], config: &TextConfig) -> Result<TextVocabulary, TextError> {
    config.validate()?;
    if documents.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in documents {
        let unique: HashSet<String> = document_terms(doc, config).into_iter().collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = documents.len() as f64;
    let mut kept: Vec<(String, usize)> = df
        .into_iter()
        .filter(|(_, count)| {
            let frac = *count as f64 / n;
            frac >= config.df_min_fraction && frac <= config.df_max_fraction
        })
        .collect();
    kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let (terms, freqs) = kept.into_iter().unzip();
    Ok(TextVocabulary::new(terms, freqs, documents.len()))
}

/// Term-document matrix of TF-IDF values; columns are vocabulary terms.
pub type TermDocumentMatrix = FeatureMatrix;

/// TF-IDF rows for `documents` against a fitted vocabulary. Terms outside the
/// vocabulary are ignored, including for the TF denominator.
pub fn tfidf_encode<D: Document>(documents: &[D], vocab: &TextVocabulary, config: &TextConfig) -> TermDocumentMatrix {
    let mut values = DMatrix::zeros(documents.len(), vocab.len());
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for (row, doc) in documents.iter().enumerate() {
        counts.clear();
        for term in document_terms(doc, config) {
            if let Some(col) = vocab.index_of(&term) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let norm = match config.tf_norm {
            TfNorm::L2 => counts.values().map(|&c| f64::from(c) * f64::from(c)).sum::<f64>().sqrt(),
            TfNorm::TokenCount => counts.values().map(|&c| f64::from(c)).sum::<f64>(),
        };
        if norm == 0.0 {
            continue;
        }
        for (&col, &c) in &counts {
            values[(row, col)] = f64::from(c) / norm * vocab.idf[col];
        }
    }
    FeatureMatrix::new(vocab.terms.clone(), values).expect("tf-idf values are finite")
}

/// Indices of columns kept and removed by the correlation filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<usize>,
    /// Constant columns first, then correlated ones in scan order.
    pub removed: Vec<usize>,
}

/// Drops constant columns, then scans columns in order and removes every
/// later column whose |Pearson correlation| with a kept column exceeds
/// `threshold`.
pub fn correlation_filter_indices(values: &DMatrix<f64>, threshold: f64) -> FilterOutcome {
    let (n, p) = values.shape();
    let mut removed = Vec::new();
    let mut candidates = Vec::with_capacity(p);
    for j in 0..p {
        let col = values.column(j);
        let first = col.iter().next().copied();
        if n == 0 || col.iter().all(|&v| Some(v) == first) {
            removed.push(j);
        } else {
            candidates.push(j);
        }
    }
    if candidates.len() < 2 {
        return FilterOutcome { kept: candidates, removed };
    }

    // Unit-norm centred columns; their Gram matrix holds the correlations.
    let mut z = values.select_columns(&candidates);
    for mut col in z.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        col /= norm;
    }
    let corr = z.tr_mul(&z);

    let m = candidates.len();
    let mut alive = vec![true; m];
    for i in 0..m {
        if !alive[i] {
            continue;
        }
        for j in (i + 1)..m {
            if alive[j] && corr[(i, j)].abs() > threshold {
                alive[j] = false;
                removed.push(candidates[j]);
            }
        }
    }
    let kept = candidates.into_iter().zip(alive).filter_map(|(c, a)| a.then_some(c)).collect();
    FilterOutcome { kept, removed }
}

/// Matrix-level wrapper returning the surviving matrix and the names of the
/// removed columns.
pub fn correlation_filter(matrix: &FeatureMatrix, threshold: f64) -> (FeatureMatrix, Vec<String>) {
    let outcome = correlation_filter_indices(matrix.values(), threshold);
    let removed = outcome.removed.iter().map(|&i| matrix.column_names()[i].clone()).collect();
    (matrix.select_columns(&outcome.kept), removed)
}
