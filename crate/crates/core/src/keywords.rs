//! Keyword lists from the stage-2 weights and per-word highlighting of a
//! listing.
//!
//! Positive weights push the price above what the structured fields predict
//! and are drawn in blue; negative weights are drawn in red. Colour intensity
//! is the token's |score| relative to the strongest token in the same
//! document.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::TwoStageModel;
use crate::record::ClassifiedRecord;
use crate::text::{keeps_token, raw_tokens};

#[derive(Debug, Error)]
pub enum KeywordError {
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("writing html: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTable {
    /// Largest weight first.
    pub positive: Vec<KeywordEntry>,
    /// Most negative weight first.
    pub negative: Vec<KeywordEntry>,
    pub top_k: usize,
}

/// The `top_k` strongest positive and negative stage-2 terms. Ties are broken
/// by term; zero weights are in neither list.
pub fn keyword_table(model: &TwoStageModel, top_k: usize) -> Result<KeywordTable, KeywordError> {
    if top_k == 0 {
        return Err(KeywordError::InvalidTopK);
    }
    let entries = model.stage2.columns.iter().zip(&model.stage2.weights);
    let mut positive: Vec<KeywordEntry> = entries
        .clone()
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, w)| KeywordEntry { term: t.clone(), weight: *w })
        .collect();
    let mut negative: Vec<KeywordEntry> = entries
        .filter(|(_, w)| **w < 0.0)
        .map(|(t, w)| KeywordEntry { term: t.clone(), weight: *w })
        .collect();
    positive.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    negative.sort_by(|a, b| a.weight.total_cmp(&b.weight).then_with(|| a.term.cmp(&b.term)));
    positive.truncate(top_k);
    negative.truncate(top_k);
    Ok(KeywordTable { positive, negative, top_k })
}

impl KeywordTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("keyword table serialises")
    }
}

impl fmt::Display for KeywordTable {
    /// Two columns, positive terms on the left, negative on the right.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |e: Option<&KeywordEntry>| e.map_or(String::new(), |e| format!("{} ({:+.2})", e.term, e.weight));
        let rows = self.positive.len().max(self.negative.len());
        let left: Vec<String> = (0..rows).map(|i| cell(self.positive.get(i))).collect();
        let right: Vec<String> = (0..rows).map(|i| cell(self.negative.get(i))).collect();
        let w1 = left.iter().map(String::len).max().unwrap_or(0).max("Positive".len());
        let w2 = right.iter().map(String::len).max().unwrap_or(0).max("Negative".len());
        writeln!(f, "| {:<w1$} | {:<w2$} |", "Positive", "Negative")?;
        writeln!(f, "|{}|{}|", "-".repeat(w1 + 2), "-".repeat(w2 + 2))?;
        for (l, r) in left.iter().zip(&right) {
            writeln!(f, "| {l:<w1$} | {r:<w2$} |")?;
        }
        Ok(())
    }
}

/// How an n-gram's weight is shared among the tokens it spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    /// Every covered token receives the full weight.
    #[default]
    Full,
    /// Each of the n covered tokens receives weight / n.
    SplitEvenly,
}

/// What a term contributes per occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// The stage-2 weight itself.
    #[default]
    Weight,
    /// Weight times the term's TF-IDF value in this document.
    WeightTimesValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HighlightConfig {
    pub attribution: Attribution,
    pub score: ScoreMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightedToken {
    /// As written in the listing.
    pub text: String,
    /// `[r, g, b]`, each in `[0, 1]`.
    pub color: [f64; 3],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HighlightedDocument {
    pub tokens: Vec<HighlightedToken>,
}

/// Scores every word of the listing (short words and stop words included)
/// by the kept stage-2 terms that cover it.
pub fn highlight(model: &TwoStageModel, record: &ClassifiedRecord, config: &HighlightConfig) -> HighlightedDocument {
    let text = record.text();
    let tokens = raw_tokens(&text);
    let mut scores = vec![0.0; tokens.len()];

    let weights: HashMap<&str, f64> =
        model.stage2.columns.iter().map(String::as_str).zip(model.stage2.weights.iter().copied()).collect();
    let values: HashMap<&str, f64> = match config.score {
        ScoreMode::Weight => HashMap::new(),
        ScoreMode::WeightTimesValue => {
            let x = model.text_features(std::slice::from_ref(record));
            model.stage2.columns.iter().enumerate().map(|(j, c)| (c.as_str(), x.values()[(0, j)])).collect()
        }
    };

    // positions (into `tokens`) of the tokens that form n-grams
    let kept: Vec<usize> = (0..tokens.len()).filter(|&i| keeps_token(&tokens[i].1, &model.text_config)).collect();
    for n in 1..=model.text_config.ngram_max.min(kept.len()) {
        for window in kept.windows(n) {
            let term = window.iter().map(|&i| tokens[i].1.as_str()).collect::<Vec<_>>().join("_");
            let Some(&w) = weights.get(term.as_str()) else { continue };
            let per_occurrence = match config.score {
                ScoreMode::Weight => w,
                ScoreMode::WeightTimesValue => w * values[term.as_str()],
            };
            let share = match config.attribution {
                Attribution::Full => per_occurrence,
                Attribution::SplitEvenly => per_occurrence / n as f64,
            };
            for &i in window {
                scores[i] += share;
            }
        }
    }

    let max = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let tokens = tokens
        .into_iter()
        .zip(scores)
        .map(|(((s, e), _), score)| HighlightedToken { text: text[s..e].to_string(), color: color_for(score, max), score })
        .collect();
    HighlightedDocument { tokens }
}

fn color_for(score: f64, max: f64) -> [f64; 3] {
    if score == 0.0 || max == 0.0 {
        return [0.0; 3];
    }
    let intensity = (score.abs() / max).min(1.0);
    if score < 0.0 {
        [intensity, 0.0, 0.0]
    } else {
        [0.0, 0.0, intensity]
    }
}

/// Channel value in `[0, 1]` to `0..=255`, rounding half up.
pub fn channel_byte(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

impl HighlightedDocument {
    /// `<span>` elements separated by single spaces.
    pub fn to_html_fragment(&self) -> String {
        self.tokens
            .iter()
            .map(|t| {
                let [r, g, b] = t.color.map(channel_byte);
                format!("<span style=\"color: rgb({r},{g},{b})\">{}</span>", escape_html(&t.text))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// A standalone HTML page.
    pub fn to_html(&self) -> String {
        html_page(std::slice::from_ref(self), None)
    }
}

/// One page with a paragraph per document. `note` is emitted as an HTML
/// comment in the head.
pub fn html_page(documents: &[HighlightedDocument], note: Option<&str>) -> String {
    let mut out = String::from("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Highlighted listing</title>\n");
    if let Some(note) = note {
        out.push_str("<!--\n");
        out.push_str(&note.replace("--", "- -"));
        out.push_str("\n-->\n");
    }
    out.push_str("</head>\n<body>\n");
    for doc in documents {
        out.push_str("<p>");
        out.push_str(&doc.to_html_fragment());
        out.push_str("</p>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

pub fn render_html(doc: &HighlightedDocument, path: impl AsRef<Path>) -> Result<(), KeywordError> {
    std::fs::write(path, doc.to_html())?;
    Ok(())
}
