//! Brute-force reference implementations used to cross-check the library.
#![allow(dead_code, clippy::needless_range_loop)]

use adtext::text::{TextConfig, TfNorm};

pub fn rmse(p: &[f64], a: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..p.len() {
        let d = p[i] - a[i];
        sum += d * d;
    }
    (sum / p.len() as f64).sqrt()
}

/// Mean product of z-scores (population standard deviations).
pub fn pearson(p: &[f64], a: &[f64]) -> Option<f64> {
    let n = p.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    let (mp, ma) = (mean(p), mean(a));
    let (sp, sa) = (sd(p, mp), sd(a, ma));
    if sp == 0.0 || sa == 0.0 {
        return None;
    }
    let mut acc = 0.0;
    for i in 0..p.len() {
        acc += ((p[i] - mp) / sp) * ((a[i] - ma) / sa);
    }
    Some(acc / n)
}

fn words(doc: &str, config: &TextConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in doc.chars().chain(std::iter::once(' ')) {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else if !current.is_empty() {
            let w = current.to_lowercase();
            if w.chars().count() >= config.min_token_length && !config.stopwords.contains(&w) {
                out.push(w);
            }
            current.clear();
        }
    }
    out
}

fn terms(doc: &str, config: &TextConfig) -> Vec<String> {
    let w = words(doc, config);
    let mut out = Vec::new();
    for n in 1..=config.ngram_max {
        if n > w.len() {
            break;
        }
        for i in 0..=(w.len() - n) {
            out.push(w[i..i + n].join("_"));
        }
    }
    out
}

/// Returns the sorted vocabulary and the dense TF-IDF rows.
pub fn tfidf(docs: &[String], config: &TextConfig) -> (Vec<String>, Vec<Vec<f64>>) {
    let per_doc: Vec<Vec<String>> = docs.iter().map(|d| terms(d, config)).collect();
    let mut all: Vec<String> = per_doc.iter().flatten().cloned().collect();
    all.sort();
    all.dedup();
    let n = docs.len() as f64;
    let mut vocab = Vec::new();
    let mut df = Vec::new();
    for t in all {
        let count = per_doc.iter().filter(|d| d.contains(&t)).count();
        let frac = count as f64 / n;
        if frac >= config.df_min_fraction && frac <= config.df_max_fraction {
            vocab.push(t);
            df.push(count);
        }
    }
    let rows = per_doc
        .iter()
        .map(|d| {
            let counts: Vec<f64> = vocab.iter().map(|t| d.iter().filter(|x| *x == t).count() as f64).collect();
            let norm = match config.tf_norm {
                TfNorm::L2 => counts.iter().map(|c| c * c).sum::<f64>().sqrt(),
                TfNorm::TokenCount => counts.iter().sum::<f64>(),
            };
            counts
                .iter()
                .zip(&df)
                .map(|(c, f)| if norm == 0.0 { 0.0 } else { c / norm * (n / *f as f64).ln() })
                .collect()
        })
        .collect();
    (vocab, rows)
}

/// Ridge regression with an unpenalised intercept, by Gaussian elimination
/// with partial pivoting on the normal equations of `[1 X]`.
/// Returns `(weights, intercept)`.
pub fn ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let p = x[0].len() + 1;
    let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(x[i].iter().copied()).collect() };
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..y.len() {
        let r = row(i);
        for j in 0..p {
            for k in 0..p {
                a[j][k] += r[j] * r[k];
            }
            a[j][p] += r[j] * y[i];
        }
    }
    for j in 1..p {
        a[j][j] += lambda;
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in (col + 1)..p {
            let f = a[r][col] / a[col][col];
            for c in col..=p {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut sol = vec![0.0; p];
    for r in (0..p).rev() {
        let mut s = a[r][p];
        for c in (r + 1)..p {
            s -= a[r][c] * sol[c];
        }
        sol[r] = s / a[r][r];
    }
    (sol[1..].to_vec(), sol[0])
}

/// `|a − b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
