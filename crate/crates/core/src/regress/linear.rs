//! Ordinary least squares with a small ridge term.
//!
//! Solves `min ‖Xw + b − y‖² + λ‖w‖²` with an unpenalised intercept by
//! centring, then Cholesky on the column-scaled normal equations. The ridge
//! term keeps collinear one-hot blocks solvable; with the default λ = 1e-8 the
//! solution is the least-squares fit to working precision on full-rank data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RegressError;
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearParams {
    /// Ridge penalty λ on the weights (not the intercept).
    pub ridge: f64,
    pub fit_intercept: bool,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self { ridge: 1e-8, fit_intercept: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub columns: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Weight per column name plus the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    /// In training-column order.
    pub weights: Vec<(String, f64)>,
    pub intercept: f64,
}

impl LinearWeights {
    pub fn get(&self, column: &str) -> Option<f64> {
        self.weights.iter().find(|(c, _)| c == column).map(|(_, w)| *w)
    }
}

impl LinearModel {
    pub fn weights(&self) -> LinearWeights {
        LinearWeights {
            weights: self.columns.iter().cloned().zip(self.weights.iter().copied()).collect(),
            intercept: self.intercept,
        }
    }

    /// `Σ_j w_j x_j` accumulated in column order, then `+ b`.
    pub fn predict_row(&self, row: impl IntoIterator<Item = f64>) -> f64 {
        let dot = row.into_iter().zip(&self.weights).fold(0.0, |acc, (x, w)| acc + w * x);
        dot + self.intercept
    }

    pub(crate) fn predict_values(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.row_iter().map(|row| self.predict_row(row.iter().copied())).collect()
    }
}

pub(crate) fn fit(params: &LinearParams, x: &FeatureMatrix, y: &[f64]) -> Result<LinearModel, RegressError> {
    if !(params.ridge >= 0.0 && params.ridge.is_finite()) {
        return Err(RegressError::InvalidHyperparameter(format!("ridge must be >= 0, got {}", params.ridge)));
    }
    let (weights, intercept) = solve(x.values(), y, params.ridge, params.fit_intercept);
    Ok(LinearModel { columns: x.column_names().to_vec(), weights, intercept })
}

/// Returns `(w, b)`. `b` is zero when `fit_intercept` is false.
pub fn solve(x: &DMatrix<f64>, y: &[f64], ridge: f64, fit_intercept: bool) -> (Vec<f64>, f64) {
    let (n, p) = x.shape();
    let nf = n as f64;
    let (x_mean, y_mean) = if fit_intercept {
        let xm: Vec<f64> = x.column_iter().map(|c| c.sum() / nf).collect();
        (xm, y.iter().sum::<f64>() / nf)
    } else {
        (vec![0.0; p], 0.0)
    };
    if p == 0 {
        return (Vec::new(), y_mean);
    }

    let mut z = x.clone();
    let mut scale = vec![1.0; p];
    for (j, mut col) in z.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
            scale[j] = norm;
        }
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    // (Zᵀ Z + λ S⁻²) v = Zᵀ y, with w = S⁻¹ v
    let mut gram = z.tr_mul(&z);
    for j in 0..p {
        gram[(j, j)] += ridge / (scale[j] * scale[j]);
    }
    let rhs = z.tr_mul(&yc);
    let v = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => pseudo_solve(gram, &rhs),
    };

    let weights: Vec<f64> = v.iter().zip(&scale).map(|(vj, sj)| vj / sj).collect();
    let intercept = if fit_intercept {
        y_mean - x_mean.iter().zip(&weights).map(|(m, w)| m * w).sum::<f64>()
    } else {
        0.0
    };
    (weights, intercept)
}

/// Minimum-norm solution for a numerically singular system.
fn pseudo_solve(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.svd(true, true);
    let tol = svd.singular_values.max() * 1e-12 * b.len() as f64;
    svd.solve(b, tol).expect("both singular-vector sets were computed")
}
