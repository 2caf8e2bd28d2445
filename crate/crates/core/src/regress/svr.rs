//! Linear ε-insensitive support vector regression.
//!
//! Minimises `½‖w‖² + C Σ max(0, |y − (w·x + b)| − ε)` by coordinate descent
//! on the dual (one clipped Newton step per example per sweep). The bias is
//! handled as an extra input fixed at 1. Inputs and target are standardised
//! before solving when `standardize` is set; the returned model is expressed
//! in the original units.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{target_scaler, RegressError, Standardizer};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    /// Tube half-width in target units; `None` uses
    /// `epsilon_fraction · std(y)`.
    pub epsilon: Option<f64>,
    pub epsilon_fraction: f64,
    pub max_epochs: usize,
    /// Stop once the largest projected-gradient violation in a sweep falls
    /// below this.
    pub tolerance: f64,
    pub standardize: bool,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 1.0, epsilon: None, epsilon_fraction: 0.1, max_epochs: 100_000, tolerance: 1e-6, standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub columns: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Tube half-width used in training, target units.
    pub epsilon: f64,
    /// Sweeps run before convergence or the epoch cap.
    pub epochs_run: usize,
}

impl SvrModel {
    pub(crate) fn predict_values(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.row_iter()
            .map(|row| row.iter().zip(&self.weights).fold(0.0, |acc, (v, w)| acc + w * v) + self.intercept)
            .collect()
    }
}

pub(crate) fn fit(params: &SvrParams, x: &FeatureMatrix, y: &[f64], seed: u64) -> Result<SvrModel, RegressError> {
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(RegressError::InvalidHyperparameter(format!("svr C must be positive, got {}", params.c)));
    }
    let epsilon = match params.epsilon {
        Some(e) => e,
        None => {
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            params.epsilon_fraction * (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
        }
    };
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(RegressError::InvalidHyperparameter(format!("svr epsilon must be >= 0, got {epsilon}")));
    }

    let d = x.ncols();
    let (scaler, (t_mean, t_scale)) = if params.standardize {
        (Standardizer::fit(x.values()), target_scaler(y))
    } else {
        (Standardizer::identity(d), (0.0, 1.0))
    };
    let rows = scaler.transform_rows(x.values());
    let target: Vec<f64> = y.iter().map(|v| (v - t_mean) / t_scale).collect();
    let (w, b, epochs_run) = solve_dual(&rows, d, &target, params.c, epsilon / t_scale, params, seed);

    // back to original units: y = t_mean + t_scale (Σ w_j (x_j − m_j)/s_j + b)
    let weights: Vec<f64> = w.iter().zip(&scaler.scale).map(|(wj, sj)| t_scale * wj / sj).collect();
    let shift: f64 = w.iter().zip(&scaler.mean).zip(&scaler.scale).map(|((wj, mj), sj)| wj * mj / sj).sum();
    let intercept = t_mean + t_scale * (b - shift);
    Ok(SvrModel { columns: x.column_names().to_vec(), weights, intercept, epsilon, epochs_run })
}

/// Dual coordinate descent over `β_i ∈ [−C, C]` with `w = Σ β_i x̃_i`,
/// `x̃_i = [x_i, 1]`, with shrinking: an example stuck at a bound by more
/// than the previous sweep's largest violation is set aside until the active
/// set converges, then everything is rechecked. Returns `(w, b, sweeps)`.
fn solve_dual(
    rows: &[f64],
    d: usize,
    y: &[f64],
    c: f64,
    eps: f64,
    params: &SvrParams,
    seed: u64,
) -> (Vec<f64>, f64, usize) {
    let n = y.len();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut beta = vec![0.0; n];
    let q_diag: Vec<f64> = (0..n).map(|i| rows[i * d..(i + 1) * d].iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
    let mut index: Vec<usize> = (0..n).collect();
    let mut active = n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev_max = f64::INFINITY;
    let mut sweeps = 0;

    while sweeps < params.max_epochs {
        sweeps += 1;
        index[..active].shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        let mut s = 0;
        while s < active {
            let i = index[s];
            let xi = &rows[i * d..(i + 1) * d];
            let g = xi.iter().zip(&w).fold(b, |acc, (v, wj)| acc + v * wj) - y[i];
            let gp = g + eps;
            let gn = g - eps;
            let bi = beta[i];

            let (violation, shrink) = if bi == 0.0 {
                if gp < 0.0 {
                    (-gp, false)
                } else if gn > 0.0 {
                    (gn, false)
                } else {
                    (0.0, gp > prev_max && gn < -prev_max)
                }
            } else if bi >= c {
                (gp.max(0.0), gp < -prev_max)
            } else if bi <= -c {
                ((-gn).max(0.0), gn > prev_max)
            } else if bi > 0.0 {
                (gp.abs(), false)
            } else {
                (gn.abs(), false)
            };
            if shrink {
                active -= 1;
                index.swap(s, active);
                continue;
            }
            max_violation = max_violation.max(violation);

            let h = q_diag[i];
            let step = if gp < h * bi {
                -gp / h
            } else if gn > h * bi {
                -gn / h
            } else {
                -bi
            };
            let new_beta = (bi + step).clamp(-c, c);
            let delta = new_beta - bi;
            if delta != 0.0 {
                beta[i] = new_beta;
                for (wj, v) in w.iter_mut().zip(xi) {
                    *wj += delta * v;
                }
                b += delta;
            }
            s += 1;
        }
        if max_violation < params.tolerance {
            if active == n {
                break;
            }
            active = n;
            prev_max = f64::INFINITY;
            continue;
        }
        prev_max = max_violation;
    }
    (w, b, sweeps)
}
