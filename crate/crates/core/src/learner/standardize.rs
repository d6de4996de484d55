use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    /// Sample standard deviations (n - 1 divisor); constant columns get 1.
    pub scales: Vec<f64>,
}

impl StandardizationParams {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn apply_value(&self, column: usize, value: f64) -> f64 {
        (value - self.means[column]) / self.scales[column]
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &v)| self.apply_value(j, v)).collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

pub fn standardize_fit(rows: &[Vec<f64>]) -> Result<StandardizationParams> {
    if rows.len() < 2 {
        return Err(Error::Training(format!(
            "standardization needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let n_cols = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
        return Err(Error::LengthMismatch {
            expected: n_cols,
            actual: bad.len(),
        });
    }
    let n = rows.len() as f64;
    let mut means = vec![0.0; n_cols];
    let mut scales = vec![1.0; n_cols];
    for j in 0..n_cols {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let ss: f64 = rows.iter().map(|r| (r[j] - mean).powi(2)).sum();
        let sd = (ss / (n - 1.0)).sqrt();
        means[j] = mean;
        if sd > 0.0 && sd.is_finite() {
            scales[j] = sd;
        }
    }
    Ok(StandardizationParams { means, scales })
}
