//! Correlation-based feature selection with Pearson correlations and greedy
//! forward search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    /// Strictly increasing column positions.
    pub indices: Vec<usize>,
    pub merit: f64,
}

/// Pearson product-moment correlation; 0 when either vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Statistics(format!(
            "correlation needs at least 2 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `k * mean(r_cf) / sqrt(k + k(k-1) * mean(r_ff))` for the given subset,
/// where `class_corr[i]` and `feature_corr[i][j]` are absolute correlations.
pub fn subset_merit(subset: &[usize], class_corr: &[f64], feature_corr: &[Vec<f64>]) -> f64 {
    let k = subset.len();
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    let mean_cf = subset.iter().map(|&i| class_corr[i]).sum::<f64>() / kf;
    let mean_ff = if k > 1 {
        let mut sum = 0.0;
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                sum += feature_corr[i][j];
            }
        }
        sum / (kf * (kf - 1.0) / 2.0)
    } else {
        0.0
    };
    let denom = (kf + kf * (kf - 1.0) * mean_ff).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        kf * mean_cf / denom
    }
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

pub fn cfs_select(rows: &[Vec<f64>], labels: &[bool]) -> Result<FeatureSubset> {
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    if rows.len() < 2 {
        return Err(Error::Selection(format!("need at least 2 rows, got {}", rows.len())));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::Selection("one-class label vector".into()));
    }
    let n_features = rows[0].len();
    if n_features == 0 {
        return Err(Error::Selection("no features".into()));
    }

    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let columns: Vec<Vec<f64>> = (0..n_features).map(|j| column(rows, j)).collect();
    let class_corr = columns
        .iter()
        .map(|c| pearson(c, &y).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;

    if class_corr.iter().all(|&r| r == 0.0) {
        log::warn!("no feature correlates with the labels; CFS falls back to all features");
        return Ok(FeatureSubset {
            indices: (0..n_features).collect(),
            merit: 0.0,
        });
    }

    let mut feature_corr = vec![vec![0.0; n_features]; n_features];
    for i in 0..n_features {
        feature_corr[i][i] = 1.0;
        for j in i + 1..n_features {
            let r = pearson(&columns[i], &columns[j])?.abs();
            feature_corr[i][j] = r;
            feature_corr[j][i] = r;
        }
    }

    // Lowest index wins ties throughout.
    let first = (0..n_features).fold(0, |best, j| if class_corr[j] > class_corr[best] { j } else { best });
    let mut selected = vec![first];
    let mut merit = subset_merit(&selected, &class_corr, &feature_corr);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n_features).filter(|j| !selected.contains(j)) {
            let mut trial = selected.clone();
            trial.push(j);
            let m = subset_merit(&trial, &class_corr, &feature_corr);
            if m > merit && best.is_none_or(|(_, bm)| m > bm) {
                best = Some((j, m));
            }
        }
        match best {
            Some((j, m)) => {
                selected.push(j);
                merit = m;
            }
            None => break,
        }
    }
    selected.sort_unstable();
    Ok(FeatureSubset {
        indices: selected,
        merit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[7.0, 7.0, 7.0]).unwrap(), 0.0);
    }

    #[test]
    fn pearson_errors() {
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn all_constant_features_fall_back() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let s = cfs_select(&rows, &[true, false, true, false]).unwrap();
        assert_eq!(s.indices, vec![0, 1]);
        assert_eq!(s.merit, 0.0);
    }

    #[test]
    fn single_feature_merit_is_class_correlation() {
        let rows: Vec<Vec<f64>> = [0.0, 1.0, 3.0, 2.0, 5.0].iter().map(|&v| vec![v]).collect();
        let labels = [false, false, true, false, true];
        let s = cfs_select(&rows, &labels).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let r = pearson(&[0.0, 1.0, 3.0, 2.0, 5.0], &y).unwrap().abs();
        assert_eq!(s.indices, vec![0]);
        assert!((s.merit - r).abs() < 1e-15);
    }

    #[test]
    fn one_class_is_an_error() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(matches!(cfs_select(&rows, &[true, true]), Err(Error::Selection(_))));
    }
}
