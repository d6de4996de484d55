//! Two-sided Wilcoxon signed-rank test.
//!
//! Zero differences are dropped and tied absolute differences share their
//! average rank. With at most [`EXACT_LIMIT`] non-zero differences the null
//! distribution of W+ is computed exactly over all sign assignments (by
//! dynamic programming over doubled ranks, which keeps tied half-ranks
//! integral). Larger samples use the normal approximation with tie-corrected
//! variance, a continuity correction of 0.5, and a fourth-cumulant
//! (Edgeworth) correction of the tail.

use crate::error::{Error, Result};

pub const EXACT_LIMIT: usize = 25;

/// Relative tolerance under which two absolute differences count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_LIMIT`] non-zero differences, approximate beyond.
    Auto,
    Exact,
    Normal,
}

/// Signed ranks of the non-zero differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRanks {
    /// Average ranks of |d|, in the order of the non-zero differences.
    pub ranks: Vec<f64>,
    pub positive: Vec<bool>,
}

impl SignedRanks {
    pub fn from_differences(differences: &[f64]) -> Self {
        let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
        let n = nonzero.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));
        let mut ranks = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && tied(nonzero[idx[j + 1]].abs(), nonzero[idx[i]].abs()) {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                ranks[k] = avg;
            }
            i = j + 1;
        }
        let positive = nonzero.iter().map(|d| *d > 0.0).collect();
        Self { ranks, positive }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn w_plus(&self) -> f64 {
        self.ranks
            .iter()
            .zip(&self.positive)
            .filter(|(_, &p)| p)
            .map(|(r, _)| r)
            .sum()
    }
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<f64> {
    wilcoxon_signed_rank_with(pairs, WilcoxonMethod::Auto)
}

pub fn wilcoxon_signed_rank_with(pairs: &[(f64, f64)], method: WilcoxonMethod) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Statistics("Wilcoxon test needs at least one pair".into()));
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Statistics("non-finite value in Wilcoxon pairs".into()));
    }
    let differences: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
    let signed = SignedRanks::from_differences(&differences);
    if signed.is_empty() {
        return Ok(1.0);
    }
    let exact = match method {
        WilcoxonMethod::Auto => signed.len() <= EXACT_LIMIT,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    Ok(if exact {
        exact_p_value(&signed)
    } else {
        normal_p_value(&signed)
    })
}

/// Exact two-sided p-value: `min(1, 2 * min(P(W+ >= w), P(W+ <= w)))`.
pub fn exact_p_value(signed: &SignedRanks) -> f64 {
    // Doubled ranks are integers even with average ranks of ties.
    let doubled: Vec<usize> = signed.ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w = (signed.w_plus() * 2.0).round() as usize;
    let all: f64 = counts.iter().sum();
    let lower: f64 = counts[..=w].iter().sum();
    let upper: f64 = counts[w..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

fn standard_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

fn standard_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Normal-approximation two-sided p-value.
///
/// W+ is a sum of independent `r_i * Bernoulli(1/2)` terms, so its
/// cumulants are `k2 = sum(r^2) / 4` (which is the tie-corrected variance)
/// and `k4 = -sum(r^4) / 8`.
pub fn normal_p_value(signed: &SignedRanks) -> f64 {
    let mean: f64 = signed.ranks.iter().sum::<f64>() / 2.0;
    let k2: f64 = signed.ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    let k4: f64 = -signed.ranks.iter().map(|r| r.powi(4)).sum::<f64>() / 8.0;
    if k2 == 0.0 {
        return 1.0;
    }
    let excess_kurtosis = k4 / (k2 * k2);
    let z = ((signed.w_plus() - mean).abs() - 0.5).max(0.0) / k2.sqrt();
    let tail = standard_normal_sf(z) + standard_normal_pdf(z) * excess_kurtosis / 24.0 * (z.powi(3) - 3.0 * z);
    (2.0 * tail).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_equal_pairs_give_one() {
        let pairs = vec![(1.5, 1.5); 10];
        assert_eq!(wilcoxon_signed_rank(&pairs).unwrap(), 1.0);
    }

    #[test]
    fn six_positive_distinct() {
        let pairs: Vec<(f64, f64)> = (1..=6).map(|i| (0.0, i as f64)).collect();
        assert!((wilcoxon_signed_rank(&pairs).unwrap() - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn empty_is_error() {
        assert!(wilcoxon_signed_rank(&[]).is_err());
    }

    #[test]
    fn average_ranks_for_ties() {
        let s = SignedRanks::from_differences(&[0.0, 2.0, -2.0, 1.0, 3.0]);
        assert_eq!(s.ranks, vec![2.5, 2.5, 1.0, 4.0]);
        assert_eq!(s.w_plus(), 7.5);
    }

    #[test]
    fn exact_and_normal_close_for_moderate_n() {
        let pairs: Vec<(f64, f64)> = (0..20).map(|i| (0.0, ((i as f64) * 1.37).sin() + 0.2)).collect();
        let e = wilcoxon_signed_rank_with(&pairs, WilcoxonMethod::Exact).unwrap();
        let a = wilcoxon_signed_rank_with(&pairs, WilcoxonMethod::Normal).unwrap();
        assert!((e - a).abs() < 0.005, "exact {e} normal {a}");
    }
}
