//! AUC from confusion counts and from real-valued scores.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (predicted, actual) in pairs {
            c.record(predicted, actual);
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn auc(&self) -> f64 {
        binary_auc(self.tp, self.fp, self.tn, self.fn_)
    }
}

/// AUC of binary predictions: `(TPR + TNR) / 2`, or 0.5 when either class is
/// absent.
pub fn binary_auc(tp: u64, fp: u64, tn: u64, fn_: u64) -> f64 {
    let positives = tp + fn_;
    let negatives = tn + fp;
    if positives == 0 || negatives == 0 {
        return 0.5;
    }
    let tpr = tp as f64 / positives as f64;
    let tnr = tn as f64 / negatives as f64;
    (tpr + tnr) / 2.0
}

/// Mann-Whitney AUC of scores against labels; tied scores count one half.
/// Returns 0.5 when either class is absent.
pub fn score_auc(scored: &[(f64, bool)]) -> f64 {
    let positives = scored.iter().filter(|(_, l)| *l).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return 0.5;
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of average ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = sorted[i..=j].iter().filter(|(_, l)| *l).count();
        rank_sum += avg_rank * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (positives as f64, negatives as f64);
    (rank_sum - p * (p + 1.0) / 2.0) / (p * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_examples() {
        assert!((binary_auc(8, 4, 6, 2) - 0.7).abs() < 1e-15);
        assert_eq!(binary_auc(5, 0, 5, 0), 1.0);
        assert_eq!(binary_auc(0, 0, 0, 0), 0.5);
        assert_eq!(binary_auc(3, 0, 0, 1), 0.5);
    }

    #[test]
    fn score_auc_matches_pair_count() {
        let s = [(0.1, false), (0.4, true), (0.35, false), (0.8, true), (0.4, false)];
        // pairs (pos, neg): (0.4: 1, 1, 0.5) (0.8: 1, 1, 1) -> 5.5 / 6
        assert!((score_auc(&s) - 5.5 / 6.0).abs() < 1e-15);
    }
}
