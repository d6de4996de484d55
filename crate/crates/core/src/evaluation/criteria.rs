use serde::{Deserialize, Serialize};

use crate::auc::Confusion;
use crate::error::{Error, Result};
use crate::reprediction::ApproachOutcome;
use crate::simulator::SimulationRun;

/// Per-approach results of one repetition, scored against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionSet {
    pub auc: f64,
    pub found_defects: u64,
    pub retests: u64,
}

impl CriterionSet {
    pub fn of_run(run: &SimulationRun, retests: u64) -> Self {
        Self {
            auc: final_auc(&run.final_prediction, &run.true_labels),
            found_defects: count_found_defects(&run.final_prediction, &run.true_labels),
            retests,
        }
    }

    pub fn of_outcome(outcome: &ApproachOutcome) -> Self {
        Self::of_run(&outcome.run, outcome.retest_count() as u64)
    }
}

/// Binary-prediction AUC of final predictions against true labels.
pub fn final_auc(predictions: &[bool], labels: &[bool]) -> f64 {
    Confusion::from_pairs(predictions.iter().copied().zip(labels.iter().copied())).auc()
}

pub fn count_found_defects(predictions: &[bool], labels: &[bool]) -> u64 {
    predictions.iter().zip(labels).filter(|(&p, &l)| p && l).count() as u64
}

/// `b - a`: positive when the second approach improves.
pub fn diff(a: f64, b: f64) -> f64 {
    b - a
}

/// `b / a - 1`.
pub fn rdiff(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(b / a - 1.0)
}
