//! Re-prediction and retesting on top of a completed baseline run.
//!
//! After every module has been tested, the most accurate arm becomes the
//! re-prediction model. Modules still predicted non-defective are revisited
//! in the original test order; each one the re-prediction model calls
//! defective is flipped to defective and retested, and the retest result
//! scores all arms, which may change the re-prediction model mid-pass.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandit::{argmax_set, select_arm, update_arms_scored};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::simulator::{record_test, OverlookModel, SimulationRun};

pub const DEFAULT_RETEST_PASSES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RetestLogEntry {
    pub pass_index: usize,
    pub module_index: usize,
    pub module_id: String,
    pub reprediction_arm: usize,
    pub reprediction: bool,
    pub retested: bool,
    pub retest_recorded_result: Option<bool>,
    pub arm_aucs_after: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproachKind {
    Baseline,
    Retest,
    MultipleRetests { passes: usize },
}

impl ApproachKind {
    pub fn passes(&self) -> usize {
        match self {
            ApproachKind::Baseline => 0,
            ApproachKind::Retest => 1,
            ApproachKind::MultipleRetests { passes } => *passes,
        }
    }

    pub fn all() -> Vec<ApproachKind> {
        vec![
            ApproachKind::Baseline,
            ApproachKind::Retest,
            ApproachKind::MultipleRetests {
                passes: DEFAULT_RETEST_PASSES,
            },
        ]
    }
}

impl fmt::Display for ApproachKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproachKind::Baseline => write!(f, "baseline"),
            ApproachKind::Retest => write!(f, "retest"),
            ApproachKind::MultipleRetests { passes } => write!(f, "multiple_retests:{passes}"),
        }
    }
}

impl FromStr for ApproachKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.trim().split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (kind.to_ascii_lowercase().as_str(), arg) {
            ("baseline", None) => Ok(ApproachKind::Baseline),
            ("retest", None) => Ok(ApproachKind::Retest),
            ("multiple_retests" | "multiple-retests", arg) => {
                let passes = match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| Error::Config(format!("approach {s:?}: bad pass count")))?,
                    None => DEFAULT_RETEST_PASSES,
                };
                if passes < 2 {
                    return Err(Error::Config(format!(
                        "approach {s:?}: multiple retests need at least 2 passes"
                    )));
                }
                Ok(ApproachKind::MultipleRetests { passes })
            }
            _ => Err(Error::Config(format!("unknown approach {s:?}"))),
        }
    }
}

/// How the re-prediction model is re-chosen after each retest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepredictionSelection {
    /// Highest AUC, lowest index on ties.
    #[default]
    Greedy,
    /// Reuse the run's bandit policy.
    Policy,
}

/// Highest final AUC; ties go to the lowest index.
pub fn initial_reprediction_model(aucs: &[f64]) -> Result<usize> {
    argmax_set(aucs.iter().copied())
        .first()
        .copied()
        .ok_or_else(|| Error::Validation("no arms to choose a re-prediction model from".into()))
}

/// Random streams a retest pass consumes.
#[derive(Debug, Clone)]
pub struct RetestStreams {
    pub noise: SimRng,
    /// Used only with [`RepredictionSelection::Policy`].
    pub policy: SimRng,
}

/// One sweep over modules still predicted non-defective, in test order.
/// Mutates `run` in place and returns one entry per candidate visited.
pub fn run_retest_pass(
    run: &mut SimulationRun,
    overlook: OverlookModel,
    pass_index: usize,
    selection: RepredictionSelection,
    streams: &mut RetestStreams,
) -> Result<Vec<RetestLogEntry>> {
    let mut model = initial_reprediction_model(&run.arm_aucs())?;
    let mut entries = Vec::new();
    let order = run.order.clone();
    for module in order {
        if run.final_prediction[module] {
            continue;
        }
        let reprediction = run.predictions.labels(module)[model];
        let mut entry = RetestLogEntry {
            pass_index,
            module_index: module,
            module_id: run.module_ids[module].clone(),
            reprediction_arm: model,
            reprediction,
            retested: false,
            retest_recorded_result: None,
            arm_aucs_after: Vec::new(),
        };
        if reprediction {
            run.final_prediction[module] = true;
            let recorded = record_test(run.true_labels[module], overlook, &mut streams.noise);
            update_arms_scored(
                &mut run.arms,
                run.predictions.labels(module),
                run.predictions.probabilities(module),
                recorded,
            )?;
            entry.retested = true;
            entry.retest_recorded_result = Some(recorded);
            model = match selection {
                RepredictionSelection::Greedy => initial_reprediction_model(&run.arm_aucs())?,
                RepredictionSelection::Policy => {
                    let t = run.arms[0].evaluations() + 1;
                    select_arm(&run.policy, &mut run.arms, t, &mut streams.policy)?
                }
            };
        }
        entry.arm_aucs_after = run.arm_aucs();
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Debug, Clone)]
pub struct ApproachOutcome {
    pub approach: ApproachKind,
    pub run: SimulationRun,
    pub retest_log: Vec<RetestLogEntry>,
}

impl ApproachOutcome {
    pub fn retest_count(&self) -> usize {
        self.retest_log.iter().filter(|e| e.retested).count()
    }
}

/// Applies `passes` retest passes to a clone of `baseline`.
pub fn run_passes(
    baseline: &SimulationRun,
    passes: usize,
    overlook: OverlookModel,
    selection: RepredictionSelection,
    streams: &mut RetestStreams,
) -> Result<(SimulationRun, Vec<RetestLogEntry>)> {
    let mut run = baseline.clone();
    let mut log = Vec::new();
    for pass in 1..=passes {
        log.extend(run_retest_pass(&mut run, overlook, pass, selection, streams)?);
    }
    Ok((run, log))
}

/// Derives an approach's final run from a shared baseline. The streams are
/// cloned, so every approach of a repetition sees the same retest noise.
pub fn run_approach(
    baseline: &SimulationRun,
    approach: ApproachKind,
    overlook: OverlookModel,
    selection: RepredictionSelection,
    streams: &RetestStreams,
) -> Result<ApproachOutcome> {
    let (run, retest_log) = run_passes(baseline, approach.passes(), overlook, selection, &mut streams.clone())?;
    Ok(ApproachOutcome {
        approach,
        run,
        retest_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{PolicyKind, RewardMode};
    use crate::rng::rng_from_seed;
    use crate::simulator::{run_baseline_with_table, PredictionTable};

    fn streams(seed: u64) -> RetestStreams {
        RetestStreams {
            noise: rng_from_seed(seed),
            policy: rng_from_seed(seed + 1),
        }
    }

    #[test]
    fn initial_model_choice() {
        assert_eq!(initial_reprediction_model(&[0.75, 0.77, 0.74, 0.73]).unwrap(), 1);
        assert_eq!(initial_reprediction_model(&[0.6]).unwrap(), 0);
        assert_eq!(initial_reprediction_model(&[0.7, 0.7]).unwrap(), 0);
        assert!(initial_reprediction_model(&[]).is_err());
    }

    #[test]
    fn approach_parsing() {
        assert_eq!("baseline".parse::<ApproachKind>().unwrap(), ApproachKind::Baseline);
        assert_eq!("retest".parse::<ApproachKind>().unwrap(), ApproachKind::Retest);
        assert_eq!(
            "multiple_retests".parse::<ApproachKind>().unwrap(),
            ApproachKind::MultipleRetests { passes: 2 }
        );
        assert_eq!(
            "multiple_retests:3".parse::<ApproachKind>().unwrap(),
            ApproachKind::MultipleRetests { passes: 3 }
        );
        assert!("multiple_retests:1".parse::<ApproachKind>().is_err());
        assert!("retest:2".parse::<ApproachKind>().is_err());
        for a in ApproachKind::all() {
            assert_eq!(a.to_string().parse::<ApproachKind>().unwrap(), a);
        }
    }

    fn baseline(labels: Vec<Vec<bool>>, truth: Vec<bool>) -> SimulationRun {
        let n = truth.len();
        let table = PredictionTable::from_labels(labels).unwrap();
        let ids = (0..n).map(|i| format!("t{i}")).collect();
        let order: Vec<usize> = (0..n).collect();
        run_baseline_with_table(
            table,
            ids,
            truth,
            &order,
            &PolicyKind::EpsilonGreedy { epsilon: 0.0 },
            OverlookModel::none(),
            RewardMode::Binary,
            &mut rng_from_seed(1),
            &mut rng_from_seed(2),
        )
        .unwrap()
    }

    #[test]
    fn all_defective_means_no_candidates() {
        let run = baseline(vec![vec![true, true]; 4], vec![true, false, true, false]);
        let out = run_approach(
            &run,
            ApproachKind::Retest,
            OverlookModel::none(),
            RepredictionSelection::Greedy,
            &streams(0),
        )
        .unwrap();
        assert!(out.retest_log.is_empty());
        assert_eq!(out.run, run);
    }

    #[test]
    fn no_defective_repredictions_is_a_no_op() {
        let run = baseline(vec![vec![false, false]; 4], vec![true, false, true, false]);
        let out = run_approach(
            &run,
            ApproachKind::Retest,
            OverlookModel::none(),
            RepredictionSelection::Greedy,
            &streams(0),
        )
        .unwrap();
        assert_eq!(out.retest_log.len(), 4);
        assert_eq!(out.retest_count(), 0);
        assert_eq!(out.run.final_prediction, run.final_prediction);
        assert_eq!(out.run.arms, run.arms);
    }

    #[test]
    fn baseline_approach_is_identity_and_retest_is_one_pass() {
        let truth = vec![true, false, true, true, false, false];
        let labels = vec![
            vec![false, true],
            vec![false, false],
            vec![true, true],
            vec![false, true],
            vec![true, false],
            vec![false, true],
        ];
        let run = baseline(labels, truth);
        let b = run_approach(
            &run,
            ApproachKind::Baseline,
            OverlookModel::none(),
            RepredictionSelection::Greedy,
            &streams(3),
        )
        .unwrap();
        assert_eq!(b.run, run);
        let r = run_approach(
            &run,
            ApproachKind::Retest,
            OverlookModel::default(),
            RepredictionSelection::Greedy,
            &streams(3),
        )
        .unwrap();
        let (one_pass, log) = run_passes(
            &run,
            1,
            OverlookModel::default(),
            RepredictionSelection::Greedy,
            &mut streams(3),
        )
        .unwrap();
        assert_eq!(r.run, one_pass);
        assert_eq!(r.retest_log, log);
    }
}
