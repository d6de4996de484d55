//! Baseline bandit-driven testing pass over a randomized module order.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{new_arms, select_arm, update_arms_scored, ArmState, Evaluation, PolicyKind, RewardMode};
use crate::dataset::ProjectDataset;
use crate::error::{Error, Result};
use crate::learner::DefectModel;
use crate::rng::{SimRng, StreamSeeds};

pub const DEFAULT_P_OVERLOOK: f64 = 0.2;

/// Chance that testing a defective module records it as non-defective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlookModel {
    pub p_overlook: f64,
}

impl OverlookModel {
    pub fn new(p_overlook: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_overlook) {
            return Err(Error::Validation(format!(
                "overlook probability {p_overlook} outside [0, 1]"
            )));
        }
        Ok(Self { p_overlook })
    }

    pub fn none() -> Self {
        Self { p_overlook: 0.0 }
    }
}

impl Default for OverlookModel {
    fn default() -> Self {
        Self {
            p_overlook: DEFAULT_P_OVERLOOK,
        }
    }
}

/// Simulates one test. Non-defective modules always test clean and consume
/// no randomness; defective modules consume exactly one uniform variate.
pub fn record_test<R: Rng + ?Sized>(true_label: bool, overlook: OverlookModel, rng: &mut R) -> bool {
    if !true_label {
        return false;
    }
    rng.gen::<f64>() >= overlook.p_overlook
}

pub fn make_order<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effort {
    High,
    Low,
}

/// Which incorrect-selection case a tested module falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeCase {
    /// Predicted defective, actually clean.
    Alpha,
    /// Predicted clean, actually defective.
    Beta,
    /// Predicted defective, actually defective, but the test missed it.
    Gamma,
    None,
}

impl OutcomeCase {
    pub fn classify(used_prediction: bool, true_label: bool, recorded: bool) -> Self {
        match (used_prediction, true_label) {
            (true, false) => OutcomeCase::Alpha,
            (false, true) => OutcomeCase::Beta,
            (true, true) if !recorded => OutcomeCase::Gamma,
            _ => OutcomeCase::None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            OutcomeCase::Alpha => "alpha",
            OutcomeCase::Beta => "beta",
            OutcomeCase::Gamma => "gamma",
            OutcomeCase::None => "none",
        }
    }
}

/// Per-arm predictions for every target module, indexed `[module][arm]`.
/// Predictions do not depend on test order, so they are computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    labels: Vec<Vec<bool>>,
    probabilities: Vec<Vec<f64>>,
    arm_names: Vec<String>,
}

impl PredictionTable {
    pub fn compute(models: &[DefectModel], target: &ProjectDataset) -> Result<Self> {
        let mut labels = Vec::with_capacity(target.len());
        let mut probabilities = Vec::with_capacity(target.len());
        for module in &target.modules {
            let probs = models
                .iter()
                .map(|m| m.predict_prob(module))
                .collect::<Result<Vec<f64>>>()?;
            labels.push(models.iter().zip(&probs).map(|(m, &p)| m.label_for(p)).collect());
            probabilities.push(probs);
        }
        Ok(Self {
            labels,
            probabilities,
            arm_names: models.iter().map(|m| m.source_project.clone()).collect(),
        })
    }

    /// Table from precomputed per-arm columns: `labels[a][m]` and
    /// `probabilities[a][m]` for arm `a` and module `m`.
    pub fn from_columns(arm_names: Vec<String>, labels: &[&[bool]], probabilities: &[&[f64]]) -> Result<Self> {
        if labels.len() != arm_names.len() || probabilities.len() != arm_names.len() {
            return Err(Error::LengthMismatch {
                expected: arm_names.len(),
                actual: labels.len().min(probabilities.len()),
            });
        }
        let n = labels.first().map_or(0, |c| c.len());
        if let Some(bad) = labels
            .iter()
            .map(|c| c.len())
            .chain(probabilities.iter().map(|c| c.len()))
            .find(|&l| l != n)
        {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bad,
            });
        }
        Ok(Self {
            labels: (0..n).map(|m| labels.iter().map(|c| c[m]).collect()).collect(),
            probabilities: (0..n).map(|m| probabilities.iter().map(|c| c[m]).collect()).collect(),
            arm_names,
        })
    }

    /// Table from fixed binary predictions (probabilities 1.0 / 0.0).
    pub fn from_labels(labels: Vec<Vec<bool>>) -> Result<Self> {
        let arms = labels.first().map_or(0, Vec::len);
        if let Some(bad) = labels.iter().find(|r| r.len() != arms) {
            return Err(Error::LengthMismatch {
                expected: arms,
                actual: bad.len(),
            });
        }
        let probabilities = labels
            .iter()
            .map(|r| r.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect())
            .collect();
        Ok(Self {
            labels,
            probabilities,
            arm_names: (0..arms).map(|i| format!("model{i}")).collect(),
        })
    }

    pub fn n_modules(&self) -> usize {
        self.labels.len()
    }

    pub fn n_arms(&self) -> usize {
        self.arm_names.len()
    }

    pub fn labels(&self, module: usize) -> &[bool] {
        &self.labels[module]
    }

    pub fn probabilities(&self, module: usize) -> &[f64] {
        &self.probabilities[module]
    }

    pub fn arm_names(&self) -> &[String] {
        &self.arm_names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestLogEntry {
    pub module_index: usize,
    pub module_id: String,
    /// 1-based position in the test order.
    pub order: usize,
    pub per_arm_prediction: Vec<bool>,
    pub selected_arm: usize,
    pub used_prediction: bool,
    pub recorded_result: bool,
    pub true_label: bool,
    pub effort: Effort,
    pub outcome_case: OutcomeCase,
    pub evaluations: Vec<Evaluation>,
    pub per_arm_auc_after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub module_ids: Vec<String>,
    pub true_labels: Vec<bool>,
    pub order: Vec<usize>,
    pub log: Vec<TestLogEntry>,
    /// Final prediction per module index.
    pub final_prediction: Vec<bool>,
    pub arms: Vec<ArmState>,
    pub predictions: PredictionTable,
    pub policy: PolicyKind,
    pub seeds: Option<StreamSeeds>,
}

impl SimulationRun {
    pub fn n_modules(&self) -> usize {
        self.module_ids.len()
    }

    pub fn final_prediction_by_id(&self) -> Vec<(&str, bool)> {
        self.module_ids
            .iter()
            .map(String::as_str)
            .zip(self.final_prediction.iter().copied())
            .collect()
    }

    /// Predictions the baseline pass used, per module index.
    pub fn baseline_prediction(&self) -> Vec<bool> {
        let mut out = vec![false; self.n_modules()];
        for entry in &self.log {
            out[entry.module_index] = entry.used_prediction;
        }
        out
    }

    pub fn arm_aucs(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.auc).collect()
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: order.len(),
        });
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Validation("test order is not a permutation".into()));
        }
    }
    Ok(())
}

/// Runs the baseline pass with models' predictions computed up front.
#[allow(clippy::too_many_arguments)]
pub fn run_baseline(
    models: &[DefectModel],
    target: &ProjectDataset,
    order: &[usize],
    policy: &PolicyKind,
    overlook: OverlookModel,
    reward: RewardMode,
    policy_rng: &mut SimRng,
    noise_rng: &mut SimRng,
) -> Result<SimulationRun> {
    let table = PredictionTable::compute(models, target)?;
    let ids: Vec<String> = target.modules.iter().map(|m| m.id.clone()).collect();
    run_baseline_with_table(
        table,
        ids,
        target.labels(),
        order,
        policy,
        overlook,
        reward,
        policy_rng,
        noise_rng,
    )
}

/// For each module in `order`: select an arm, use its prediction, test the
/// module, and score every arm against the recorded result.
#[allow(clippy::too_many_arguments)]
pub fn run_baseline_with_table(
    table: PredictionTable,
    module_ids: Vec<String>,
    true_labels: Vec<bool>,
    order: &[usize],
    policy: &PolicyKind,
    overlook: OverlookModel,
    reward: RewardMode,
    policy_rng: &mut SimRng,
    noise_rng: &mut SimRng,
) -> Result<SimulationRun> {
    let n = table.n_modules();
    if module_ids.len() != n || true_labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: module_ids.len().min(true_labels.len()),
        });
    }
    check_permutation(order, n)?;
    if table.n_arms() < 2 {
        return Err(Error::TooFewArms(format!("{} model(s)", table.n_arms())));
    }

    let mut arms = new_arms(table.n_arms(), reward);
    let mut final_prediction = vec![false; n];
    let mut log = Vec::with_capacity(n);
    for (step, &module) in order.iter().enumerate() {
        let t = step as u64 + 1;
        let selected = select_arm(policy, &mut arms, t, policy_rng)?;
        let predictions = table.labels(module);
        let used = predictions[selected];
        let truth = true_labels[module];
        let recorded = record_test(truth, overlook, noise_rng);
        let evaluations = update_arms_scored(&mut arms, predictions, table.probabilities(module), recorded)?;
        final_prediction[module] = used;
        log.push(TestLogEntry {
            module_index: module,
            module_id: module_ids[module].clone(),
            order: step + 1,
            per_arm_prediction: predictions.to_vec(),
            selected_arm: selected,
            used_prediction: used,
            recorded_result: recorded,
            true_label: truth,
            effort: if used { Effort::High } else { Effort::Low },
            outcome_case: OutcomeCase::classify(used, truth, recorded),
            evaluations,
            per_arm_auc_after: arms.iter().map(|a| a.auc).collect(),
        });
    }

    Ok(SimulationRun {
        module_ids,
        true_labels,
        order: order.to_vec(),
        log,
        final_prediction,
        arms,
        predictions: table,
        policy: *policy,
        seeds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::PolicyKind;
    use crate::rng::rng_from_seed;

    fn greedy() -> PolicyKind {
        PolicyKind::EpsilonGreedy { epsilon: 0.0 }
    }

    #[test]
    fn record_test_rules() {
        let mut rng = rng_from_seed(3);
        for p in [0.0, 0.5, 1.0] {
            assert!(!record_test(false, OverlookModel { p_overlook: p }, &mut rng));
        }
        assert!(record_test(true, OverlookModel::none(), &mut rng));
        assert!(!record_test(true, OverlookModel { p_overlook: 1.0 }, &mut rng));
    }

    #[test]
    fn clean_modules_consume_no_randomness() {
        let mut a = rng_from_seed(5);
        let mut b = rng_from_seed(5);
        record_test(false, OverlookModel::default(), &mut a);
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn make_order_basics() {
        assert_eq!(make_order(1, &mut rng_from_seed(0)), vec![0]);
        assert_eq!(
            make_order(50, &mut rng_from_seed(8)),
            make_order(50, &mut rng_from_seed(8))
        );
        let mut o = make_order(50, &mut rng_from_seed(8));
        o.sort_unstable();
        assert_eq!(o, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn outcome_cases() {
        assert_eq!(OutcomeCase::classify(true, false, false), OutcomeCase::Alpha);
        assert_eq!(OutcomeCase::classify(false, true, true), OutcomeCase::Beta);
        assert_eq!(OutcomeCase::classify(false, true, false), OutcomeCase::Beta);
        assert_eq!(OutcomeCase::classify(true, true, false), OutcomeCase::Gamma);
        assert_eq!(OutcomeCase::classify(true, true, true), OutcomeCase::None);
        assert_eq!(OutcomeCase::classify(false, false, false), OutcomeCase::None);
    }

    #[test]
    fn rejects_non_permutation() {
        let table = PredictionTable::from_labels(vec![vec![true, false]; 3]).unwrap();
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let err = run_baseline_with_table(
            table,
            ids,
            vec![true, false, true],
            &[0, 0, 1],
            &greedy(),
            OverlookModel::none(),
            RewardMode::Binary,
            &mut rng_from_seed(0),
            &mut rng_from_seed(1),
        );
        assert!(err.is_err());
    }

    /// Arm 0 is always right, arm 1 always wrong; ten modules alternate
    /// defective/clean. After the first step arm 0's AUC is never below arm
    /// 1's, and once it is strictly better (from step 2 on, after the first
    /// test separates them) greedy selection sticks to it.
    #[test]
    fn scripted_dominant_arm() {
        let truth: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let labels: Vec<Vec<bool>> = truth.iter().map(|&t| vec![t, !t]).collect();
        let table = PredictionTable::from_labels(labels).unwrap();
        let ids: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let order: Vec<usize> = (0..10).collect();
        for seed in 0..20 {
            let run = run_baseline_with_table(
                table.clone(),
                ids.clone(),
                truth.clone(),
                &order,
                &greedy(),
                OverlookModel::none(),
                RewardMode::Binary,
                &mut rng_from_seed(seed),
                &mut rng_from_seed(seed + 100),
            )
            .unwrap();
            // Step 1 has one class tested: both AUCs stay 0.5 (tie).
            assert_eq!(run.log[0].per_arm_auc_after, vec![0.5, 0.5]);
            // Step 2 sees both classes: arm 0 = 1.0, arm 1 = 0.0.
            assert_eq!(run.log[1].per_arm_auc_after, vec![1.0, 0.0]);
            for entry in &run.log[2..] {
                assert_eq!(entry.selected_arm, 0, "seed {seed} step {}", entry.order);
            }
        }
    }

    #[test]
    fn identical_arms_are_interchangeable() {
        let truth = vec![true, false, true, false, false];
        let labels: Vec<Vec<bool>> = vec![
            vec![true, true],
            vec![false, false],
            vec![false, false],
            vec![true, true],
            vec![false, false],
        ];
        let table = PredictionTable::from_labels(labels.clone()).unwrap();
        let ids: Vec<String> = (0..5).map(|i| format!("m{i}")).collect();
        for policy in PolicyKind::replication_set() {
            let run = run_baseline_with_table(
                table.clone(),
                ids.clone(),
                truth.clone(),
                &[4, 2, 0, 1, 3],
                &policy,
                OverlookModel::default(),
                RewardMode::Binary,
                &mut rng_from_seed(11),
                &mut rng_from_seed(12),
            )
            .unwrap();
            for (i, l) in labels.iter().enumerate() {
                assert_eq!(run.final_prediction[i], l[0]);
            }
        }
    }
}
