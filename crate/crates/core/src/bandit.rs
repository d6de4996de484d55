//! Arm bookkeeping and model-selection policies.
//!
//! Every arm is scored on every tested module against the recorded test
//! result, whichever arm was used for the module.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auc::{score_auc, Confusion};
use crate::error::{Error, Result};

pub const DEFAULT_UCB_C: f64 = std::f64::consts::SQRT_2;

/// What the arms' running AUC is computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// Binary predictions vs. recorded results (balanced accuracy).
    #[default]
    Binary,
    /// Predicted probabilities vs. recorded results (Mann-Whitney AUC).
    Probability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub model_index: usize,
    pub n_selected: u64,
    pub confusion: Confusion,
    pub auc: f64,
    mode: RewardMode,
    scored: Vec<(f64, bool)>,
}

impl ArmState {
    pub fn new(model_index: usize, mode: RewardMode) -> Self {
        Self {
            model_index,
            n_selected: 0,
            confusion: Confusion::default(),
            auc: 0.5,
            mode,
            scored: Vec::new(),
        }
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }

    pub fn evaluations(&self) -> u64 {
        self.confusion.total()
    }

    fn observe(&mut self, predicted: bool, probability: f64, recorded: bool) {
        self.confusion.record(predicted, recorded);
        self.auc = match self.mode {
            RewardMode::Binary => self.confusion.auc(),
            RewardMode::Probability => {
                self.scored.push((probability, recorded));
                score_auc(&self.scored)
            }
        };
    }
}

pub fn new_arms(n: usize, mode: RewardMode) -> Vec<ArmState> {
    (0..n).map(|i| ArmState::new(i, mode)).collect()
}

pub fn arm_auc(tp: u64, fp: u64, tn: u64, fn_: u64) -> f64 {
    crate::auc::binary_auc(tp, fp, tn, fn_)
}

/// Whether a prediction agreed with the recorded result (CO / WR).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluation {
    Correct,
    Wrong,
}

impl Evaluation {
    pub fn of(predicted: bool, recorded: bool) -> Self {
        if predicted == recorded {
            Evaluation::Correct
        } else {
            Evaluation::Wrong
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Evaluation::Correct => "CO",
            Evaluation::Wrong => "WR",
        }
    }
}

/// Scores every arm against one recorded result.
pub fn update_arms(arms: &mut [ArmState], predictions: &[bool], recorded: bool) -> Result<Vec<Evaluation>> {
    let probabilities: Vec<f64> = predictions.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
    update_arms_scored(arms, predictions, &probabilities, recorded)
}

/// As [`update_arms`], also supplying each arm's probability for
/// probability-mode rewards.
pub fn update_arms_scored(
    arms: &mut [ArmState],
    predictions: &[bool],
    probabilities: &[f64],
    recorded: bool,
) -> Result<Vec<Evaluation>> {
    for len in [predictions.len(), probabilities.len()] {
        if len != arms.len() {
            return Err(Error::LengthMismatch {
                expected: arms.len(),
                actual: len,
            });
        }
    }
    Ok(arms
        .iter_mut()
        .zip(predictions.iter().zip(probabilities))
        .map(|(arm, (&predicted, &probability))| {
            arm.observe(predicted, probability, recorded);
            Evaluation::of(predicted, recorded)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind {
    EpsilonGreedy { epsilon: f64 },
    Ucb { c: f64 },
}

impl PolicyKind {
    /// ε ∈ {0, 0.1, 0.2, 0.3} and UCB.
    pub fn replication_set() -> Vec<PolicyKind> {
        vec![
            PolicyKind::EpsilonGreedy { epsilon: 0.0 },
            PolicyKind::EpsilonGreedy { epsilon: 0.1 },
            PolicyKind::EpsilonGreedy { epsilon: 0.2 },
            PolicyKind::EpsilonGreedy { epsilon: 0.3 },
            PolicyKind::Ucb { c: DEFAULT_UCB_C },
        ]
    }

    /// Short label used in reports, e.g. `eps=0.1` or `UCB`.
    pub fn label(&self) -> String {
        match self {
            PolicyKind::EpsilonGreedy { epsilon } => format!("eps={epsilon}"),
            PolicyKind::Ucb { c } if *c == DEFAULT_UCB_C => "UCB".to_string(),
            PolicyKind::Ucb { c } => format!("UCB(c={c})"),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::EpsilonGreedy { epsilon } => write!(f, "epsilon:{epsilon}"),
            PolicyKind::Ucb { c } if *c == DEFAULT_UCB_C => write!(f, "ucb"),
            PolicyKind::Ucb { c } => write!(f, "ucb:{c}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    /// Accepts `epsilon:<e>` and `ucb` / `ucb:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("policy {s:?}: {msg}"));
        let (kind, arg) = match s.trim().split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match kind.to_ascii_lowercase().as_str() {
            "epsilon" | "eps" | "epsilon-greedy" => {
                let epsilon: f64 = arg
                    .ok_or_else(|| bad("missing epsilon value"))?
                    .parse()
                    .map_err(|_| bad("epsilon is not a number"))?;
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(bad("epsilon outside [0, 1]"));
                }
                Ok(PolicyKind::EpsilonGreedy { epsilon })
            }
            "ucb" => {
                let c = match arg {
                    Some(a) => a.parse().map_err(|_| bad("c is not a number"))?,
                    None => DEFAULT_UCB_C,
                };
                if !(c > 0.0 && f64::is_finite(c)) {
                    return Err(bad("c must be positive"));
                }
                Ok(PolicyKind::Ucb { c })
            }
            _ => Err(bad("unknown policy")),
        }
    }
}

/// `auc + c * sqrt(ln t / n_selected)`; untried arms score +infinity.
pub fn ucb_score(arm: &ArmState, t: u64, c: f64) -> f64 {
    if arm.n_selected == 0 {
        return f64::INFINITY;
    }
    let t = t.max(1) as f64;
    arm.auc + c * (t.ln() / arm.n_selected as f64).sqrt()
}

fn pick_uniform<R: Rng + ?Sized>(candidates: &[usize], rng: &mut R) -> usize {
    if candidates.len() == 1 {
        candidates[0]
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    }
}

/// Indices attaining the maximum of `score`.
pub fn argmax_set(scores: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut set = Vec::new();
    for (i, s) in scores.into_iter().enumerate() {
        if s > best {
            best = s;
            set.clear();
            set.push(i);
        } else if s == best {
            set.push(i);
        }
    }
    set
}

/// Chooses the arm for step `t` (1-based) and increments its selection count.
///
/// The first step picks uniformly. ε-greedy draws one uniform variate per
/// later step to decide whether to explore; exploitation breaks AUC ties
/// uniformly. UCB tries untried arms first (lowest index), then maximizes
/// [`ucb_score`] with uniform tie-breaking.
pub fn select_arm<R: Rng + ?Sized>(policy: &PolicyKind, arms: &mut [ArmState], t: u64, rng: &mut R) -> Result<usize> {
    if arms.len() < 2 {
        return Err(Error::TooFewArms(format!("{} arm(s) given", arms.len())));
    }
    let chosen = if t <= 1 {
        rng.gen_range(0..arms.len())
    } else {
        match *policy {
            PolicyKind::EpsilonGreedy { epsilon } => {
                if rng.gen::<f64>() < epsilon {
                    rng.gen_range(0..arms.len())
                } else {
                    pick_uniform(&argmax_set(arms.iter().map(|a| a.auc)), rng)
                }
            }
            PolicyKind::Ucb { c } => match arms.iter().position(|a| a.n_selected == 0) {
                Some(untried) => untried,
                None => pick_uniform(&argmax_set(arms.iter().map(|a| ucb_score(a, t, c))), rng),
            },
        }
    };
    arms[chosen].n_selected += 1;
    Ok(chosen)
}
