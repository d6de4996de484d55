//! Quick built-in property checks behind the `selftest` subcommand.

use rand::Rng;

use crate::auc::{binary_auc, Confusion};
use crate::bandit::{argmax_set, new_arms, select_arm, PolicyKind, RewardMode};
use crate::evaluation::{exact_p_value, normal_p_value, wilcoxon_signed_rank, SignedRanks};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::learner::LogisticObjective;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn auc_oracle() -> Check {
    let mut rng = rng_from_seed(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..40);
        let pairs: Vec<(bool, bool)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        let c = Confusion::from_pairs(pairs.iter().copied());
        // Pairwise AUC of binary scores: P(score+ > score-) + 0.5 P(tie).
        let pos: Vec<f64> = pairs.iter().filter(|p| p.1).map(|p| f64::from(u8::from(p.0))).collect();
        let neg: Vec<f64> = pairs
            .iter()
            .filter(|p| !p.1)
            .map(|p| f64::from(u8::from(p.0)))
            .collect();
        let brute = if pos.is_empty() || neg.is_empty() {
            0.5
        } else {
            let mut s = 0.0;
            for a in &pos {
                for b in &neg {
                    s += if a > b {
                        1.0
                    } else if a == b {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
            s / (pos.len() * neg.len()) as f64
        };
        worst = worst.max((c.auc() - brute).abs());
    }
    let hand = binary_auc(8, 4, 6, 2);
    Check::new(
        "auc oracle",
        worst <= 1e-12 && (hand - 0.7).abs() <= 1e-12,
        format!("max error {worst:.1e}, TPR=0.8/TNR=0.6 -> {hand}"),
    )
}

fn greedy_is_argmax() -> Check {
    let mut rng = rng_from_seed(12);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(2..8);
        let mut arms = new_arms(k, RewardMode::Binary);
        for arm in arms.iter_mut() {
            arm.auc = f64::from(rng.gen_range(0..5u8)) / 4.0;
            arm.n_selected = 1;
        }
        let expected = argmax_set(arms.iter().map(|a| a.auc));
        let chosen =
            select_arm(&PolicyKind::EpsilonGreedy { epsilon: 0.0 }, &mut arms, 5, &mut rng).unwrap_or(usize::MAX);
        if !expected.contains(&chosen) {
            mismatches += 1;
        }
    }
    Check::new(
        "epsilon=0 selects an argmax arm",
        mismatches == 0,
        format!("{mismatches} mismatches in 1000"),
    )
}

fn wilcoxon_hand_case() -> Check {
    let pairs: Vec<(f64, f64)> = (1..=6).map(|i| (0.0, f64::from(i))).collect();
    let p = wilcoxon_signed_rank(&pairs).unwrap_or(f64::NAN);
    Check::new(
        "wilcoxon n=6 all positive",
        (p - 0.03125).abs() < 1e-12,
        format!("p = {p}"),
    )
}

fn wilcoxon_approximation() -> Check {
    let mut rng = rng_from_seed(13);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let s = SignedRanks::from_differences(&d);
        worst = worst.max((exact_p_value(&s) - normal_p_value(&s)).abs());
    }
    Check::new(
        "wilcoxon approximation n=12",
        worst <= 0.01,
        format!("max |exact - approx| = {worst:.5}"),
    )
}

fn gradient_check() -> Check {
    let mut rng = rng_from_seed(14);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<bool> = (0..15).map(|_| rng.gen()).collect();
        let obj = LogisticObjective::new(&rows, &labels, 1e-4);
        let params: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = obj.gradient(&params);
        for j in 0..params.len() {
            let h = 1e-6;
            let mut up = params.clone();
            let mut down = params.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (obj.loss(&up) - obj.loss(&down)) / (2.0 * h);
            worst = worst.max((fd - g[j]).abs() / g[j].abs().max(1e-3));
        }
    }
    Check::new(
        "logistic gradient",
        worst < 1e-5,
        format!("max relative error {worst:.1e}"),
    )
}

fn small_experiment_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
        learning_sizes = [4]
        repetitions = 6
        [synthetic]
        learning_projects = 8
        target_modules = 120
        learning_modules = [60, 150]
        "#,
    )
    .expect("built-in config parses")
}

fn experiment_checks() -> Vec<Check> {
    let config = small_experiment_config();
    let (a, b) = match (run_experiment(&config), run_experiment(&config)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return vec![Check::new("small experiment", false, e.to_string())],
    };
    let violations = a
        .results
        .iter()
        .filter(|r| {
            let (b, rt, mr) = (
                r.baseline.found_defects,
                r.retest.map(|c| c.found_defects),
                r.multiple_retests.map(|c| c.found_defects),
            );
            rt.is_some_and(|rt| rt < b) || matches!((rt, mr), (Some(rt), Some(mr)) if mr < rt)
        })
        .count();
    let identical = a.report.table1_csv() == b.report.table1_csv()
        && a.report.table2_csv() == b.report.table2_csv()
        && a.manifest.to_text() == b.manifest.to_text();
    vec![
        Check::new(
            "found-defect monotonicity",
            violations == 0,
            format!("{violations} violations in {} repetitions", a.results.len()),
        ),
        Check::new(
            "determinism",
            identical,
            "two runs with one seed give identical reports",
        ),
    ]
}

pub fn run_selftest() -> Vec<Check> {
    let mut checks = vec![
        auc_oracle(),
        greedy_is_argmax(),
        wilcoxon_hand_case(),
        wilcoxon_approximation(),
        gradient_check(),
    ];
    checks.extend(experiment_checks());
    checks
}
