use std::collections::HashSet;

use bandit_cpdp::bandit::{argmax_set, new_arms, select_arm, PolicyKind, RewardMode};
use bandit_cpdp::dataset::synthetic::generate_synthetic_project;
use bandit_cpdp::dataset::{select_learning_projects, ProjectRegistry};
use bandit_cpdp::evaluation::count_found_defects;
use bandit_cpdp::reprediction::{run_approach, run_passes, ApproachKind, RepredictionSelection, RetestStreams};
use bandit_cpdp::rng::rng_from_seed;
use bandit_cpdp::simulator::{
    make_order, record_test, run_baseline_with_table, OutcomeCase, OverlookModel, PredictionTable, SimulationRun,
};
use proptest::prelude::*;
use rand::Rng;

fn three_sigma(p: f64, n: f64) -> f64 {
    3.0 * (p * (1.0 - p) / n).sqrt()
}

#[test]
fn sampling_never_returns_target_or_duplicates() {
    let mut rng = rng_from_seed(1);
    let projects: Vec<_> = (0..12)
        .map(|i| generate_synthetic_project(&format!("p{i:02}"), 10, 0.3, 3, 1.0, &mut rng).unwrap())
        .collect();
    let registry = ProjectRegistry::new(projects, "p05").unwrap();
    for call in 0..10_000 {
        let k = 1 + call % 11;
        let picked = select_learning_projects(&registry, k, &mut rng).unwrap();
        assert_eq!(picked.len(), k);
        assert!(!picked.iter().any(|p| p == "p05"));
        assert_eq!(picked.iter().collect::<HashSet<_>>().len(), k);
    }
    assert!(select_learning_projects(&registry, 12, &mut rng).is_err());
}

#[test]
fn greedy_equals_argmax_with_uniform_ties() {
    let mut rng = rng_from_seed(2);
    for _ in 0..10_000 {
        let k = rng.gen_range(2..9);
        let mut arms = new_arms(k, RewardMode::Binary);
        for a in arms.iter_mut() {
            a.auc = f64::from(rng.gen_range(0..6u8)) / 5.0;
            a.n_selected = 1;
        }
        let best = argmax_set(arms.iter().map(|a| a.auc));
        let t = rng.gen_range(2..500);
        let chosen = select_arm(&PolicyKind::EpsilonGreedy { epsilon: 0.0 }, &mut arms, t, &mut rng).unwrap();
        assert!(best.contains(&chosen));
        let max = arms.iter().map(|a| a.auc).fold(f64::MIN, f64::max);
        assert_eq!(arms[chosen].auc, max);
    }
}

#[test]
fn full_exploration_is_uniform() {
    let mut rng = rng_from_seed(3);
    let k = 5;
    let mut arms = new_arms(k, RewardMode::Binary);
    arms[2].auc = 0.9;
    let mut counts = vec![0u32; k];
    let draws = 100_000;
    for _ in 0..draws {
        counts[select_arm(&PolicyKind::EpsilonGreedy { epsilon: 1.0 }, &mut arms, 10, &mut rng).unwrap()] += 1;
    }
    let p = 1.0 / k as f64;
    let tol = three_sigma(p, f64::from(draws));
    for c in counts {
        assert!((f64::from(c) / f64::from(draws) - p).abs() <= tol, "frequency {c}");
    }
}

#[test]
fn ucb_tries_every_arm_before_any_repeat() {
    let mut rng = rng_from_seed(4);
    for _ in 0..500 {
        let k = rng.gen_range(2..10);
        let mut arms = new_arms(k, RewardMode::Binary);
        for a in arms.iter_mut() {
            a.auc = rng.gen();
        }
        let policy = PolicyKind::Ucb {
            c: std::f64::consts::SQRT_2,
        };
        let first = select_arm(&policy, &mut arms, 1, &mut rng).unwrap();
        let mut seen = vec![first];
        for t in 2..=k as u64 {
            let untried = (0..k).find(|i| !seen.contains(i)).unwrap();
            let chosen = select_arm(&policy, &mut arms, t, &mut rng).unwrap();
            assert_eq!(chosen, untried);
            seen.push(chosen);
        }
        assert!(arms.iter().all(|a| a.n_selected == 1));
    }
}

#[test]
fn overlook_rate_is_twenty_percent() {
    let mut rng = rng_from_seed(5);
    let n = 100_000;
    let missed = (0..n)
        .filter(|_| !record_test(true, OverlookModel::default(), &mut rng))
        .count();
    let rate = missed as f64 / n as f64;
    assert!((rate - 0.2).abs() <= 0.01, "rate {rate}");
    assert!((0..1000).all(|_| !record_test(false, OverlookModel::default(), &mut rng)));
    assert!((0..1000).all(|_| record_test(true, OverlookModel::none(), &mut rng)));
}

/// Each position-value frequency within ±3σ of 1/n, plus a chi-square test
/// over the whole table (16 degrees of freedom, 0.1% critical value 39.25).
#[test]
fn order_positions_are_uniform() {
    let mut rng = rng_from_seed(0);
    let (n, draws) = (5, 100_000);
    let mut counts = vec![vec![0u32; n]; n];
    for _ in 0..draws {
        for (pos, &m) in make_order(n, &mut rng).iter().enumerate() {
            counts[pos][m] += 1;
        }
    }
    let p = 1.0 / n as f64;
    let tol = three_sigma(p, f64::from(draws));
    let expected = f64::from(draws) * p;
    let mut chi2 = 0.0;
    for row in counts {
        for c in row {
            assert!((f64::from(c) / f64::from(draws) - p).abs() <= tol);
            chi2 += (f64::from(c) - expected).powi(2) / expected;
        }
    }
    assert!(chi2 < 39.25, "chi-square {chi2}");
    assert_eq!(make_order(1, &mut rng), vec![0]);
}

fn random_baseline(seed: u64, arms: usize, n: usize, policy: PolicyKind, overlook: OverlookModel) -> SimulationRun {
    let mut rng = rng_from_seed(seed);
    let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
    let skill: Vec<f64> = (0..arms).map(|_| rng.gen_range(0.4..0.95)).collect();
    let labels: Vec<Vec<bool>> = truth
        .iter()
        .map(|&t| skill.iter().map(|&s| if rng.gen_bool(s) { t } else { !t }).collect())
        .collect();
    let order = make_order(n, &mut rng);
    run_baseline_with_table(
        PredictionTable::from_labels(labels).unwrap(),
        (0..n).map(|i| format!("m{i}")).collect(),
        truth,
        &order,
        &policy,
        overlook,
        RewardMode::Binary,
        &mut rng_from_seed(seed ^ 0xaa),
        &mut rng_from_seed(seed ^ 0xbb),
    )
    .unwrap()
}

fn policy_of(i: u8) -> PolicyKind {
    match i % 5 {
        4 => PolicyKind::Ucb {
            c: std::f64::consts::SQRT_2,
        },
        e => PolicyKind::EpsilonGreedy {
            epsilon: f64::from(e) / 10.0,
        },
    }
}

#[test]
fn beta_cases_equal_false_negatives() {
    for seed in 0..50 {
        let run = random_baseline(seed, 4, 80, policy_of(seed as u8), OverlookModel::default());
        let betas = run.log.iter().filter(|e| e.outcome_case == OutcomeCase::Beta).count();
        let fneg = run
            .final_prediction
            .iter()
            .zip(&run.true_labels)
            .filter(|(&p, &t)| !p && t)
            .count();
        assert_eq!(betas, fneg);
    }
}

fn streams(seed: u64) -> RetestStreams {
    RetestStreams {
        noise: rng_from_seed(seed),
        policy: rng_from_seed(seed + 1),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn retests_only_add_found_defects(seed in any::<u64>(), policy in any::<u8>(), noisy in any::<bool>(), arms in 2usize..6) {
        let overlook = if noisy { OverlookModel::default() } else { OverlookModel::none() };
        let base = random_baseline(seed, arms, 60, policy_of(policy), overlook);
        let r = run_approach(&base, ApproachKind::Retest, overlook, RepredictionSelection::Greedy, &streams(seed)).unwrap();
        let mr = run_approach(&base, ApproachKind::MultipleRetests { passes: 2 }, overlook, RepredictionSelection::Greedy, &streams(seed)).unwrap();
        let found = |run: &SimulationRun| count_found_defects(&run.final_prediction, &run.true_labels);
        prop_assert!(found(&base) <= found(&r.run));
        prop_assert!(found(&r.run) <= found(&mr.run));
        // Flips go ND -> DE only.
        for (m, &p) in base.final_prediction.iter().enumerate() {
            prop_assert!(!p || r.run.final_prediction[m]);
            prop_assert!(!r.run.final_prediction[m] || mr.run.final_prediction[m]);
        }
        // The first pass of multiple retests is the single retest.
        prop_assert_eq!(&mr.retest_log[..r.retest_log.len()], &r.retest_log[..]);
    }

    /// After every retest the re-prediction model is the argmax of the
    /// arms' AUCs recomputed from scratch.
    #[test]
    fn reprediction_model_tracks_argmax(seed in any::<u64>(), arms in 2usize..6) {
        let base = random_baseline(seed, arms, 60, PolicyKind::EpsilonGreedy { epsilon: 0.1 }, OverlookModel::default());
        let (_, log) = run_passes(&base, 2, OverlookModel::default(), RepredictionSelection::Greedy, &mut streams(seed)).unwrap();
        let mut expected_aucs = base.arm_aucs();
        for e in &log {
            prop_assert_eq!(e.reprediction_arm, argmax_set(expected_aucs.iter().copied())[0]);
            expected_aucs = e.arm_aucs_after.clone();
        }
    }
}

#[test]
fn reprediction_model_changes_mid_pass_somewhere() {
    let changed = (0..200u64).any(|seed| {
        let base = random_baseline(
            seed,
            4,
            60,
            PolicyKind::EpsilonGreedy { epsilon: 0.1 },
            OverlookModel::default(),
        );
        let (_, log) = run_passes(
            &base,
            1,
            OverlookModel::default(),
            RepredictionSelection::Greedy,
            &mut streams(seed),
        )
        .unwrap();
        log.windows(2).any(|w| w[0].reprediction_arm != w[1].reprediction_arm)
    });
    assert!(changed, "no scenario exercised a mid-pass model change");
}

#[test]
fn scripted_mid_pass_switch() {
    // t0 is defective; t1..t5 are clean. Both arms catch t0 and each has two
    // false alarms (arm 1 on t1, t2; arm 0 on t4, t5), so both sit at
    // (1 + 3/5) / 2 = 0.8 and the tie goes to arm 0.
    let truth = vec![true, false, false, false, false, false];
    let labels = vec![
        vec![true, true],
        vec![false, true],
        vec![false, true],
        vec![false, false],
        vec![true, false],
        vec![true, false],
    ];
    let mut base = run_baseline_with_table(
        PredictionTable::from_labels(labels).unwrap(),
        (0..6).map(|i| format!("t{i}")).collect(),
        truth,
        &(0..6).collect::<Vec<_>>(),
        &PolicyKind::EpsilonGreedy { epsilon: 0.0 },
        OverlookModel::none(),
        RewardMode::Binary,
        &mut rng_from_seed(0),
        &mut rng_from_seed(0),
    )
    .unwrap();
    assert_eq!(base.arm_aucs(), vec![0.8, 0.8]);
    // Treat every module as a candidate.
    base.final_prediction = vec![false; 6];
    let (after, log) = run_passes(
        &base,
        1,
        OverlookModel::none(),
        RepredictionSelection::Greedy,
        &mut streams(0),
    )
    .unwrap();
    // Arm 0 flips t0 (TP for both, still tied) and t4. The t4 retest records
    // ND: arm 0 drops to (1 + 3/6) / 2 = 0.75, arm 1 rises to (1 + 4/6) / 2,
    // so arm 1 re-predicts t5 as clean and it is not retested.
    let arms: Vec<usize> = log.iter().map(|e| e.reprediction_arm).collect();
    assert_eq!(arms, vec![0, 0, 0, 0, 0, 1]);
    let retested: Vec<bool> = log.iter().map(|e| e.retested).collect();
    assert_eq!(retested, vec![true, false, false, false, true, false]);
    let last = &log[4].arm_aucs_after;
    assert!((last[0] - 0.75).abs() < 1e-12 && (last[1] - (1.0 + 4.0 / 6.0) / 2.0).abs() < 1e-12);
    assert_eq!(after.final_prediction, vec![true, false, false, false, true, false]);
}

#[test]
fn multiple_retests_reach_a_fixpoint() {
    // Arm 0 is a perfect predictor, arm 1 always says clean. Without noise,
    // pass 1 flips every remaining defective module and pass 2 finds nothing.
    let truth: Vec<bool> = (0..30).map(|i| i % 4 == 0).collect();
    let labels: Vec<Vec<bool>> = truth.iter().map(|&t| vec![t, false]).collect();
    let n = truth.len();
    let base = run_baseline_with_table(
        PredictionTable::from_labels(labels).unwrap(),
        (0..n).map(|i| format!("t{i}")).collect(),
        truth.clone(),
        &(0..n).collect::<Vec<_>>(),
        &PolicyKind::EpsilonGreedy { epsilon: 0.3 },
        OverlookModel::none(),
        RewardMode::Binary,
        &mut rng_from_seed(9),
        &mut rng_from_seed(9),
    )
    .unwrap();
    let out = run_approach(
        &base,
        ApproachKind::MultipleRetests { passes: 2 },
        OverlookModel::none(),
        RepredictionSelection::Greedy,
        &streams(1),
    )
    .unwrap();
    let pass2_retests = out
        .retest_log
        .iter()
        .filter(|e| e.pass_index == 2 && e.retested)
        .count();
    assert_eq!(pass2_retests, 0);
    assert_eq!(out.run.final_prediction, truth);
}
