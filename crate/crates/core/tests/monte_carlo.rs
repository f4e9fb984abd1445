//! Behaviour of the Monte Carlo engine across seeds, workers and scenario sweeps.

use strategem::analytic::analyze_target;
use strategem::mcengine::{estimate_power_mc, estimate_power_mc_with, McOptions, PowerEstimate};
use strategem::scenarios::{
    build_case1, build_case2, build_case3, build_case4, Criteria, Scenario, StrategyKind,
};

use StrategyKind::{Category, Dimensional};

fn workers(w: usize) -> McOptions {
    McOptions {
        workers: Some(w),
        ..McOptions::default()
    }
}

#[test]
fn worker_count_never_changes_counts() {
    let scenarios = [
        build_case1(60, 0.5, 1.0, 1.0, Category).unwrap(),
        build_case3(0.5, 1.0, 1.0, 50, Criteria::Both, Category).unwrap(),
        build_case4(4, 1.0, 1.0, 1.0, 80, 0.01, Dimensional).unwrap(),
    ];
    for s in &scenarios {
        // 1300 replications leave a partial final chunk.
        let serial = estimate_power_mc_with(s, 1_300, 77, &workers(1)).unwrap();
        for w in [2, 5] {
            assert_eq!(
                serial,
                estimate_power_mc_with(s, 1_300, 77, &workers(w)).unwrap(),
                "{}",
                s.label
            );
        }
    }
}

#[test]
fn confidence_intervals_cover_the_analytic_power() {
    let s = build_case1(40, 0.0, 1.0, 1.0, Dimensional).unwrap();
    let t = s.targets[0];
    let truth = analyze_target(&s, t).unwrap().unwrap().power;
    let covered = (0..100u64)
        .filter(|&seed| {
            let e = estimate_power_mc(&s, 1_000, 1_000 + seed).unwrap()[&t];
            e.ci95.0 <= truth && truth <= e.ci95.1
        })
        .count();
    assert!(covered >= 90, "{covered} of 100 intervals cover {truth}");
}

fn sweep(scenarios: &[Scenario], reps: u64) -> Vec<PowerEstimate> {
    scenarios
        .iter()
        .map(|s| estimate_power_mc(s, reps, 5).unwrap()[&s.targets[0]])
        .collect()
}

fn pooled_se(a: &PowerEstimate, b: &PowerEstimate) -> f64 {
    (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
}

fn assert_nondecreasing(est: &[PowerEstimate], what: &str) {
    for w in est.windows(2) {
        assert!(
            w[1].p_hat >= w[0].p_hat - 3.0 * pooled_se(&w[0], &w[1]),
            "{what}: {:?}",
            p(est)
        );
    }
}

fn assert_nonincreasing(est: &[PowerEstimate], what: &str) {
    for w in est.windows(2) {
        assert!(
            w[1].p_hat <= w[0].p_hat + 3.0 * pooled_se(&w[0], &w[1]),
            "{what}: {:?}",
            p(est)
        );
    }
}

fn p(est: &[PowerEstimate]) -> Vec<f64> {
    est.iter().map(|e| e.p_hat).collect()
}

#[test]
fn power_grows_with_sample_size() {
    for (strategy, d) in [(Dimensional, 0.0), (Category, 0.0), (Category, 1.0)] {
        // sigma_eps = 2 keeps the curves away from 1 over the grid.
        let s: Vec<Scenario> = [40, 100, 200, 400]
            .into_iter()
            .map(|n| build_case1(n, d, 2.0, 1.0, strategy).unwrap())
            .collect();
        assert_nondecreasing(&sweep(&s, 10_000), &format!("{strategy} d={d}"));
    }
}

#[test]
fn power_grows_with_criteria_count() {
    let s: Vec<Scenario> = [1, 2, 3, 5, 9]
        .into_iter()
        .map(|m| build_case2(m, 2.0, 1.0, 100, Category).unwrap())
        .collect();
    let est = sweep(&s, 10_000);
    assert_nondecreasing(&est, "criteria count");
    assert!(est[4].p_hat > est[0].p_hat + 0.1, "{:?}", p(&est));
}

#[test]
fn single_criterion_power_falls_with_mixture() {
    let s: Vec<Scenario> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .into_iter()
        .map(|c| build_case3(c, 1.0, 1.0, 100, Criteria::Single, Category).unwrap())
        .collect();
    assert_nonincreasing(&sweep(&s, 10_000), "mixture");
}

#[test]
fn power_falls_with_factor_count_at_full_mixture() {
    for strategy in [Dimensional, Category] {
        let s: Vec<Scenario> = [1, 2, 4, 8, 16]
            .into_iter()
            .map(|nf| build_case4(nf, 1.0, 1.0, 1.0, 100, 0.01, strategy).unwrap())
            .collect();
        let est = sweep(&s, 10_000);
        assert_nonincreasing(&est, &strategy.to_string());
        assert!(est[4].p_hat < est[0].p_hat - 0.3, "{:?}", p(&est));
    }
}
