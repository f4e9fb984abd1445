//! Monte Carlo power estimation.
//!
//! Replication `r` draws from substream `r` of the master seed. Replications
//! run in parallel in fixed-size chunks whose outcomes are merged in index
//! order, so tallies do not depend on the number of workers.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::distrib::RandomStream;
use crate::error::{Error, Result};
use crate::genmodel::sample_cohort;
use crate::hyptest::{pearson_r_test, t_test_equal_var};
use crate::scenarios::{Scenario, Target};
use crate::strategy::{classify, draw_case_control, draw_cross_section, GroupLabel};

/// Default replication count.
pub const DEFAULT_REPLICATIONS: u64 = 10_000;

const Z95: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub p_hat: f64,
    pub replications: u64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub rejected_count: u64,
}

impl PowerEstimate {
    /// Normal-approximation interval, or Wilson's when fewer than ten
    /// rejections or ten non-rejections were seen.
    pub fn from_counts(rejected_count: u64, replications: u64) -> Self {
        assert!(replications > 0 && rejected_count <= replications);
        let n = replications as f64;
        let p = rejected_count as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let ci95 = if rejected_count < 10 || replications - rejected_count < 10 {
            let z2 = Z95 * Z95;
            let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
            let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
            (
                (centre - half).max(0.0).min(p),
                (centre + half).min(1.0).max(p),
            )
        } else {
            ((p - Z95 * se).max(0.0), (p + Z95 * se).min(1.0))
        };
        PowerEstimate {
            p_hat: p,
            replications,
            std_error: se,
            ci95,
            rejected_count,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct McOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Wall-clock allowance. Exceeding it aborts with `Error::PartialResult`.
    pub time_budget: Option<Duration>,
    /// Report completed replications and ETA on standard error.
    pub progress: bool,
}

/// Runs replication `r` and reports, per target, whether the test rejected.
pub fn run_replication(scenario: &Scenario, master_seed: u64, r: u64) -> Result<Vec<bool>> {
    let mut stream = RandomStream::new(master_seed, r);
    let alpha = scenario.alpha;
    match (&scenario.rule, scenario.groups) {
        (Some(rule), Some((n1, n2))) => {
            let sample = draw_case_control(&scenario.model, rule, n1, n2, &mut stream)?;
            scenario
                .targets
                .iter()
                .map(|t| {
                    let patient = sample.patient_xhat.column(t.factor);
                    let control = sample.control_xhat.column(t.factor);
                    Ok(t_test_equal_var(&patient, &control)?.p_value < alpha)
                })
                .collect()
        }
        _ => {
            let cohort = draw_cross_section(&scenario.model, scenario.n, &mut stream)?;
            scenario
                .targets
                .iter()
                .map(|t| {
                    let measure = t.measure.ok_or_else(|| {
                        Error::Configuration("dimensional targets need a measure index".into())
                    })?;
                    let u = cohort.x_hat.column(t.factor);
                    let v = cohort.y.column(measure);
                    Ok(pearson_r_test(&u, &v)?.p_value < alpha)
                })
                .collect()
        }
    }
}

pub fn estimate_power_mc(
    scenario: &Scenario,
    replications: u64,
    master_seed: u64,
) -> Result<BTreeMap<Target, PowerEstimate>> {
    estimate_power_mc_with(scenario, replications, master_seed, &McOptions::default())
}

pub fn estimate_power_mc_with(
    scenario: &Scenario,
    replications: u64,
    master_seed: u64,
    options: &McOptions,
) -> Result<BTreeMap<Target, PowerEstimate>> {
    if replications == 0 {
        return Err(Error::Configuration("replications must be positive".into()));
    }
    let run = || tally(scenario, replications, master_seed, options);
    let counts = match options.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(scenario
        .targets
        .iter()
        .zip(counts)
        .map(|(&t, k)| (t, PowerEstimate::from_counts(k, replications)))
        .collect())
}

fn tally(
    scenario: &Scenario,
    replications: u64,
    master_seed: u64,
    options: &McOptions,
) -> Result<Vec<u64>> {
    let started = Instant::now();
    let mut counts = vec![0u64; scenario.targets.len()];
    let mut done = 0u64;
    let mut last_report = started;
    while done < replications {
        if let Some(budget) = options.time_budget {
            if started.elapsed() > budget {
                return Err(Error::PartialResult {
                    completed: done,
                    requested: replications,
                });
            }
        }
        let end = (done + CHUNK).min(replications);
        let outcomes: Vec<Result<Vec<bool>>> = (done..end)
            .into_par_iter()
            .map(|r| run_replication(scenario, master_seed, r))
            .collect();
        for outcome in outcomes {
            for (c, rejected) in counts.iter_mut().zip(outcome?) {
                *c += rejected as u64;
            }
        }
        done = end;
        if options.progress
            && (last_report.elapsed() > Duration::from_secs(1) || done == replications)
        {
            last_report = Instant::now();
            let elapsed = started.elapsed().as_secs_f64();
            let eta = elapsed / done as f64 * (replications - done) as f64;
            let _ = writeln!(
                std::io::stderr(),
                "[{}] {done}/{replications} replications, ETA {eta:.1}s",
                scenario.label
            );
        }
    }
    Ok(counts)
}

/// Fraction of patients whose true factor `x1` exceeds the sample mean of
/// `x1` among controls, in one cross-section of `n_individuals`.
pub fn estimate_fraction_exceeded_mc(
    scenario: &Scenario,
    n_individuals: usize,
    master_seed: u64,
) -> Result<f64> {
    fraction_exceeded_mc_for(scenario, 0, n_individuals, master_seed)
}

/// As [`estimate_fraction_exceeded_mc`] for factor `factor` (0-based).
pub fn fraction_exceeded_mc_for(
    scenario: &Scenario,
    factor: usize,
    n_individuals: usize,
    master_seed: u64,
) -> Result<f64> {
    if factor >= scenario.model.n_factors() {
        return Err(Error::Configuration(format!(
            "factor x{} out of range for {} factors",
            factor + 1,
            scenario.model.n_factors()
        )));
    }
    let rule = scenario.rule.as_ref().ok_or_else(|| {
        Error::Configuration("fraction exceeded needs a category scenario".into())
    })?;
    let cohort = sample_cohort(
        &scenario.model,
        n_individuals,
        &mut RandomStream::new(master_seed, 0),
    )?;
    let mut patients = Vec::new();
    let (mut control_sum, mut controls) = (0.0, 0usize);
    for r in 0..cohort.len() {
        let x1 = cohort.x.get(r, factor);
        match classify(cohort.y.row(r), rule)? {
            GroupLabel::Patient => patients.push(x1),
            GroupLabel::Control => {
                control_sum += x1;
                controls += 1;
            }
            GroupLabel::Excluded => {}
        }
    }
    if patients.is_empty() || controls == 0 {
        return Err(Error::DegenerateData(format!(
            "{} patients and {controls} controls among {n_individuals} individuals",
            patients.len()
        )));
    }
    let mean = control_sum / controls as f64;
    Ok(patients.iter().filter(|&&x| x > mean).count() as f64 / patients.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_case1, build_case2, StrategyKind};

    #[test]
    fn estimate_invariants() {
        for (k, n) in [
            (0, 100),
            (3, 100),
            (50, 100),
            (97, 100),
            (100, 100),
            (4_321, 10_000),
        ] {
            let e = PowerEstimate::from_counts(k, n);
            assert_eq!(e.p_hat, k as f64 / n as f64);
            assert!((e.std_error - (e.p_hat * (1.0 - e.p_hat) / n as f64).sqrt()).abs() < 1e-15);
            assert!(
                0.0 <= e.ci95.0 && e.ci95.0 <= e.p_hat && e.p_hat <= e.ci95.1 && e.ci95.1 <= 1.0
            );
        }
        // Wilson interval stays informative at zero rejections.
        let e = PowerEstimate::from_counts(0, 1000);
        assert!(e.ci95.1 > 0.003 && e.ci95.1 < 0.004);
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let s = build_case2(2, 1.0, 1.0, 40, StrategyKind::Category).unwrap();
        let a = estimate_power_mc(&s, 700, 11).unwrap();
        let b = estimate_power_mc(&s, 700, 11).unwrap();
        assert_eq!(a, b);
        let opts = McOptions {
            workers: Some(3),
            ..McOptions::default()
        };
        assert_eq!(a, estimate_power_mc_with(&s, 700, 11, &opts).unwrap());
        assert_ne!(a, estimate_power_mc(&s, 700, 12).unwrap());
    }

    #[test]
    fn exhausted_budget_reports_progress() {
        let s = build_case1(100, 0.0, 1.0, 1.0, StrategyKind::Dimensional).unwrap();
        let opts = McOptions {
            time_budget: Some(Duration::ZERO),
            ..McOptions::default()
        };
        std::thread::sleep(Duration::from_millis(1));
        let err = estimate_power_mc_with(&s, 5000, 1, &opts).unwrap_err();
        assert!(matches!(
            err,
            Error::PartialResult {
                requested: 5000,
                ..
            }
        ));
    }

    #[test]
    fn fraction_exceeded_null_and_degenerate() {
        let s = build_case2(1, 1.0, 1.0, 100, StrategyKind::Category).unwrap();
        let f = fraction_exceeded_mc_for(&s, 1, 100_000, 3).unwrap();
        assert!((f - 0.5).abs() < 0.005, "{f}");
        assert!(fraction_exceeded_mc_for(&s, 2, 10, 3).is_err());
        let s = build_case1(100, 0.0, 1.0, 1.0, StrategyKind::Category).unwrap();
        assert!(matches!(
            estimate_fraction_exceeded_mc(&s, 1, 0),
            Err(Error::DegenerateData(_))
        ));
        assert_eq!(
            estimate_fraction_exceeded_mc(&s, 5000, 9).unwrap(),
            estimate_fraction_exceeded_mc(&s, 5000, 9).unwrap()
        );
    }
}
