//! Built-in oracle and calibration suite behind `strategem validate`.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Deserialize;

use crate::analytic::{
    analyze_target, category_effect_size, category_power, conditional_moments, correlation_power,
    fraction_exceeded, mills_lambda,
};
use crate::distrib::{
    noncentral_t_cdf, normal_cdf, normal_quantile, student_t_cdf, student_t_quantile,
};
use crate::error::{Error, Result};
use crate::hyptest::{pearson_r_test, t_test_equal_var};
use crate::mcengine::{estimate_power_mc, estimate_power_mc_with, McOptions};
use crate::scenarios::{build_case1, build_case2, Scenario, StrategyKind};

pub const EMBEDDED_GOLDENS: &str = include_str!("../data/goldens.toml");

const SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Golden {
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub rejected: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Goldens(BTreeMap<String, Golden>);

impl Goldens {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map(Goldens)
            .map_err(|e| Error::Parse(format!("golden file: {e}")))
    }

    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_GOLDENS).expect("embedded golden file is well formed")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

type Observation = Result<Observed>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Observation + 'a>);

enum Observed {
    /// Compared with `expected` (or the analytic value when given) within `tolerance`.
    Value { value: f64, reference: Option<f64> },
    /// Compared exactly with `rejected`.
    Count(u64),
    /// Deviation that must not exceed `tolerance`.
    Deviation(f64),
}

fn judge(name: &str, golden: Option<&Golden>, observation: Observation) -> CheckOutcome {
    let fail = |detail: String| CheckOutcome {
        name: name.to_string(),
        passed: false,
        detail,
    };
    let Some(g) = golden else {
        return fail("no golden entry".into());
    };
    let observed = match observation {
        Ok(o) => o,
        Err(e) => return fail(format!("error: {e}")),
    };
    let (passed, detail) = match observed {
        Observed::Value { value, reference } => {
            let Some(reference) = g.expected.or(reference) else {
                return fail("golden entry lacks `expected`".into());
            };
            let Some(tol) = g.tolerance else {
                return fail("golden entry lacks `tolerance`".into());
            };
            let dev = (value - reference).abs();
            (dev <= tol, format!("observed {value:.10e}, reference {reference:.10e}, |diff| {dev:.2e} (tol {tol:e})"))
        }
        Observed::Count(k) => match g.rejected {
            Some(want) => (k == want, format!("rejected {k}, golden {want}")),
            None => return fail("golden entry lacks `rejected`".into()),
        },
        Observed::Deviation(dev) => match g.tolerance {
            Some(tol) => (dev <= tol, format!("deviation {dev:e} (tol {tol:e})")),
            None => return fail("golden entry lacks `tolerance`".into()),
        },
    };
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn value(v: Result<f64>) -> Observation {
    v.map(|value| Observed::Value {
        value,
        reference: None,
    })
}

fn mc_vs_analytic(scenario: Result<Scenario>, reps: u64) -> Observation {
    let s = scenario?;
    let target = s.targets[0];
    let analytic = analyze_target(&s, target)?
        .ok_or_else(|| Error::Configuration("no analytic power for this scenario".into()))?
        .power;
    let mc = estimate_power_mc(&s, reps, SEED)?[&target].p_hat;
    Ok(Observed::Value {
        value: mc,
        reference: Some(analytic),
    })
}

/// Runs every check; `quick` trims replication counts to stay under a minute.
pub fn run_validation(quick: bool, goldens: &Goldens) -> Vec<CheckOutcome> {
    use StrategyKind::*;
    let scale = |full: u64, fast: u64| if quick { fast } else { full };
    let mut checks: Vec<Check<'_>> = vec![
        ("normal_cdf_0_5", Box::new(|| value(Ok(normal_cdf(0.5))))),
        (
            "normal_cdf_minus_5",
            Box::new(|| value(Ok(normal_cdf(-5.0)))),
        ),
        (
            "normal_quantile_0_995",
            Box::new(|| value(normal_quantile(0.995))),
        ),
        ("t_cdf_1_5_df7", Box::new(|| value(student_t_cdf(1.5, 7.0)))),
        (
            "t_quantile_0_995_df98",
            Box::new(|| value(student_t_quantile(0.995, 98.0))),
        ),
        (
            "noncentral_t_cdf_2_df10_ncp1_5",
            Box::new(|| value(noncentral_t_cdf(2.0, 10.0, 1.5))),
        ),
        (
            "noncentral_t_cdf_minus1_df4_ncp0_7",
            Box::new(|| value(noncentral_t_cdf(-1.0, 4.0, 0.7))),
        ),
        (
            "noncentral_t_cdf_2_626_df98_ncp3",
            Box::new(|| value(noncentral_t_cdf(2.626, 98.0, 3.0))),
        ),
        (
            "mills_lambda_0_5",
            Box::new(|| value(Ok(mills_lambda(0.5)))),
        ),
        (
            "effect_size_case1",
            Box::new(|| {
                value(
                    conditional_moments(0.5, 0.5, 0.0, 1.0).and_then(|m| category_effect_size(&m)),
                )
            }),
        ),
        (
            "category_power_case1_n100",
            Box::new(|| {
                value(
                    conditional_moments(0.5, 0.5, 0.0, 1.0)
                        .and_then(|m| category_effect_size(&m))
                        .and_then(|d| category_power(d, 50, 50, 0.01)),
                )
            }),
        ),
        (
            "correlation_power_rho0_5_n100",
            Box::new(|| value(correlation_power(0.5, 100, 0.01))),
        ),
        (
            "fraction_exceeded_case4_n50",
            Box::new(|| value(fraction_exceeded(1.0 / 51f64.sqrt(), 0.5, 0.0))),
        ),
        (
            "t_test_statistic",
            Box::new(|| {
                value(t_test_equal_var(&[1.0, 2.0, 3.0], &[3.0, 4.0, 5.0]).map(|r| r.statistic))
            }),
        ),
        (
            "pearson_r_statistic",
            Box::new(|| {
                value(
                    pearson_r_test(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0])
                        .map(|r| r.statistic),
                )
            }),
        ),
    ];
    checks.push((
        "mc_case1_dimensional_n100",
        Box::new(move || {
            mc_vs_analytic(
                build_case1(100, 0.0, 1.0, 1.0, Dimensional),
                scale(10_000, 4_000),
            )
        }),
    ));
    checks.push((
        "mc_case1_category_n100",
        Box::new(move || {
            mc_vs_analytic(
                build_case1(100, 0.0, 1.0, 1.0, Category),
                scale(10_000, 4_000),
            )
        }),
    ));
    checks.push((
        "mc_case1_category_d1_n40",
        Box::new(move || {
            mc_vs_analytic(
                build_case1(40, 1.0, 1.0, 1.0, Category),
                scale(10_000, 2_000),
            )
        }),
    ));
    checks.push((
        "null_calibration_case2_m3",
        Box::new(move || {
            let s = build_case2(3, 1.0, 1.0, 100, Category)?;
            let est = estimate_power_mc(&s, scale(100_000, 20_000), SEED)?;
            value(Ok(est[&s.targets[1]].p_hat))
        }),
    ));
    checks.push((
        "mc_pinned_case1_category_n40_seed1",
        Box::new(|| {
            let s = build_case1(40, 0.0, 1.0, 1.0, Category)?;
            Ok(Observed::Count(
                estimate_power_mc(&s, 500, SEED)?[&s.targets[0]].rejected_count,
            ))
        }),
    ));
    checks.push((
        "mc_workers_equivalence",
        Box::new(|| {
            let s = build_case2(2, 1.0, 1.0, 60, Category)?;
            let one = McOptions {
                workers: Some(1),
                ..McOptions::default()
            };
            let four = McOptions {
                workers: Some(4),
                ..McOptions::default()
            };
            let a = estimate_power_mc_with(&s, 1_500, SEED, &one)?;
            let b = estimate_power_mc_with(&s, 1_500, SEED, &four)?;
            let worst = a
                .iter()
                .map(|(t, e)| (e.rejected_count as f64 - b[t].rejected_count as f64).abs())
                .fold(0.0, f64::max);
            Ok(Observed::Deviation(worst))
        }),
    ));

    let mut out: Vec<CheckOutcome> = checks
        .iter()
        .map(|(name, check)| {
            let started = Instant::now();
            let mut outcome = judge(name, goldens.0.get(*name), check());
            outcome
                .detail
                .push_str(&format!(" [{:.2}s]", started.elapsed().as_secs_f64()));
            outcome
        })
        .collect();
    for name in goldens.0.keys() {
        if !checks.iter().any(|(n, _)| n == name) {
            out.push(CheckOutcome {
                name: name.clone(),
                passed: false,
                detail: "golden entry names no known check".into(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_goldens_parse() {
        let g = Goldens::embedded();
        assert!(g.0.len() >= 20);
        assert!(Goldens::parse("[x]\nexpected = 1\nbogus = 2\n").is_err());
    }

    #[test]
    fn judge_rules() {
        let g = Golden {
            expected: Some(1.0),
            tolerance: Some(0.1),
            rejected: None,
        };
        assert!(judge("a", Some(&g), value(Ok(1.05))).passed);
        assert!(!judge("a", Some(&g), value(Ok(1.2))).passed);
        assert!(!judge("a", None, value(Ok(1.0))).passed);
        assert!(!judge("a", Some(&g), Err(Error::Parse("x".into()))).passed);
        assert!(!judge("a", Some(&g), Ok(Observed::Count(3))).passed);
    }
}
