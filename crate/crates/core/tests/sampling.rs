//! Moments of sampled cohorts and the diagnostic partition they induce.

use strategem::distrib::{normal_cdf, normal_pdf, RandomStream};
use strategem::genmodel::sample_cohort;
use strategem::quadrature::{integrate, QuadratureSettings};
use strategem::scenarios::{
    build_case1, build_case2, build_case3, build_case4, build_comorbidity, Criteria, Scenario,
    StrategyKind,
};
use strategem::strategy::{classify, draw_cross_section, GroupLabel};

const N: usize = 100_000;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cov(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (a.len() - 1) as f64
}

fn presets() -> Vec<Scenario> {
    use StrategyKind::Category;
    let (a, b) = build_comorbidity([1.0, 0.5, 2.0, 0.7], 1.0, 1.0, 100).unwrap();
    vec![
        build_case1(100, 0.0, 1.0, 1.0, Category).unwrap(),
        build_case2(3, 0.5, 1.0, 100, Category).unwrap(),
        build_case3(0.6, 1.0, 0.5, 100, Criteria::Both, Category).unwrap(),
        build_case4(6, 0.8, 1.0, 1.0, 100, 0.01, Category).unwrap(),
        a,
        b,
    ]
}

#[test]
fn preset_cohorts_have_standardized_measures_and_expected_covariances() {
    for (k, s) in presets().iter().enumerate() {
        let model = &s.model;
        assert!(model.is_normalized());
        let c = sample_cohort(model, N, &mut RandomStream::new(8, k as u64)).unwrap();
        for i in 0..model.n_measures() {
            let y = c.y.column(i);
            assert!(
                mean(&y).abs() < 0.013,
                "{} y{}: mean {}",
                s.label,
                i + 1,
                mean(&y)
            );
            assert!(
                (cov(&y, &y) - 1.0).abs() < 0.018,
                "{} y{}: var {}",
                s.label,
                i + 1,
                cov(&y, &y)
            );
            for j in 0..model.n_factors() {
                let got = cov(&c.x_hat.column(j), &y);
                let want = model.weights().get(i, j);
                assert!(
                    (got - want).abs() < 0.02,
                    "{} cov(x{}, y{}) {got} vs {want}",
                    s.label,
                    j + 1,
                    i + 1
                );
            }
        }
        let sd = model.measurement_sd();
        for j in 0..model.n_factors() {
            let err: Vec<f64> = c
                .x_hat
                .column(j)
                .iter()
                .zip(c.x.column(j))
                .map(|(a, b)| a - b)
                .collect();
            let got = cov(&err, &err).sqrt();
            assert!(
                (got - sd).abs() <= 0.02 * sd,
                "{}: sd(x_hat - x) {got} vs {sd}",
                s.label
            );
        }
    }
}

#[test]
fn zero_measurement_error_reproduces_factors() {
    let s = build_case2(2, 1.0, 0.0, 100, StrategyKind::Category).unwrap();
    let c = sample_cohort(&s.model, 500, &mut RandomStream::new(1, 1)).unwrap();
    assert_eq!(c.x, c.x_hat);
}

/// P(all M measures >= h) when each measure is `w x + s e` with independent noise.
fn orthant(m: usize, w: f64, s: f64, h: f64) -> f64 {
    let settings = QuadratureSettings {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_segments: 2_000,
    };
    integrate(
        |x| normal_pdf(x) * (1.0 - normal_cdf((h - w * x) / s)).powi(m as i32),
        -12.0,
        12.0,
        settings,
    )
    .unwrap()
}

#[test]
fn patient_fraction_matches_orthant_probability() {
    for (m, sigma_eps) in [(1, 1.0), (2, 1.0), (3, 1.0), (3, 0.5), (5, 2.0)] {
        let s = build_case2(m, sigma_eps, 1.0, 100, StrategyKind::Category).unwrap();
        let rule = s.rule.as_ref().unwrap();
        let c = draw_cross_section(&s.model, N, &mut RandomStream::new(12, m as u64)).unwrap();
        let mut labels = [0usize; 3];
        for r in 0..c.len() {
            labels[match classify(c.y.row(r), rule).unwrap() {
                GroupLabel::Patient => 0,
                GroupLabel::Control => 1,
                GroupLabel::Excluded => 2,
            }] += 1;
        }
        assert_eq!(labels[2], 0, "no exclusions without a margin");
        let a = (1.0f64 + sigma_eps * sigma_eps).sqrt();
        let want = orthant(m, 1.0 / a, sigma_eps / a, 0.5);
        if m == 1 {
            assert!((want - 0.308_537_538_725_986_9).abs() < 1e-10);
        }
        let got = labels[0] as f64 / N as f64;
        let se = (want * (1.0 - want) / N as f64).sqrt();
        assert!(
            (got - want).abs() < 3.0 * se,
            "M={m} sigma_eps={sigma_eps}: {got} vs {want}"
        );
    }
}

#[test]
fn margin_excludes_the_band_below_threshold() {
    let s = build_case1(100, 0.5, 1.0, 1.0, StrategyKind::Category).unwrap();
    let rule = s.rule.as_ref().unwrap();
    let c = draw_cross_section(&s.model, N, &mut RandomStream::new(13, 0)).unwrap();
    let excluded = (0..c.len())
        .filter(|&r| classify(c.y.row(r), rule).unwrap() == GroupLabel::Excluded)
        .count() as f64
        / N as f64;
    let want = normal_cdf(0.5) - normal_cdf(0.0);
    assert!(
        (excluded - want).abs() < 3.0 * (want * (1.0 - want) / N as f64).sqrt(),
        "{excluded} vs {want}"
    );
}
