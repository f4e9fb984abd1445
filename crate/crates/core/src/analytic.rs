//! Closed-form power analysis.
//!
//! For a factor `x` and a unit-variance measure `y` that are jointly normal
//! with correlation `rho_xy`, selecting on `y` shifts `x` by `rho_xy` times
//! the truncated-normal moments of `y`. The measured factor `x_hat = x + delta`
//! inherits the shift and adds `sigma_delta^2` to the variance.

use crate::distrib::{
    noncentral_t_cdf, normal_cdf, normal_hazard, normal_pdf, normal_sf, student_t_quantile,
};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadratureSettings};
use crate::scenarios::{Scenario, StrategyKind, Target};

/// Hazard of the standard normal, `phi(a) / (1 - Phi(a))`.
pub fn mills_lambda(a: f64) -> f64 {
    normal_hazard(a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationCorrelations {
    /// Between the true factor and the measure.
    pub rho_xy: f64,
    /// Between the measured factor and the measure.
    pub rho_xhat_y: f64,
}

/// Correlations of factor `j` (0-based) with a measure whose normalized
/// weights are `weights_row`.
pub fn population_correlations(
    weights_row: &[f64],
    sigma_delta: f64,
    j: usize,
) -> Result<PopulationCorrelations> {
    let w = *weights_row.get(j).ok_or_else(|| {
        Error::domain(
            "population_correlations",
            format!(
                "factor index {} out of range for {} factors",
                j + 1,
                weights_row.len()
            ),
        )
    })?;
    if !(sigma_delta >= 0.0) || !sigma_delta.is_finite() {
        return Err(Error::domain(
            "population_correlations",
            format!("sigma_delta = {sigma_delta}"),
        ));
    }
    Ok(PopulationCorrelations {
        rho_xy: w,
        rho_xhat_y: w / (1.0 + sigma_delta * sigma_delta).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments {
    pub mean_patient: f64,
    pub var_patient: f64,
    pub mean_control: f64,
    pub var_control: f64,
}

/// Moments of the measured factor in the patient group `y >= h` and the
/// control group `y < h - d`.
pub fn conditional_moments(
    rho_xhat_y: f64,
    h: f64,
    d: f64,
    sigma_delta: f64,
) -> Result<ConditionalMoments> {
    const F: &str = "conditional_moments";
    if !(rho_xhat_y.abs() < 1.0) {
        return Err(Error::domain(
            F,
            format!("|rho| = {} must be below 1", rho_xhat_y.abs()),
        ));
    }
    if !h.is_finite() || !(d >= 0.0) || !d.is_finite() {
        return Err(Error::domain(
            F,
            format!("need finite h and d >= 0 (h = {h}, d = {d})"),
        ));
    }
    if !(sigma_delta >= 0.0) || !sigma_delta.is_finite() {
        return Err(Error::domain(F, format!("sigma_delta = {sigma_delta}")));
    }
    let s2 = 1.0 + sigma_delta * sigma_delta;
    let rho = rho_xhat_y * s2.sqrt();
    if rho.abs() > 1.0 {
        return Err(Error::domain(
            F,
            format!(
                "rho_xhat_y = {rho_xhat_y} implies |rho_xy| > 1 at sigma_delta = {sigma_delta}"
            ),
        ));
    }
    let (a1, a2) = (h, d - h);
    let (l1, l2) = (mills_lambda(a1), mills_lambda(a2));
    let r2 = rho * rho;
    let moments = ConditionalMoments {
        mean_patient: rho * l1,
        var_patient: s2 - r2 * l1 * (l1 - a1),
        mean_control: -rho * l2,
        var_control: s2 - r2 * l2 * (l2 - a2),
    };
    if !(moments.var_patient > 0.0 && moments.var_control > 0.0) {
        return Err(Error::domain(F, "conditional variance is not positive"));
    }
    Ok(moments)
}

/// Standardized mean difference with the two conditional variances averaged.
pub fn category_effect_size(m: &ConditionalMoments) -> Result<f64> {
    let pooled = 0.5 * (m.var_patient + m.var_control);
    if !(pooled > 0.0) {
        return Err(Error::domain(
            "category_effect_size",
            format!("pooled variance {pooled}"),
        ));
    }
    Ok((m.mean_patient - m.mean_control) / pooled.sqrt())
}

fn check_alpha(function: &'static str, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(
            function,
            format!("alpha = {alpha} outside (0, 1)"),
        ));
    }
    Ok(())
}

/// Power of the two-sided pooled t-test when the true standardized
/// difference is `d_eff`.
pub fn category_power(d_eff: f64, n1: usize, n2: usize, alpha: f64) -> Result<f64> {
    const F: &str = "category_power";
    check_alpha(F, alpha)?;
    if n1 < 2 || n2 < 2 {
        return Err(Error::domain(
            F,
            format!("group sizes {n1} and {n2} must both be >= 2"),
        ));
    }
    if !d_eff.is_finite() {
        return Err(Error::domain(F, format!("d_eff = {d_eff}")));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let df = a + b - 2.0;
    let t_crit = student_t_quantile(1.0 - 0.5 * alpha, df)?;
    let ncp = d_eff * (a * b / (a + b)).sqrt();
    let lower = noncentral_t_cdf(-t_crit, df, ncp)?;
    let upper = 1.0 - noncentral_t_cdf(t_crit, df, ncp)?;
    Ok((lower + upper).clamp(0.0, 1.0))
}

/// Approximate power of the two-sided correlation test via Fisher's z with
/// the small-sample bias correction.
pub fn correlation_power(rho: f64, n: usize, alpha: f64) -> Result<f64> {
    const F: &str = "correlation_power";
    check_alpha(F, alpha)?;
    if n < 4 {
        return Err(Error::domain(F, format!("n = {n} must be >= 4")));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(
            F,
            format!("|rho| = {} must be below 1", rho.abs()),
        ));
    }
    let nf = n as f64;
    let t_crit = student_t_quantile(1.0 - 0.5 * alpha, nf - 2.0)?;
    let r_crit = (t_crit * t_crit / (t_crit * t_crit + nf - 2.0)).sqrt();
    let z_r = rho.atanh() + rho / (2.0 * (nf - 1.0));
    let z_c = r_crit.atanh();
    let scale = (nf - 3.0).sqrt();
    Ok(normal_cdf((z_r - z_c) * scale) + normal_cdf((-z_r - z_c) * scale))
}

/// Probability that a patient's true factor exceeds the population mean of
/// the control group.
pub fn fraction_exceeded(rho_xy: f64, h: f64, d: f64) -> Result<f64> {
    const F: &str = "fraction_exceeded";
    if !(rho_xy.abs() < 1.0) {
        return Err(Error::domain(
            F,
            format!("|rho| = {} must be below 1", rho_xy.abs()),
        ));
    }
    if !h.is_finite() || !(d >= 0.0) || !d.is_finite() {
        return Err(Error::domain(
            F,
            format!("need finite h and d >= 0 (h = {h}, d = {d})"),
        ));
    }
    if rho_xy == 0.0 {
        return Ok(0.5);
    }
    let m = -rho_xy * mills_lambda(d - h);
    let s = (1.0 - rho_xy * rho_xy).sqrt();
    let integrand = |y: f64| normal_pdf(y) * normal_sf((m - rho_xy * y) / s);
    // The conditional exceedance jumps near y = m / rho when rho is close to 1.
    let upper = h.max(0.0) + 12.0;
    let breaks = [m / rho_xy, h + 1.0, h + 3.0];
    let settings = QuadratureSettings {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_segments: 5_000,
    };
    let mass = integrate_with_breaks(integrand, h, upper, &breaks, settings)?;
    Ok((mass / normal_sf(h)).clamp(0.0, 1.0))
}

/// Closed-form power and effect size for one target of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetAnalysis {
    pub power: f64,
    /// Cohen's d for group comparisons, the population correlation otherwise.
    pub effect_size: f64,
}

/// Analytic power of a scenario target, or `None` when the diagnosis uses
/// more than one criterion (no closed form).
pub fn analyze_target(scenario: &Scenario, target: Target) -> Result<Option<TargetAnalysis>> {
    let model = &scenario.model;
    let sd = model.measurement_sd();
    match (scenario.strategy, target.measure) {
        (StrategyKind::Dimensional, Some(i)) => {
            let pc = population_correlations(model.weights().row(i), sd, target.factor)?;
            Ok(Some(TargetAnalysis {
                power: correlation_power(pc.rho_xhat_y, scenario.n, scenario.alpha)?,
                effect_size: pc.rho_xhat_y,
            }))
        }
        (StrategyKind::Category, None) => {
            let Some((i, h)) = scenario.single_criterion() else {
                return Ok(None);
            };
            let (n1, n2) = scenario
                .groups
                .expect("category scenarios carry group sizes");
            let pc = population_correlations(model.weights().row(i), sd, target.factor)?;
            let margin = scenario.rule.as_ref().map_or(0.0, |r| r.margin());
            let d_eff = category_effect_size(&conditional_moments(pc.rho_xhat_y, h, margin, sd)?)?;
            Ok(Some(TargetAnalysis {
                power: category_power(d_eff, n1, n2, scenario.alpha)?,
                effect_size: d_eff,
            }))
        }
        _ => Err(Error::Configuration(format!(
            "target {target:?} does not match the {} strategy",
            scenario.strategy
        ))),
    }
}

/// Fraction exceeded for factor `j` of a single-criterion category scenario.
pub fn scenario_fraction_exceeded(scenario: &Scenario, j: usize) -> Result<Option<f64>> {
    let Some((i, h)) = scenario.single_criterion() else {
        return Ok(None);
    };
    let pc = population_correlations(scenario.model.weights().row(i), 0.0, j)?;
    let margin = scenario.rule.as_ref().map_or(0.0, |r| r.margin());
    fraction_exceeded(pc.rho_xy, h, margin).map(Some)
}
