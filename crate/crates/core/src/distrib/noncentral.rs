//! Noncentral t distribution function.
//!
//! The primary route is the Poisson-mixture series of incomplete beta
//! functions (Lenth 1989; Benton & Krishnamoorthy 2003), summed outward from
//! the mode of the Poisson weights so large noncentralities do not underflow.
//! When the series hits its iteration cap the chi-mixture integral
//! `F(t) = E[Phi(t S - ncp)]`, `S = sqrt(chi2_df / df)`, is evaluated by
//! adaptive quadrature instead.

use super::normal::normal_cdf;
use super::special::{beta_inc_pair, ln_beta, ln_gamma};
use super::student::student_t_cdf;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadratureSettings};

pub const SERIES_MAX_ITER: usize = 10_000;
const SERIES_TOL: f64 = 1e-14;

pub fn noncentral_t_cdf(t: f64, df: f64, ncp: f64) -> Result<f64> {
    if !(df >= 1.0) || !df.is_finite() {
        return Err(Error::domain(
            "noncentral_t_cdf",
            format!("degrees of freedom {df} must be >= 1"),
        ));
    }
    if !t.is_finite() || !ncp.is_finite() {
        return Err(Error::domain(
            "noncentral_t_cdf",
            format!("t = {t} and ncp = {ncp} must be finite"),
        ));
    }
    if ncp == 0.0 {
        return student_t_cdf(t, df);
    }
    match series(t, df, ncp) {
        Ok(v) => Ok(v),
        Err(Error::Computation { .. }) => quadrature(t, df, ncp),
        Err(e) => Err(e),
    }
}

fn series(t: f64, df: f64, ncp: f64) -> Result<f64> {
    if t < 0.0 {
        return Ok(1.0 - series_nonnegative(-t, df, -ncp)?);
    }
    series_nonnegative(t, df, ncp)
}

fn series_nonnegative(t: f64, df: f64, ncp: f64) -> Result<f64> {
    let base = normal_cdf(-ncp);
    if t == 0.0 {
        return Ok(base);
    }
    let t2 = t * t;
    let x = t2 / (t2 + df);
    let y = df / (t2 + df);
    let b = 0.5 * df;
    let lambda = 0.5 * ncp * ncp;
    let k = lambda.floor();
    // k ln(lambda) is taken as 0 at lambda = 0, where only the first term survives.
    let k_ln_lambda = if k > 0.0 { k * lambda.ln() } else { 0.0 };

    // Poisson-type weights at the mode.
    let p_mode = (-lambda + k_ln_lambda - ln_gamma(k + 1.0)).exp();
    let q_mode = (-lambda + k_ln_lambda - ln_gamma(k + 1.5)).exp();
    let q_scale = ncp / std::f64::consts::SQRT_2;

    let a_p = k + 0.5;
    let a_q = k + 1.0;
    let beta_p = beta_inc_pair(a_p, b, x, y)?;
    let beta_q = beta_inc_pair(a_q, b, x, y)?;
    // h(a) = x^a (1-x)^b / (a B(a, b)); I_x(a + 1, b) = I_x(a, b) - h(a).
    let ln_x = x.ln();
    let ln_y = y.ln();
    let h = |a: f64| (a * ln_x + b * ln_y - a.ln() - ln_beta(a, b)).exp();

    let mut sum = p_mode * beta_p + q_scale * q_mode * beta_q;
    let mut p_mass = p_mode;

    // Forward from the mode.
    let (mut pf, mut qf, mut bpf, mut bqf) = (p_mode, q_mode, beta_p, beta_q);
    let mut i = k;
    let mut converged = false;
    for _ in 0..SERIES_MAX_ITER {
        bpf -= h(i + 0.5);
        bqf -= h(i + 1.0);
        pf *= lambda / (i + 1.0);
        qf *= lambda / (i + 1.5);
        i += 1.0;
        let term = pf * bpf.max(0.0) + q_scale * qf * bqf.max(0.0);
        sum += term;
        p_mass += pf;
        let remaining = (1.0 - p_mass).max(0.0);
        if 2.0 * remaining * bpf.max(0.0) <= SERIES_TOL && term.abs() <= SERIES_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Computation {
            routine: "noncentral_t_cdf",
            message: format!("series did not converge for t = {t}, df = {df}, ncp = {ncp}"),
            iterations: SERIES_MAX_ITER,
            estimate: base + 0.5 * sum,
        });
    }

    // Backward from the mode down to zero: I_x(a - 1, b) = I_x(a, b) + h(a - 1).
    let (mut pb, mut qb, mut bpb, mut bqb) = (p_mode, q_mode, beta_p, beta_q);
    let mut j = k;
    while j >= 1.0 {
        bpb += h(j - 0.5);
        bqb += h(j);
        pb *= j / lambda;
        qb *= (j + 0.5) / lambda;
        j -= 1.0;
        let term = pb * bpb + q_scale * qb * bqb;
        sum += term;
        if term.abs() <= 1e-18 && pb <= 1e-18 {
            break;
        }
    }

    Ok((base + 0.5 * sum).clamp(0.0, 1.0))
}

/// Chi-mixture representation integrated numerically.
pub(crate) fn quadrature(t: f64, df: f64, ncp: f64) -> Result<f64> {
    let half = 0.5 * df;
    let ln_norm = std::f64::consts::LN_2 + half * half.ln() - ln_gamma(half);
    let density = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_norm + (df - 1.0) * s.ln() - half * s * s).exp()
    };
    let mode = ((df - 1.0) / df).sqrt();
    let sd = (0.5 / df).sqrt();
    let upper = mode + 40.0 * sd;
    let breaks: Vec<f64> = [-10.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 10.0]
        .iter()
        .map(|k| mode + k * sd)
        .collect();
    let settings = QuadratureSettings {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_segments: 5_000,
    };
    let v = integrate_with_breaks(
        |s| normal_cdf(t * s - ncp) * density(s),
        0.0,
        upper,
        &breaks,
        settings,
    )?;
    Ok(v.clamp(0.0, 1.0))
}
