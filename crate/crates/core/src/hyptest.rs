//! Two-sided frequentist tests: pooled-variance two-sample t-test and the
//! Pearson correlation t-test.

use serde::Serialize;

use crate::distrib::student_t_sf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Cohen's d for group comparisons, sample r for correlation tests.
    pub effect_size: f64,
    /// Set when |r| = 1; the statistic is infinite and p is reported as 0.
    pub collinear: bool,
}

fn two_sided_p(t: f64, df: f64) -> Result<f64> {
    Ok((2.0 * student_t_sf(t.abs(), df)?).min(1.0))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sum_sq_dev(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

struct Pooled {
    diff: f64,
    sd: f64,
    se: f64,
    df: f64,
}

fn pooled(a: &[f64], b: &[f64]) -> Result<Pooled> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "each sample needs at least two values (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let df = n1 + n2 - 2.0;
    let var = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df;
    if !(var > 0.0) {
        return Err(Error::DegenerateData("pooled variance is zero".into()));
    }
    let sd = var.sqrt();
    Ok(Pooled {
        diff: ma - mb,
        sd,
        se: sd * (1.0 / n1 + 1.0 / n2).sqrt(),
        df,
    })
}

/// Unpaired two-sample t-test with a pooled variance estimate.
pub fn t_test_equal_var(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let p = pooled(a, b)?;
    let t = p.diff / p.se;
    Ok(TestResult {
        statistic: t,
        df: p.df,
        p_value: two_sided_p(t, p.df)?,
        effect_size: p.diff / p.sd,
        collinear: false,
    })
}

/// Standardized mean difference `(mean(a) - mean(b)) / pooled_sd`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    let p = pooled(a, b)?;
    Ok(p.diff / p.sd)
}

/// Test of zero correlation: `t = r sqrt(n - 2) / sqrt(1 - r^2)` on `n - 2` df.
pub fn pearson_r_test(u: &[f64], v: &[f64]) -> Result<TestResult> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let n = u.len();
    if n < 3 {
        return Err(Error::DegenerateData(format!(
            "correlation test needs n >= 3 (got {n})"
        )));
    }
    let (mu, mv) = (mean(u), mean(v));
    let (mut suu, mut svv, mut suv) = (0.0, 0.0, 0.0);
    for (x, y) in u.iter().zip(v) {
        let (dx, dy) = (x - mu, y - mv);
        suu += dx * dx;
        svv += dy * dy;
        suv += dx * dy;
    }
    if !(suu > 0.0 && svv > 0.0) {
        return Err(Error::DegenerateData(
            "correlation of a constant sample".into(),
        ));
    }
    let r = (suv / (suu * svv).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    if one_minus <= 4.0 * f64::EPSILON {
        return Ok(TestResult {
            statistic: r.signum() * f64::INFINITY,
            df,
            p_value: 0.0,
            effect_size: r.signum(),
            collinear: true,
        });
    }
    let t = r * df.sqrt() / one_minus.sqrt();
    Ok(TestResult {
        statistic: t,
        df,
        p_value: two_sided_p(t, df)?,
        effect_size: r,
        collinear: false,
    })
}
