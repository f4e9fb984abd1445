//! Central Student t distribution.

use super::normal::normal_quantile;
use super::special::{beta_inc_pair, ln_beta};
use crate::error::{Error, Result};

fn check_df(function: &'static str, df: f64) -> Result<()> {
    if !(df >= 1.0) || df.is_infinite() {
        return Err(Error::domain(
            function,
            format!("degrees of freedom {df} must be >= 1"),
        ));
    }
    Ok(())
}

/// `P(T > |t|)` for `t` of either sign, i.e. half of `I_{df/(df+t^2)}(df/2, 1/2)`.
fn abs_tail(t: f64, df: f64) -> Result<f64> {
    let t2 = t * t;
    let denom = df + t2;
    Ok(0.5 * beta_inc_pair(0.5 * df, 0.5, df / denom, t2 / denom)?)
}

pub fn student_t_cdf(t: f64, df: f64) -> Result<f64> {
    check_df("student_t_cdf", df)?;
    if t.is_nan() {
        return Err(Error::domain("student_t_cdf", "t is NaN"));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = abs_tail(t, df)?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Upper tail `P(T > t)`.
pub fn student_t_sf(t: f64, df: f64) -> Result<f64> {
    check_df("student_t_sf", df)?;
    if t.is_infinite() {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    let tail = abs_tail(t, df)?;
    Ok(if t > 0.0 { tail } else { 1.0 - tail })
}

pub fn student_t_pdf(t: f64, df: f64) -> f64 {
    let ln = -0.5 * df.ln() - ln_beta(0.5 * df, 0.5) - 0.5 * (df + 1.0) * (t * t / df).ln_1p();
    ln.exp()
}

/// Quantile of the central t distribution, refined until the cdf matches `p`
/// to about 1e-12 relative in the tail probability.
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df("student_t_quantile", df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "student_t_quantile",
            format!("p = {p} outside (0, 1)"),
        ));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (tail, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    Ok(sign * upper_tail_inverse(tail, df)?)
}

/// Solves `P(T > t) = q` for `t > 0` with `q < 0.5`.
fn upper_tail_inverse(q: f64, df: f64) -> Result<f64> {
    // Cornish-Fisher start from the normal quantile.
    let z = -normal_quantile(q)?;
    let z3 = z * z * z;
    let z5 = z3 * z * z;
    let mut t = z + (z3 + z) / (4.0 * df) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df);
    if !t.is_finite() || t <= 0.0 {
        t = z.max(1e-3);
    }

    // Bracket, then safeguarded Newton on ln P(T > t).
    let mut lo = 0.0;
    let mut hi = t;
    while student_t_sf(hi, df)? > q {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Computation {
                routine: "student_t_quantile",
                message: format!("failed to bracket tail probability {q:e} at df = {df}"),
                iterations: 0,
                estimate: lo,
            });
        }
    }
    let ln_q = q.ln();
    const MAX_ITER: usize = 200;
    for _ in 0..MAX_ITER {
        let sf = student_t_sf(t, df)?;
        if sf > q {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let g = sf.ln() - ln_q;
        let slope = -student_t_pdf(t, df) / sf;
        let mut next = t - g / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-14 * t.abs().max(1.0) || hi - lo <= 1e-14 * hi {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::Computation {
        routine: "student_t_quantile",
        message: format!("no convergence for tail probability {q:e} at df = {df}"),
        iterations: MAX_ITER,
        estimate: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distrib::normal_cdf;

    #[test]
    fn cdf_at_zero_is_half() {
        for df in [1.0, 2.5, 30.0, 1e6] {
            assert!((student_t_cdf(0.0, df).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn cauchy_special_case() {
        // df = 1 is the Cauchy distribution.
        for t in [-3.0, -0.4, 0.7, 12.0] {
            let exact = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0).unwrap() - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn large_df_approaches_normal() {
        assert!((student_t_cdf(1.0, 1e6).unwrap() - normal_cdf(1.0)).abs() < 1e-4);
    }

    #[test]
    fn quantile_roundtrip_far_tail() {
        let p = 1.0 - 5e-9;
        let q = student_t_quantile(p, 9998.0).unwrap();
        let tail = student_t_sf(q, 9998.0).unwrap();
        assert!((tail / (1.0 - p) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_arguments() {
        assert!(student_t_cdf(1.0, 0.5).is_err());
        assert!(student_t_quantile(1.0, 10.0).is_err());
        assert!(student_t_quantile(0.3, f64::NAN).is_err());
    }
}
