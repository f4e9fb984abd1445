//! Study designs: threshold-based diagnosis with case-control recruitment,
//! and cross-sectional sampling with no selection.

use serde::{Deserialize, Serialize};

use crate::distrib::{normal_cdf, normal_sf, RandomStream};
use crate::error::{Error, Result};
use crate::genmodel::{sample_cohort, Cohort, GenerativeModel, Matrix};

/// Groups below this analytic acceptance probability are refused up front.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupLabel {
    Patient,
    Control,
    Excluded,
}

/// Diagnosis rule: a subject is a patient when every listed measure reaches
/// its threshold. With a single criterion, subjects in `[h - d, h)` are
/// excluded; multi-criterion rules require `d = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationRule {
    n_measures: usize,
    criteria: Vec<(usize, f64)>,
    margin: f64,
}

impl ClassificationRule {
    /// One threshold per measure, all measures consulted.
    pub fn all(thresholds: &[f64], margin: f64) -> Result<Self> {
        let criteria = thresholds.iter().copied().enumerate().collect();
        Self::new(thresholds.len(), criteria, margin)
    }

    /// Thresholds on a subset of measures `(measure index, threshold)`.
    pub fn on(n_measures: usize, criteria: Vec<(usize, f64)>, margin: f64) -> Result<Self> {
        Self::new(n_measures, criteria, margin)
    }

    fn new(n_measures: usize, criteria: Vec<(usize, f64)>, margin: f64) -> Result<Self> {
        if criteria.is_empty() {
            return Err(Error::Configuration(
                "a rule needs at least one criterion".into(),
            ));
        }
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(Error::Configuration(format!(
                "margin d = {margin} must be finite and >= 0"
            )));
        }
        for &(i, h) in &criteria {
            if i >= n_measures {
                return Err(Error::Configuration(format!(
                    "criterion on measure y{} but the model has {n_measures} measures",
                    i + 1
                )));
            }
            if !h.is_finite() {
                return Err(Error::Configuration(format!(
                    "threshold {h} must be finite"
                )));
            }
        }
        let mut seen: Vec<usize> = criteria.iter().map(|c| c.0).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != criteria.len() {
            return Err(Error::Configuration(
                "each measure may appear in at most one criterion".into(),
            ));
        }
        if criteria.len() > 1 && margin > 0.0 {
            return Err(Error::Configuration(
                "a margin is only defined for single-criterion rules; use d = 0 with several criteria".into(),
            ));
        }
        Ok(ClassificationRule {
            n_measures,
            criteria,
            margin,
        })
    }

    pub fn n_measures(&self) -> usize {
        self.n_measures
    }

    pub fn criteria(&self) -> &[(usize, f64)] {
        &self.criteria
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Upper bounds on the probabilities that a random individual qualifies
    /// as (control, patient). Exact for single-criterion rules.
    pub fn acceptance_bounds(&self) -> (f64, f64) {
        let patient = self
            .criteria
            .iter()
            .map(|&(_, h)| normal_sf(h))
            .fold(1.0, f64::min);
        let control = self
            .criteria
            .iter()
            .map(|&(_, h)| normal_cdf(h - self.margin))
            .sum::<f64>()
            .min(1.0);
        (control, patient)
    }
}

pub fn classify(y_row: &[f64], rule: &ClassificationRule) -> Result<GroupLabel> {
    if y_row.len() != rule.n_measures {
        return Err(Error::Dimension {
            expected: rule.n_measures,
            actual: y_row.len(),
        });
    }
    Ok(classify_unchecked(y_row, rule))
}

fn classify_unchecked(y_row: &[f64], rule: &ClassificationRule) -> GroupLabel {
    let mut patient = true;
    let mut control = false;
    for &(i, h) in &rule.criteria {
        let y = y_row[i];
        if y < h {
            patient = false;
            if y < h - rule.margin {
                control = true;
            }
        }
    }
    if patient {
        GroupLabel::Patient
    } else if control || rule.margin == 0.0 {
        GroupLabel::Control
    } else {
        GroupLabel::Excluded
    }
}

/// Measured factors of recruited subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseControlSample {
    pub control_xhat: Matrix,
    pub patient_xhat: Matrix,
    /// Individuals generated before both quotas were met.
    pub attempts: u64,
}

fn check_feasible(rule: &ClassificationRule) -> Result<()> {
    let (control, patient) = rule.acceptance_bounds();
    if patient < MIN_ACCEPTANCE {
        return Err(Error::InfeasibleRecruitment {
            group: "patient",
            probability: patient,
            threshold: MIN_ACCEPTANCE,
        });
    }
    if control < MIN_ACCEPTANCE {
        return Err(Error::InfeasibleRecruitment {
            group: "control",
            probability: control,
            threshold: MIN_ACCEPTANCE,
        });
    }
    Ok(())
}

/// Recruits `n1` controls and `n2` patients by generate-and-test: each
/// generated individual joins its group if that group is still open, and
/// only then has its measurement noise drawn.
pub fn draw_case_control(
    model: &GenerativeModel,
    rule: &ClassificationRule,
    n1: usize,
    n2: usize,
    stream: &mut RandomStream,
) -> Result<CaseControlSample> {
    if !model.is_normalized() {
        return Err(Error::Configuration(
            "case-control recruitment needs a normalized model".into(),
        ));
    }
    if rule.n_measures != model.n_measures() {
        return Err(Error::Dimension {
            expected: model.n_measures(),
            actual: rule.n_measures,
        });
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::Configuration(
            "both groups need at least one subject".into(),
        ));
    }
    check_feasible(rule)?;

    let nf = model.n_factors();
    let mut control = Matrix::with_capacity(n1, nf);
    let mut patient = Matrix::with_capacity(n2, nf);
    let mut x = vec![0.0; nf];
    let mut x_hat = vec![0.0; nf];
    let mut y = vec![0.0; model.n_measures()];
    let max_attempts = (n1 + n2) as u64 * (10.0 / MIN_ACCEPTANCE) as u64;
    let mut attempts = 0u64;
    while control.rows() < n1 || patient.rows() < n2 {
        if attempts >= max_attempts {
            let accepted = (control.rows() + patient.rows()) as f64;
            return Err(Error::InfeasibleRecruitment {
                group: if control.rows() < n1 {
                    "control"
                } else {
                    "patient"
                },
                probability: accepted / attempts as f64,
                threshold: MIN_ACCEPTANCE,
            });
        }
        attempts += 1;
        model.draw_latent(stream, &mut x, &mut y);
        let target = match classify_unchecked(&y, rule) {
            GroupLabel::Patient if patient.rows() < n2 => &mut patient,
            GroupLabel::Control if control.rows() < n1 => &mut control,
            _ => continue,
        };
        model.draw_measured(stream, &x, &mut x_hat);
        target.push_row(&x_hat);
    }
    Ok(CaseControlSample {
        control_xhat: control,
        patient_xhat: patient,
        attempts,
    })
}

/// Cross-sectional sample of `n` subjects, no selection on the phenotype.
pub fn draw_cross_section(
    model: &GenerativeModel,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Cohort> {
    if !model.is_normalized() {
        return Err(Error::Configuration(
            "cross-sectional sampling needs a normalized model".into(),
        ));
    }
    sample_cohort(model, n, stream)
}
