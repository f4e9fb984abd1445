//! Scenario evaluation into result rows, and the sweeps behind each figure.

use std::fmt;
use std::str::FromStr;

use crate::analytic::{analyze_target, scenario_fraction_exceeded};
use crate::distrib::RandomStream;
use crate::error::{Error, Result};
use crate::mcengine::{
    estimate_power_mc_with, fraction_exceeded_mc_for, McOptions, DEFAULT_REPLICATIONS,
};
use crate::report::{fmt_sig9, ResultRow, RESULT_HEADER};
use crate::scenarios::{
    build_case1, build_case2, build_case3, build_case4, CaseKind, Criteria, Scenario, StrategyKind,
    LARGE_SAMPLE_ALPHA, LARGE_SAMPLE_N,
};
use crate::strategy::{classify, draw_cross_section, GroupLabel};

/// Replications used for large-sample scenarios when none are requested.
pub const LARGE_SAMPLE_REPLICATIONS: u64 = 1_000;

/// Subjects in the simulated fraction-exceeded cross-section.
pub const FRACTION_EXCEEDED_SUBJECTS: usize = 100_000;

pub const FIGURES: [&str; 5] = ["fig2c", "fig3bc", "fig4c", "fig5b", "fig6abc"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Mc,
    Both,
}

impl Mode {
    fn analytic(self) -> bool {
        self != Mode::Mc
    }

    fn mc(self) -> bool {
        self != Mode::Analytic
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "mc" => Ok(Mode::Mc),
            "both" => Ok(Mode::Both),
            _ => Err(Error::Configuration(format!(
                "unknown mode `{s}`; expected one of: analytic, mc, both"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Mc => "mc",
            Mode::Both => "both",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub mode: Mode,
    /// Overrides the default replication count; a scenario's own `reps` wins.
    pub reps: Option<u64>,
    pub seed: u64,
    /// Divide replication counts by ten.
    pub fast: bool,
    /// Test each target at `alpha / targets`.
    pub bonferroni: bool,
    pub mc: McOptions,
}

impl RunSettings {
    pub fn new(mode: Mode, seed: u64) -> Self {
        RunSettings {
            mode,
            reps: None,
            seed,
            fast: false,
            bonferroni: false,
            mc: McOptions::default(),
        }
    }

    fn replications(&self, scenario: &Scenario) -> u64 {
        let base = scenario
            .params
            .reps
            .or(self.reps)
            .unwrap_or(match scenario.params.case {
                CaseKind::LargeSample => LARGE_SAMPLE_REPLICATIONS,
                _ => DEFAULT_REPLICATIONS,
            });
        if self.fast {
            (base / 10).max(1)
        } else {
            base
        }
    }
}

/// One row per target of `scenario`.
pub fn evaluate(scenario: &Scenario, settings: &RunSettings) -> Result<Vec<ResultRow>> {
    let mut scenario = scenario.clone();
    if settings.bonferroni {
        scenario.alpha /= scenario.targets.len() as f64;
        scenario.params.alpha = scenario.alpha;
    }
    let s = &scenario;
    let seed = s.params.seed.unwrap_or(settings.seed);
    let reps = settings.replications(s);
    let mc = if settings.mode.mc() {
        Some(estimate_power_mc_with(s, reps, seed, &settings.mc)?)
    } else {
        None
    };
    let margin = s.rule.as_ref().map(|r| r.margin());
    s.targets
        .iter()
        .map(|&t| {
            let analysis = if settings.mode.analytic() {
                analyze_target(s, t)?
            } else {
                None
            };
            if settings.mode == Mode::Analytic && analysis.is_none() {
                return Err(Error::Configuration(format!(
                    "{}: a diagnosis on several criteria has no analytic power; use --mode mc or both",
                    s.label
                )));
            }
            let fraction = if settings.mode.analytic() && s.is_category() {
                scenario_fraction_exceeded(s, t.factor)?
            } else {
                None
            };
            let estimate = mc.as_ref().map(|m| m[&t]);
            Ok(ResultRow {
                case: s.label.clone(),
                strategy: s.strategy.to_string(),
                n: s.n,
                n1: s.groups.map(|g| g.0),
                n2: s.groups.map(|g| g.1),
                n_factors: s.model.n_factors(),
                n_measures: s.model.n_measures(),
                c: s.params.c,
                d: margin,
                sigma_eps: s.params.sigma_eps,
                sigma_delta: s.params.sigma_delta,
                alpha: s.alpha,
                factor_index: t.factor + 1,
                measure_index: t.measure.map(|m| m + 1),
                power_analytic: analysis.map(|a| a.power),
                power_mc: estimate.map(|e| e.p_hat),
                mc_se: estimate.map(|e| e.std_error),
                effect_size: analysis.map(|a| a.effect_size),
                fraction_exceeded: fraction,
                seed: estimate.map(|_| seed),
                replications: estimate.map(|_| reps),
            })
        })
        .collect()
}

/// One CSV file worth of figure data.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub header: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl Panel {
    fn from_rows(name: &str, rows: &[ResultRow]) -> Self {
        Panel {
            name: name.into(),
            header: RESULT_HEADER.iter().map(|h| h.to_string()).collect(),
            records: rows.iter().map(ResultRow::to_record).collect(),
        }
    }

    fn table(name: &str, header: &[&str], records: Vec<Vec<String>>) -> Self {
        Panel {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            records,
        }
    }
}

fn collect_rows(scenarios: Vec<Scenario>, settings: &RunSettings) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for s in &scenarios {
        rows.extend(evaluate(s, settings)?);
    }
    Ok(rows)
}

/// Runs the sweep behind figure `name` and returns its panels.
pub fn run_figure(name: &str, settings: &RunSettings) -> Result<Vec<Panel>> {
    use StrategyKind::*;
    let mut both = settings.clone();
    both.mode = Mode::Both;
    let settings = &both;
    match name {
        "fig2c" => {
            let mut scenarios = Vec::new();
            for n in (20..=400).step_by(20) {
                scenarios.push(build_case1(n, 0.0, 1.0, 1.0, Dimensional)?);
                for d in [0.0, 0.5, 1.0] {
                    scenarios.push(build_case1(n, d, 1.0, 1.0, Category)?);
                }
            }
            Ok(vec![Panel::from_rows(
                "fig2c",
                &collect_rows(scenarios, settings)?,
            )])
        }
        "fig3bc" => {
            let hist = fig3b_histograms(&[1, 3, 9], settings.seed)?;
            let mut scenarios = Vec::new();
            for sigma_eps in SIGMA_EPS_SWEEP {
                scenarios.push(build_case2(1, sigma_eps, 1.0, 100, Dimensional)?);
                for m in 1..=9 {
                    scenarios.push(build_case2(m, sigma_eps, 1.0, 100, Category)?);
                }
            }
            Ok(vec![
                hist,
                Panel::from_rows("fig3c", &collect_rows(scenarios, settings)?),
            ])
        }
        "fig4c" => {
            let mut scenarios = Vec::new();
            for sigma_eps in SIGMA_EPS_SWEEP {
                for k in 0..=10 {
                    let c = k as f64 / 10.0;
                    scenarios.push(build_case3(
                        c,
                        sigma_eps,
                        1.0,
                        100,
                        Criteria::Single,
                        Dimensional,
                    )?);
                    scenarios.push(build_case3(
                        c,
                        sigma_eps,
                        1.0,
                        100,
                        Criteria::Single,
                        Category,
                    )?);
                    scenarios.push(build_case3(
                        c,
                        sigma_eps,
                        1.0,
                        100,
                        Criteria::Both,
                        Category,
                    )?);
                }
            }
            Ok(vec![Panel::from_rows(
                "fig4c",
                &collect_rows(scenarios, settings)?,
            )])
        }
        "fig5b" => {
            let mut scenarios = Vec::new();
            for c in [0.3, 1.0] {
                for nf in [1, 2, 3, 4, 5, 6, 8, 10, 15, 20] {
                    for strategy in [Dimensional, Category] {
                        scenarios.push(build_case4(nf, c, 1.0, 1.0, 100, 0.01, strategy)?);
                    }
                }
            }
            Ok(vec![Panel::from_rows(
                "fig5b",
                &collect_rows(scenarios, settings)?,
            )])
        }
        "fig6abc" => fig6(settings),
        other => Err(Error::Configuration(format!(
            "unknown figure `{other}`; expected one of: {}",
            FIGURES.join(", ")
        ))),
    }
}

const SIGMA_EPS_SWEEP: [f64; 3] = [0.5, 1.0, 2.0];
const FIG6_FACTORS: [usize; 10] = [1, 2, 3, 5, 10, 15, 20, 30, 50, 100];
const HIST_EDGES: (f64, f64, usize) = (-4.0, 4.0, 40);
const HIST_SUBJECTS: usize = 100_000;

/// Distribution of the measured x1 among patients and controls of a Case 2
/// cross-section, one block of bins per `M`.
fn fig3b_histograms(ms: &[usize], seed: u64) -> Result<Panel> {
    let (lo, hi, bins) = HIST_EDGES;
    let width = (hi - lo) / bins as f64;
    let mut records = Vec::new();
    for &m in ms {
        let s = build_case2(m, 1.0, 1.0, 100, StrategyKind::Category)?;
        let rule = s.rule.as_ref().expect("category scenario");
        let cohort = draw_cross_section(
            &s.model,
            HIST_SUBJECTS,
            &mut RandomStream::new(seed, m as u64),
        )?;
        let mut counts = [vec![0u64; bins], vec![0u64; bins]];
        let mut totals = [0u64; 2];
        for r in 0..cohort.len() {
            let g = match classify(cohort.y.row(r), rule)? {
                GroupLabel::Control => 0,
                GroupLabel::Patient => 1,
                GroupLabel::Excluded => continue,
            };
            totals[g] += 1;
            let b = ((cohort.x_hat.get(r, 0) - lo) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[g][b as usize] += 1;
            }
        }
        for (g, group) in ["control", "patient"].iter().enumerate() {
            for (b, &k) in counts[g].iter().enumerate() {
                let left = lo + b as f64 * width;
                records.push(vec![
                    m.to_string(),
                    group.to_string(),
                    fmt_sig9(left),
                    fmt_sig9(left + width),
                    k.to_string(),
                    fmt_sig9(k as f64 / (totals[g].max(1) as f64 * width)),
                ]);
            }
        }
    }
    Ok(Panel::table(
        "fig3b",
        &["M", "group", "bin_lower", "bin_upper", "count", "density"],
        records,
    ))
}

fn fig6(settings: &RunSettings) -> Result<Vec<Panel>> {
    let mut power_rows = Vec::new();
    let mut effect = Vec::new();
    let mut fraction = Vec::new();
    for nf in FIG6_FACTORS {
        let dim = build_case4(
            nf,
            1.0,
            1.0,
            1.0,
            LARGE_SAMPLE_N,
            LARGE_SAMPLE_ALPHA,
            StrategyKind::Dimensional,
        )?;
        let cat = build_case4(
            nf,
            1.0,
            1.0,
            1.0,
            LARGE_SAMPLE_N,
            LARGE_SAMPLE_ALPHA,
            StrategyKind::Category,
        )?;
        let dim_rows = evaluate(&dim, settings)?;
        let cat_rows = evaluate(&cat, settings)?;
        effect.push(vec![
            nf.to_string(),
            dim_rows[0].effect_size.map(fmt_sig9).unwrap_or_default(),
            cat_rows[0].effect_size.map(fmt_sig9).unwrap_or_default(),
        ]);
        let exact = scenario_fraction_exceeded(&cat, 0)?.expect("single criterion");
        let simulated =
            fraction_exceeded_mc_for(&cat, 0, FRACTION_EXCEEDED_SUBJECTS, settings.seed)?;
        fraction.push(vec![
            nf.to_string(),
            fmt_sig9(exact),
            fmt_sig9(simulated),
            FRACTION_EXCEEDED_SUBJECTS.to_string(),
        ]);
        power_rows.extend(dim_rows);
        power_rows.extend(cat_rows);
    }
    Ok(vec![
        Panel::from_rows("fig6a", &power_rows),
        Panel::table("fig6b", &["N", "correlation", "cohens_d"], effect),
        Panel::table(
            "fig6c",
            &[
                "N",
                "fraction_exceeded_analytic",
                "fraction_exceeded_mc",
                "subjects",
            ],
            fraction,
        ),
    ])
}
