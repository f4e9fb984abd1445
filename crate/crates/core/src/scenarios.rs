//! Scenario presets and the TOML configuration format.
//!
//! A configuration document holds `[[scenario]]` tables. Any key may be
//! given a list of values; the table then expands to the Cartesian grid of
//! all lists. Grid order follows the key order of the table in `KEYS`
//! (case, strategy, n, ...), with later keys varying fastest.
//!
//! ```toml
//! [[scenario]]
//! case = "case1"
//! strategy = ["dimensional", "category"]
//! n = [40, 100, 200]
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::genmodel::{GenerativeModel, Matrix};
use crate::strategy::ClassificationRule;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_N: usize = 100;
pub const LARGE_SAMPLE_N: usize = 10_000;
pub const LARGE_SAMPLE_ALPHA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Category,
    Dimensional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Case1,
    Case2,
    Case3,
    Case4,
    /// Case 4 at n = 10,000 and alpha = 1e-8 with complete mixture.
    LargeSample,
    Comorbidity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criteria {
    /// Diagnose on y1 alone.
    Single,
    /// Diagnose on y1 and y2.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Disorder {
    A,
    B,
}

macro_rules! text_enum {
    ($ty:ty, $what:literal, [$($name:literal => $val:expr),+ $(,)?]) => {
        impl $ty {
            pub const NAMES: &'static [&'static str] = &[$($name),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(v if v == $val => $name,)+
                    _ => unreachable!(),
                }
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($val),)+
                    _ => Err(Error::Configuration(format!(
                        "unknown {} `{}` (valid: {})",
                        $what,
                        s,
                        Self::NAMES.join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

text_enum!(StrategyKind, "strategy", [
    "category" => StrategyKind::Category,
    "dimensional" => StrategyKind::Dimensional,
]);
text_enum!(CaseKind, "case", [
    "case1" => CaseKind::Case1,
    "case2" => CaseKind::Case2,
    "case3" => CaseKind::Case3,
    "case4" => CaseKind::Case4,
    "large-sample" => CaseKind::LargeSample,
    "comorbidity" => CaseKind::Comorbidity,
]);
text_enum!(Criteria, "criteria", [
    "single" => Criteria::Single,
    "both" => Criteria::Both,
]);
text_enum!(Disorder, "disorder", [
    "A" => Disorder::A,
    "B" => Disorder::B,
]);

/// A tested pair. Indices are 0-based; `measure` is `None` for the
/// patient-versus-control comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Target {
    pub factor: usize,
    pub measure: Option<usize>,
}

/// Fully resolved scenario parameters; mirrors the configuration keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub case: CaseKind,
    pub strategy: StrategyKind,
    pub n: usize,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub d: f64,
    pub h: f64,
    pub c: Option<f64>,
    pub n_factors: Option<usize>,
    pub n_measures: Option<usize>,
    pub criteria: Option<Criteria>,
    pub w: Option<[f64; 4]>,
    pub disorder: Option<Disorder>,
    pub sigma_eps: f64,
    pub sigma_delta: f64,
    pub alpha: f64,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub label: String,
}

impl ScenarioParams {
    /// Parameters of `case` with every optional setting at its default.
    pub fn defaults(case: CaseKind) -> Self {
        let mut p = ScenarioParams {
            case,
            strategy: StrategyKind::Category,
            n: DEFAULT_N,
            n1: None,
            n2: None,
            d: 0.0,
            h: DEFAULT_THRESHOLD,
            c: None,
            n_factors: None,
            n_measures: None,
            criteria: None,
            w: None,
            disorder: None,
            sigma_eps: DEFAULT_SIGMA,
            sigma_delta: DEFAULT_SIGMA,
            alpha: DEFAULT_ALPHA,
            reps: None,
            seed: None,
            label: String::new(),
        };
        match case {
            CaseKind::Case1 => {}
            CaseKind::Case2 => p.n_measures = Some(3),
            CaseKind::Case3 => {
                p.c = Some(0.5);
                p.criteria = Some(Criteria::Single);
            }
            CaseKind::Case4 => {
                p.n_factors = Some(10);
                p.c = Some(1.0);
            }
            CaseKind::LargeSample => {
                p.n_factors = Some(10);
                p.c = Some(1.0);
                p.n = LARGE_SAMPLE_N;
                p.alpha = LARGE_SAMPLE_ALPHA;
            }
            CaseKind::Comorbidity => {
                p.w = Some([1.0; 4]);
                p.disorder = Some(Disorder::A);
            }
        }
        p
    }

    fn default_label(&self) -> String {
        match self.disorder {
            Some(d) => format!("{}-{}", self.case, d),
            None => self.case.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub model: GenerativeModel,
    pub strategy: StrategyKind,
    /// Present exactly for category scenarios.
    pub rule: Option<ClassificationRule>,
    pub n: usize,
    /// (controls, patients) for category scenarios.
    pub groups: Option<(usize, usize)>,
    pub alpha: f64,
    pub targets: Vec<Target>,
    pub label: String,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Configuration(msg.into())
}

fn check_sigma(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(cfg(format!("{name} = {v} must be finite and >= 0")));
    }
    Ok(())
}

fn check_mixture(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(cfg(format!("c = {c} must lie in [0, 1]")));
    }
    Ok(())
}

impl Scenario {
    /// Validates `params` and builds the model, rule and targets.
    pub fn from_params(mut params: ScenarioParams) -> Result<Self> {
        use CaseKind::*;
        check_sigma("sigma_eps", params.sigma_eps)?;
        check_sigma("sigma_delta", params.sigma_delta)?;
        if !(params.alpha > 0.0 && params.alpha < 0.5) {
            return Err(cfg(format!(
                "alpha = {} must lie in (0, 0.5)",
                params.alpha
            )));
        }
        if !params.h.is_finite() {
            return Err(cfg(format!("threshold h = {} must be finite", params.h)));
        }
        if !(params.d >= 0.0) || !params.d.is_finite() {
            return Err(cfg(format!(
                "margin d = {} must be finite and >= 0",
                params.d
            )));
        }
        let category = params.strategy == StrategyKind::Category;
        if !category && params.d > 0.0 {
            return Err(cfg("a margin d > 0 applies only to the category strategy"));
        }
        if params.reps == Some(0) {
            return Err(cfg("reps must be positive"));
        }

        let relevant = |key: &str| -> bool {
            match key {
                "c" => matches!(params.case, Case3 | Case4 | LargeSample),
                "N" => matches!(params.case, Case4 | LargeSample),
                "M" => params.case == Case2,
                "criteria" => params.case == Case3,
                "w" | "disorder" => params.case == Comorbidity,
                _ => true,
            }
        };
        for (key, set) in [
            ("c", params.c.is_some()),
            ("N", params.n_factors.is_some()),
            ("M", params.n_measures.is_some()),
            ("criteria", params.criteria.is_some()),
            ("w", params.w.is_some()),
            ("disorder", params.disorder.is_some()),
        ] {
            if set != relevant(key) {
                return Err(cfg(if set {
                    format!("key `{key}` does not apply to {}", params.case)
                } else {
                    format!("{} requires `{key}`", params.case)
                }));
            }
        }

        let h = params.h;
        let (raw, rule, targets): (Vec<Vec<f64>>, Option<ClassificationRule>, Vec<Target>) =
            match params.case {
                Case1 => (
                    vec![vec![1.0]],
                    Some(ClassificationRule::all(&[h], params.d)?),
                    vec![Target {
                        factor: 0,
                        measure: Some(0),
                    }],
                ),
                Case2 => {
                    let m = params.n_measures.unwrap();
                    if m == 0 {
                        return Err(cfg("M must be >= 1"));
                    }
                    (
                        vec![vec![1.0, 0.0]; m],
                        Some(ClassificationRule::all(&vec![h; m], params.d)?),
                        (0..2)
                            .map(|j| Target {
                                factor: j,
                                measure: Some(0),
                            })
                            .collect(),
                    )
                }
                Case3 => {
                    let c = params.c.unwrap();
                    check_mixture(c)?;
                    let rule = match params.criteria.unwrap() {
                        Criteria::Single => ClassificationRule::on(2, vec![(0, h)], params.d)?,
                        Criteria::Both => ClassificationRule::all(&[h, h], params.d)?,
                    };
                    (
                        vec![vec![1.0, c], vec![c, 1.0]],
                        Some(rule),
                        (0..2)
                            .map(|j| Target {
                                factor: j,
                                measure: Some(0),
                            })
                            .collect(),
                    )
                }
                Case4 | LargeSample => {
                    let nf = params.n_factors.unwrap();
                    let c = params.c.unwrap();
                    if nf == 0 {
                        return Err(cfg("N must be >= 1"));
                    }
                    check_mixture(c)?;
                    let mut row = vec![c; nf];
                    row[0] = 1.0;
                    (
                        vec![row],
                        Some(ClassificationRule::all(&[h], params.d)?),
                        vec![Target {
                            factor: 0,
                            measure: Some(0),
                        }],
                    )
                }
                Comorbidity => {
                    if !category {
                        return Err(cfg(
                            "comorbidity compares diagnostic groups; use strategy = \"category\"",
                        ));
                    }
                    let [w1, w2, w3, w4] = params.w.unwrap();
                    if ![w1, w2, w3, w4].iter().all(|v| v.is_finite()) {
                        return Err(cfg("comorbidity weights must be finite"));
                    }
                    let specific = match params.disorder.unwrap() {
                        Disorder::A => 0,
                        Disorder::B => 1,
                    };
                    (
                        vec![
                            vec![w1, 0.0, 0.0, w4],
                            vec![0.0, w2, 0.0, w4],
                            vec![0.0, 0.0, w3, 0.0],
                        ],
                        Some(ClassificationRule::on(
                            3,
                            vec![(specific, h), (2, h)],
                            params.d,
                        )?),
                        (0..4)
                            .map(|j| Target {
                                factor: j,
                                measure: None,
                            })
                            .collect(),
                    )
                }
            };
        let model = GenerativeModel::normalize(
            &Matrix::from_rows(&raw)?,
            params.sigma_eps,
            params.sigma_delta,
        )?;

        let (rule, targets, groups) = if category {
            let groups = match (params.n1, params.n2) {
                (Some(a), Some(b)) => {
                    if a + b != params.n {
                        return Err(cfg(format!(
                            "n1 + n2 = {} differs from n = {}",
                            a + b,
                            params.n
                        )));
                    }
                    (a, b)
                }
                (None, None) => {
                    if params.n % 2 == 1 {
                        return Err(cfg(format!(
                            "odd n = {} cannot be split evenly; give n1 and n2 explicitly",
                            params.n
                        )));
                    }
                    (params.n / 2, params.n / 2)
                }
                _ => return Err(cfg("give both n1 and n2 or neither")),
            };
            if groups.0 < 2 || groups.1 < 2 {
                return Err(cfg(format!("group sizes {groups:?} must both be >= 2")));
            }
            params.n1 = Some(groups.0);
            params.n2 = Some(groups.1);
            let targets = targets
                .into_iter()
                .map(|t| Target { measure: None, ..t })
                .collect();
            (rule, targets, Some(groups))
        } else {
            if params.n1.is_some() || params.n2.is_some() {
                return Err(cfg("n1 and n2 apply only to the category strategy"));
            }
            if params.n < 4 {
                return Err(cfg(format!(
                    "n = {} must be >= 4 for a correlation test",
                    params.n
                )));
            }
            (None, targets, None)
        };
        if params.label.is_empty() {
            params.label = params.default_label();
        }
        Ok(Scenario {
            model,
            strategy: params.strategy,
            rule,
            n: params.n,
            groups,
            alpha: params.alpha,
            targets,
            label: params.label.clone(),
            params,
        })
    }

    pub fn is_category(&self) -> bool {
        self.strategy == StrategyKind::Category
    }

    /// Measure whose threshold defines the patients when the rule has a single
    /// criterion.
    pub fn single_criterion(&self) -> Option<(usize, f64)> {
        match self.rule.as_ref()?.criteria() {
            [one] => Some(*one),
            _ => None,
        }
    }
}

/// Case 1: one factor, one measure.
pub fn build_case1(
    n: usize,
    d: f64,
    sigma_eps: f64,
    sigma_delta: f64,
    strategy: StrategyKind,
) -> Result<Scenario> {
    Scenario::from_params(ScenarioParams {
        strategy,
        n,
        d,
        sigma_eps,
        sigma_delta,
        ..ScenarioParams::defaults(CaseKind::Case1)
    })
}

/// Case 2: `m` measures all driven by x1; x2 is irrelevant.
pub fn build_case2(
    m: usize,
    sigma_eps: f64,
    sigma_delta: f64,
    n: usize,
    strategy: StrategyKind,
) -> Result<Scenario> {
    Scenario::from_params(ScenarioParams {
        strategy,
        n,
        n_measures: Some(m),
        sigma_eps,
        sigma_delta,
        ..ScenarioParams::defaults(CaseKind::Case2)
    })
}

/// Case 3: two factors mixed into two measures with off-diagonal weight `c`.
pub fn build_case3(
    c: f64,
    sigma_eps: f64,
    sigma_delta: f64,
    n: usize,
    criteria: Criteria,
    strategy: StrategyKind,
) -> Result<Scenario> {
    Scenario::from_params(ScenarioParams {
        strategy,
        n,
        c: Some(c),
        criteria: Some(criteria),
        sigma_eps,
        sigma_delta,
        ..ScenarioParams::defaults(CaseKind::Case3)
    })
}

/// Case 4: `n_factors` factors feeding one measure with weights `(1, c, ..., c)`.
#[allow(clippy::too_many_arguments)]
pub fn build_case4(
    n_factors: usize,
    c: f64,
    sigma_eps: f64,
    sigma_delta: f64,
    n: usize,
    alpha: f64,
    strategy: StrategyKind,
) -> Result<Scenario> {
    let case = if n == LARGE_SAMPLE_N && alpha == LARGE_SAMPLE_ALPHA {
        CaseKind::LargeSample
    } else {
        CaseKind::Case4
    };
    Scenario::from_params(ScenarioParams {
        strategy,
        n,
        n_factors: Some(n_factors),
        c: Some(c),
        sigma_eps,
        sigma_delta,
        alpha,
        ..ScenarioParams::defaults(case)
    })
}

/// The two overlapping disorders: A requires y1 and y3, B requires y2 and y3.
pub fn build_comorbidity(
    w: [f64; 4],
    sigma_eps: f64,
    sigma_delta: f64,
    n: usize,
) -> Result<(Scenario, Scenario)> {
    let make = |disorder| {
        Scenario::from_params(ScenarioParams {
            n,
            w: Some(w),
            disorder: Some(disorder),
            sigma_eps,
            sigma_delta,
            ..ScenarioParams::defaults(CaseKind::Comorbidity)
        })
    };
    Ok((make(Disorder::A)?, make(Disorder::B)?))
}

// ---------------------------------------------------------------------------
// Configuration documents

const KEYS: [&str; 19] = [
    "case",
    "strategy",
    "n",
    "n1",
    "n2",
    "d",
    "h",
    "c",
    "N",
    "M",
    "criteria",
    "w",
    "disorder",
    "sigma_eps",
    "sigma_delta",
    "alpha",
    "reps",
    "seed",
    "label",
];

/// Line (1-based) of `key` inside the `index`-th `[[scenario]]` table.
fn locate(text: &str, index: usize, key: Option<&str>) -> Option<usize> {
    let mut seen = 0usize;
    let mut inside = false;
    for (no, line) in text.lines().enumerate() {
        let t = line.trim_start();
        if t.starts_with('[') {
            inside = t.starts_with("[[scenario]]") && {
                seen += 1;
                seen == index + 1
            };
            if inside && key.is_none() {
                return Some(no + 1);
            }
            continue;
        }
        if let (true, Some(k)) = (inside, key) {
            if let Some(rest) = t.strip_prefix(k) {
                if rest.trim_start().starts_with('=') {
                    return Some(no + 1);
                }
            }
        }
    }
    None
}

struct Located<'a> {
    text: &'a str,
    index: usize,
}

impl Located<'_> {
    fn err(&self, key: Option<&str>, msg: impl fmt::Display) -> Error {
        let line =
            locate(self.text, self.index, key).or_else(|| locate(self.text, self.index, None));
        let mut s = format!("scenario #{}", self.index + 1);
        if let Some(l) = line {
            s = format!("line {l}: {s}");
        }
        if let Some(k) = key {
            s.push_str(&format!(", field `{k}`"));
        }
        Error::Parse(format!("{s}: {msg}"))
    }
}

fn as_usize(v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(format!("expected a nonnegative integer, found {v}")),
    }
}

fn as_u64(v: &Value) -> std::result::Result<u64, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(format!("expected a nonnegative integer, found {v}")),
    }
}

fn as_f64(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(format!("expected a number, found {v}")),
    }
}

fn as_str(v: &Value) -> std::result::Result<&str, String> {
    v.as_str()
        .ok_or_else(|| format!("expected a string, found {v}"))
}

fn as_weights(v: &Value) -> std::result::Result<[f64; 4], String> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("expected four numbers, found {v}"))?;
    if arr.len() != 4 {
        return Err(format!("expected four numbers, found {}", arr.len()));
    }
    let mut w = [0.0; 4];
    for (slot, x) in w.iter_mut().zip(arr) {
        *slot = as_f64(x)?;
    }
    Ok(w)
}

/// Splits a key's value into the list of grid values it contributes.
fn grid_values(key: &str, v: &Value) -> Vec<Value> {
    match (key, v) {
        ("w", Value::Array(a)) if a.iter().all(|x| x.is_array()) && !a.is_empty() => a.clone(),
        ("w", _) => vec![v.clone()],
        (_, Value::Array(a)) => a.clone(),
        _ => vec![v.clone()],
    }
}

fn params_from_point(point: &[(&str, &Value)], loc: &Located) -> Result<ScenarioParams> {
    let case_value = point.iter().find(|(k, _)| *k == "case").map(|(_, v)| *v);
    let case = match case_value {
        None => return Err(loc.err(None, "missing required key `case`")),
        Some(v) => {
            let s = as_str(v).map_err(|e| loc.err(Some("case"), e))?;
            CaseKind::from_str(s).map_err(|e| loc.err(Some("case"), e))?
        }
    };
    let mut p = ScenarioParams::defaults(case);
    let strategy_given = point.iter().any(|(k, _)| *k == "strategy");
    if case == CaseKind::Comorbidity && point.iter().all(|(k, _)| *k != "disorder") {
        p.disorder = None;
    }
    for &(key, v) in point {
        let field = Some(key);
        let wrap = |e: String| loc.err(field, e);
        match key {
            "case" => {}
            "strategy" => {
                p.strategy = StrategyKind::from_str(as_str(v).map_err(wrap)?)
                    .map_err(|e| loc.err(field, e))?
            }
            "n" => p.n = as_usize(v).map_err(wrap)?,
            "n1" => p.n1 = Some(as_usize(v).map_err(wrap)?),
            "n2" => p.n2 = Some(as_usize(v).map_err(wrap)?),
            "d" => p.d = as_f64(v).map_err(wrap)?,
            "h" => p.h = as_f64(v).map_err(wrap)?,
            "c" => p.c = Some(as_f64(v).map_err(wrap)?),
            "N" => p.n_factors = Some(as_usize(v).map_err(wrap)?),
            "M" => p.n_measures = Some(as_usize(v).map_err(wrap)?),
            "criteria" => {
                p.criteria = Some(
                    Criteria::from_str(as_str(v).map_err(wrap)?).map_err(|e| loc.err(field, e))?,
                )
            }
            "w" => p.w = Some(as_weights(v).map_err(wrap)?),
            "disorder" => {
                p.disorder = Some(
                    Disorder::from_str(as_str(v).map_err(wrap)?).map_err(|e| loc.err(field, e))?,
                )
            }
            "sigma_eps" => p.sigma_eps = as_f64(v).map_err(wrap)?,
            "sigma_delta" => p.sigma_delta = as_f64(v).map_err(wrap)?,
            "alpha" => p.alpha = as_f64(v).map_err(wrap)?,
            "reps" => p.reps = Some(as_u64(v).map_err(wrap)?),
            "seed" => p.seed = Some(as_u64(v).map_err(wrap)?),
            "label" => p.label = as_str(v).map_err(wrap)?.to_string(),
            _ => unreachable!("keys are checked before expansion"),
        }
    }
    if case == CaseKind::Comorbidity && !strategy_given {
        p.strategy = StrategyKind::Category;
    }
    Ok(p)
}

/// Maps a configuration error from scenario validation to the most likely field.
fn blame(err: &Error) -> Option<&'static str> {
    let msg = match err {
        Error::Configuration(m) => m.as_str(),
        _ => return None,
    };
    KEYS.iter()
        .copied()
        .find(|k| msg.contains(&format!("`{k}`")) || msg.starts_with(&format!("{k} ")))
        .or_else(|| {
            [
                ("margin", "d"),
                ("threshold", "h"),
                ("odd n", "n"),
                ("group sizes", "n"),
                ("n1", "n1"),
            ]
            .into_iter()
            .find(|(needle, _)| msg.contains(needle))
            .map(|(_, k)| k)
        })
}

/// Parses a configuration document into its expanded scenario list.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let mut out = Vec::new();
    for (key, value) in &doc {
        if key != "scenario" {
            return Err(Error::Parse(format!(
                "unknown top-level key `{key}` (expected [[scenario]] tables)"
            )));
        }
        if !value
            .as_array()
            .is_some_and(|a| a.iter().all(Value::is_table))
        {
            return Err(Error::Parse(
                "`scenario` must be an array of tables ([[scenario]])".into(),
            ));
        }
    }
    let Some(tables) = doc.get("scenario").and_then(Value::as_array) else {
        return Ok(out);
    };
    for (index, table) in tables.iter().enumerate() {
        let loc = Located { text, index };
        let table = table.as_table().expect("checked above");
        for key in table.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(loc.err(
                    Some(key),
                    format!("unknown key (valid keys: {})", KEYS.join(", ")),
                ));
            }
        }
        let axes: Vec<(&str, Vec<Value>)> = KEYS
            .iter()
            .filter_map(|&k| table.get(k).map(|v| (k, grid_values(k, v))))
            .collect();
        if let Some((k, _)) = axes.iter().find(|(_, vals)| vals.is_empty()) {
            return Err(loc.err(Some(k), "empty list"));
        }

        let mut odometer = vec![0usize; axes.len()];
        loop {
            let point: Vec<(&str, &Value)> = axes
                .iter()
                .zip(&odometer)
                .map(|((k, vals), &i)| (*k, &vals[i]))
                .collect();
            let mut p = params_from_point(&point, &loc)?;
            let mut params = vec![];
            if p.case == CaseKind::Comorbidity && p.disorder.is_none() {
                for d in [Disorder::A, Disorder::B] {
                    p.disorder = Some(d);
                    params.push(p.clone());
                }
            } else {
                params.push(p);
            }
            for p in params {
                out.push(Scenario::from_params(p).map_err(|e| {
                    let key = blame(&e);
                    loc.err(key, e)
                })?);
            }

            let mut pos = axes.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                odometer[pos] += 1;
                if odometer[pos] < axes[pos].1.len() {
                    break;
                }
                odometer[pos] = 0;
            }
            if odometer.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Writes scenarios as a configuration document that parses back to an
/// equal list.
pub fn serialize_config(scenarios: &[Scenario]) -> String {
    let tables: Vec<Value> = scenarios
        .iter()
        .map(|s| Value::Table(to_table(&s.params)))
        .collect();
    let mut doc = Table::new();
    doc.insert("scenario".into(), Value::Array(tables));
    toml::to_string(&doc).expect("plain values always serialize")
}

fn to_table(p: &ScenarioParams) -> Table {
    let mut t = Table::new();
    let int = |v: usize| Value::Integer(v as i64);
    t.insert("case".into(), Value::String(p.case.to_string()));
    t.insert("strategy".into(), Value::String(p.strategy.to_string()));
    t.insert("n".into(), int(p.n));
    if let (Some(a), Some(b)) = (p.n1, p.n2) {
        t.insert("n1".into(), int(a));
        t.insert("n2".into(), int(b));
    }
    t.insert("d".into(), Value::Float(p.d));
    t.insert("h".into(), Value::Float(p.h));
    if let Some(c) = p.c {
        t.insert("c".into(), Value::Float(c));
    }
    if let Some(v) = p.n_factors {
        t.insert("N".into(), int(v));
    }
    if let Some(v) = p.n_measures {
        t.insert("M".into(), int(v));
    }
    if let Some(v) = p.criteria {
        t.insert("criteria".into(), Value::String(v.to_string()));
    }
    if let Some(w) = p.w {
        t.insert(
            "w".into(),
            Value::Array(w.iter().map(|&x| Value::Float(x)).collect()),
        );
    }
    if let Some(v) = p.disorder {
        t.insert("disorder".into(), Value::String(v.to_string()));
    }
    t.insert("sigma_eps".into(), Value::Float(p.sigma_eps));
    t.insert("sigma_delta".into(), Value::Float(p.sigma_delta));
    t.insert("alpha".into(), Value::Float(p.alpha));
    if let Some(v) = p.reps {
        t.insert("reps".into(), Value::Integer(v as i64));
    }
    if let Some(v) = p.seed {
        t.insert("seed".into(), Value::Integer(v as i64));
    }
    t.insert("label".into(), Value::String(p.label.clone()));
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn case1_preset() {
        let s = build_case1(100, 0.0, 1.0, 1.0, StrategyKind::Category).unwrap();
        assert!((s.model.weights().get(0, 0) - S).abs() < 1e-15);
        assert_eq!(s.groups, Some((50, 50)));
        assert_eq!(s.alpha, 0.01);
        assert_eq!(
            s.targets,
            vec![Target {
                factor: 0,
                measure: None
            }]
        );
        let dim = build_case1(100, 0.0, 1.0, 1.0, StrategyKind::Dimensional).unwrap();
        assert!(dim.rule.is_none());
        assert_eq!(
            dim.targets,
            vec![Target {
                factor: 0,
                measure: Some(0)
            }]
        );
        assert!(build_case1(100, 0.5, 1.0, 1.0, StrategyKind::Dimensional).is_err());
        assert!(build_case1(101, 0.0, 1.0, 1.0, StrategyKind::Category).is_err());
    }

    #[test]
    fn case2_matrix() {
        let s = build_case2(3, 1.0, 1.0, 100, StrategyKind::Category).unwrap();
        let w = s.model.weights();
        assert_eq!((w.rows(), w.cols()), (3, 2));
        for i in 0..3 {
            assert!((w.get(i, 0) - S).abs() < 1e-15);
            assert_eq!(w.get(i, 1), 0.0);
        }
        assert_eq!(s.targets.len(), 2);
        let one = build_case2(1, 1.0, 1.0, 100, StrategyKind::Category).unwrap();
        let c1 = build_case1(100, 0.0, 1.0, 1.0, StrategyKind::Category).unwrap();
        assert_eq!(one.model.weights().get(0, 0), c1.model.weights().get(0, 0));
        assert_eq!(
            one.rule.as_ref().unwrap().criteria(),
            c1.rule.as_ref().unwrap().criteria()
        );
    }

    #[test]
    fn case3_rows_share_scale() {
        let s = build_case3(0.6, 1.0, 1.0, 100, Criteria::Both, StrategyKind::Category).unwrap();
        let w = s.model.weights();
        let a = (1.0f64 + 0.36 + 1.0).sqrt();
        assert!((w.get(0, 0) - 1.0 / a).abs() < 1e-15);
        assert!((w.get(1, 0) - 0.6 / a).abs() < 1e-15);
        assert_eq!(s.rule.as_ref().unwrap().criteria().len(), 2);
        let single =
            build_case3(0.6, 1.0, 1.0, 100, Criteria::Single, StrategyKind::Category).unwrap();
        assert_eq!(single.single_criterion(), Some((0, 0.5)));
        assert!(build_case3(1.2, 1.0, 1.0, 100, Criteria::Single, StrategyKind::Category).is_err());
    }

    #[test]
    fn case4_row() {
        let s = build_case4(4, 0.3, 1.0, 1.0, 100, 0.01, StrategyKind::Dimensional).unwrap();
        let a = (1.0f64 + 3.0 * 0.09 + 1.0).sqrt();
        let row = s.model.weights().row(0);
        assert!((row[0] - 1.0 / a).abs() < 1e-15);
        assert!(row[1..].iter().all(|&v| (v - 0.3 / a).abs() < 1e-15));
        let large = build_case4(50, 1.0, 1.0, 1.0, 10_000, 1e-8, StrategyKind::Category).unwrap();
        assert_eq!(large.params.case, CaseKind::LargeSample);
    }

    #[test]
    fn comorbidity_pair() {
        let (a, b) = build_comorbidity([1.0, 1.0, 1.0, 0.0], 1.0, 1.0, 200).unwrap();
        assert_eq!(a.rule.as_ref().unwrap().criteria(), &[(0, 0.5), (2, 0.5)]);
        assert_eq!(b.rule.as_ref().unwrap().criteria(), &[(1, 0.5), (2, 0.5)]);
        assert_eq!(a.targets.len(), 4);
        assert_eq!(a.model.weights().get(0, 3), 0.0);
    }

    #[test]
    fn empty_and_minimal_documents() {
        assert!(parse_config("").unwrap().is_empty());
        let s = parse_config("[[scenario]]\ncase = \"case1\"\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s[0],
            build_case1(100, 0.0, 1.0, 1.0, StrategyKind::Category).unwrap()
        );
    }

    #[test]
    fn grids_expand_last_key_fastest() {
        let doc = "[[scenario]]\ncase = \"case1\"\nstrategy = [\"dimensional\", \"category\"]\nn = [40, 100]\n";
        let s = parse_config(doc).unwrap();
        let got: Vec<(StrategyKind, usize)> = s.iter().map(|s| (s.strategy, s.n)).collect();
        use StrategyKind::*;
        assert_eq!(
            got,
            vec![
                (Dimensional, 40),
                (Dimensional, 100),
                (Category, 40),
                (Category, 100)
            ]
        );
    }

    #[test]
    fn comorbidity_without_disorder_expands_to_both() {
        let s = parse_config(
            "[[scenario]]\ncase = \"comorbidity\"\nw = [[1, 1, 1, 0], [1, 1, 1, 1]]\n",
        )
        .unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].label, "comorbidity-A");
        assert_eq!(s[1].label, "comorbidity-B");
    }

    #[test]
    fn round_trip() {
        let doc = r#"
[[scenario]]
case = "case1"
strategy = ["dimensional", "category"]
n = [40, 400]

[[scenario]]
case = "case2"
M = [1, 9]
sigma_eps = 0.5
seed = 7
reps = 500

[[scenario]]
case = "case3"
c = 0.25
criteria = ["single", "both"]
n1 = 30
n2 = 70
n = 100

[[scenario]]
case = "large-sample"
N = [5, 50]

[[scenario]]
case = "comorbidity"
label = "overlap"
"#;
        let first = parse_config(doc).unwrap();
        let text = serialize_config(&first);
        let second = parse_config(&text).unwrap();
        assert_eq!(first, second);
        assert_eq!(serialize_config(&second), text);
    }

    #[test]
    fn errors_name_line_and_field() {
        let err = parse_config("[[scenario]]\ncase = \"case1\"\nbogus = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("bogus"), "{msg}");

        let err = parse_config(
            "[[scenario]]\ncase = \"case1\"\n\n[[scenario]]\ncase = \"case1\"\nn = 101\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("line 6") && err.contains("`n`"), "{err}");

        let err = parse_config("[[scenario]]\ncase = \"case1\"\nn = \"ten\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3") && err.contains("integer"), "{err}");

        let err = parse_config("[[scenario]]\ncase = \"case9\"\n")
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("case1") && err.contains("comorbidity"),
            "{err}"
        );

        let err = parse_config("[[scenario]]\ncase = \"case1\"\nc = 0.5\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3") && err.contains("`c`"), "{err}");

        assert!(parse_config("[[scenario]]\ncase = \"case2\"\nM = 2\nd = 0.5\n").is_err());
        assert!(parse_config("[[scenario]]\ncase = \"case1\"\nalpha = 0.7\n").is_err());
        assert!(parse_config("[[scenario]\n").is_err());
        assert!(parse_config("title = 3\n").is_err());
    }

    #[test]
    fn presets_are_normalized_and_pure() {
        let all = [
            build_case1(40, 0.5, 1.0, 1.0, StrategyKind::Category).unwrap(),
            build_case2(5, 0.5, 1.0, 100, StrategyKind::Category).unwrap(),
            build_case3(1.0, 1.0, 0.0, 100, Criteria::Both, StrategyKind::Category).unwrap(),
            build_case4(20, 1.0, 1.0, 1.0, 200, 0.01, StrategyKind::Dimensional).unwrap(),
        ];
        for s in &all {
            assert!(s.model.is_normalized());
            let w = s.model.weights();
            for i in 0..w.rows() {
                let total: f64 =
                    w.row(i).iter().map(|v| v * v).sum::<f64>() + s.model.row_noise_sd()[i].powi(2);
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(
            all[0],
            build_case1(40, 0.5, 1.0, 1.0, StrategyKind::Category).unwrap()
        );
    }
}
