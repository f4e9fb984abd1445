//! Result rows and their text encodings.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Nine significant digits: fixed notation, or lowercase scientific below 1e-4.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    if x.abs() < 1e-4 {
        return sci;
    }
    // Exponent after rounding to nine digits, so 9.9999999996 prints as 10.0000000.
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_sig9).unwrap_or_default()
}

/// One tested (factor, measure) pair of one scenario. Indices are 1-based;
/// `measure_index` is empty for group comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub case: String,
    pub strategy: String,
    pub n: usize,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    #[serde(rename = "N")]
    pub n_factors: usize,
    #[serde(rename = "M")]
    pub n_measures: usize,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub sigma_eps: f64,
    pub sigma_delta: f64,
    pub alpha: f64,
    pub factor_index: usize,
    pub measure_index: Option<usize>,
    pub power_analytic: Option<f64>,
    pub power_mc: Option<f64>,
    pub mc_se: Option<f64>,
    pub effect_size: Option<f64>,
    pub fraction_exceeded: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<u64>,
}

pub const RESULT_HEADER: [&str; 21] = [
    "case",
    "strategy",
    "n",
    "n1",
    "n2",
    "N",
    "M",
    "c",
    "d",
    "sigma_eps",
    "sigma_delta",
    "alpha",
    "factor_index",
    "measure_index",
    "power_analytic",
    "power_mc",
    "mc_se",
    "effect_size",
    "fraction_exceeded",
    "seed",
    "replications",
];

impl ResultRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.case.clone(),
            self.strategy.clone(),
            self.n.to_string(),
            opt(self.n1),
            opt(self.n2),
            self.n_factors.to_string(),
            self.n_measures.to_string(),
            opt_f(self.c),
            opt_f(self.d),
            fmt_sig9(self.sigma_eps),
            fmt_sig9(self.sigma_delta),
            fmt_sig9(self.alpha),
            self.factor_index.to_string(),
            opt(self.measure_index),
            opt_f(self.power_analytic),
            opt_f(self.power_mc),
            opt_f(self.mc_se),
            opt_f(self.effect_size),
            opt_f(self.fraction_exceeded),
            opt(self.seed),
            opt(self.replications),
        ]
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Resource(format!("write failed: {e}"))
}

/// Writes a header plus one line per row.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::to_record).collect();
    write_table(out, &RESULT_HEADER, &records)
}

/// One JSON object per line, same fields and order as the CSV columns.
pub fn write_json<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(io_err)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
