//! Linear-Gaussian generative model `y = W x + eps`, `x_hat = x + delta`,
//! with per-row standardization of the behavioral measures.

use std::io::Write;

use crate::distrib::RandomStream;
use crate::error::{Error, Result};
use crate::report::fmt_sig9;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub(crate) fn with_capacity(rows: usize, cols: usize) -> Self {
        Matrix {
            rows: 0,
            cols,
            data: Vec::with_capacity(rows * cols),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    weights: Matrix,
    row_noise_sd: Vec<f64>,
    measurement_sd: f64,
    normalized: bool,
}

impl GenerativeModel {
    /// Rescales each row so every behavioral measure has unit marginal variance:
    /// `a_i = sqrt(sum_k w_ik^2 + sigma_eps^2)`, `w_ij /= a_i`, noise sd `sigma_eps / a_i`.
    pub fn normalize(raw_weights: &Matrix, sigma_eps: f64, sigma_delta: f64) -> Result<Self> {
        Self::validate(raw_weights, sigma_eps, sigma_delta)?;
        let m = raw_weights.rows();
        let n = raw_weights.cols();
        let mut weights = Matrix::zeros(m, n);
        let mut row_noise_sd = Vec::with_capacity(m);
        for i in 0..m {
            let row = raw_weights.row(i);
            let scale = (row.iter().map(|w| w * w).sum::<f64>() + sigma_eps * sigma_eps).sqrt();
            if scale == 0.0 {
                return Err(Error::DegenerateModel { row: i });
            }
            for (j, w) in row.iter().enumerate() {
                weights.data[i * n + j] = w / scale;
            }
            row_noise_sd.push(sigma_eps / scale);
        }
        Ok(GenerativeModel {
            weights,
            row_noise_sd,
            measurement_sd: sigma_delta,
            normalized: true,
        })
    }

    /// Model with the raw weights kept as given (measures not standardized).
    pub fn unnormalized(weights: Matrix, sigma_eps: f64, sigma_delta: f64) -> Result<Self> {
        Self::validate(&weights, sigma_eps, sigma_delta)?;
        let m = weights.rows();
        Ok(GenerativeModel {
            weights,
            row_noise_sd: vec![sigma_eps; m],
            measurement_sd: sigma_delta,
            normalized: false,
        })
    }

    fn validate(weights: &Matrix, sigma_eps: f64, sigma_delta: f64) -> Result<()> {
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::Configuration(
                "weight matrix needs at least one row and one column".into(),
            ));
        }
        if weights.as_slice().iter().any(|w| !w.is_finite()) {
            return Err(Error::Configuration("weights must be finite".into()));
        }
        for (name, v) in [("sigma_eps", sigma_eps), ("sigma_delta", sigma_delta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Configuration(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn n_factors(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_measures(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn row_noise_sd(&self) -> &[f64] {
        &self.row_noise_sd
    }

    pub fn measurement_sd(&self) -> f64 {
        self.measurement_sd
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Draws one individual's factors and measures into the given buffers.
    /// Draw order: `x_1..x_N`, then `eps_1..eps_M`.
    pub(crate) fn draw_latent(&self, stream: &mut RandomStream, x: &mut [f64], y: &mut [f64]) {
        stream.fill_standard_normal(x);
        for (i, yi) in y.iter_mut().enumerate() {
            let signal: f64 = self
                .weights
                .row(i)
                .iter()
                .zip(x.iter())
                .map(|(w, xv)| w * xv)
                .sum();
            *yi = signal + self.row_noise_sd[i] * stream.next_standard_normal();
        }
    }

    /// Adds measurement noise: `x_hat_j = x_j + sigma_delta * delta_j`.
    pub(crate) fn draw_measured(&self, stream: &mut RandomStream, x: &[f64], x_hat: &mut [f64]) {
        for (xh, xv) in x_hat.iter_mut().zip(x) {
            *xh = xv + self.measurement_sd * stream.next_standard_normal();
        }
    }
}

/// Sampled individuals: true factors, measured factors, and behavioral measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub x: Matrix,
    pub x_hat: Matrix,
    pub y: Matrix,
    pub provenance: (u64, u64),
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `id,x1..xN,xhat1..xhatN,y1..yM`, one row per individual (ids from 1).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.x.cols();
        let m = self.y.cols();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend((1..=n).map(|j| format!("x{j}")));
        header.extend((1..=n).map(|j| format!("xhat{j}")));
        header.extend((1..=m).map(|i| format!("y{i}")));
        w.write_record(&header).map_err(io_err)?;
        for r in 0..self.len() {
            let mut rec = vec![(r + 1).to_string()];
            rec.extend(self.x.row(r).iter().map(|&v| fmt_sig9(v)));
            rec.extend(self.x_hat.row(r).iter().map(|&v| fmt_sig9(v)));
            rec.extend(self.y.row(r).iter().map(|&v| fmt_sig9(v)));
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Resource(e.to_string()))?;
        Ok(())
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Resource(e.to_string())
}

const MAX_COHORT_ENTRIES: usize = 1 << 31;

/// Samples `n` individuals, each drawn as `x`, `eps`, then `delta`.
pub fn sample_cohort(
    model: &GenerativeModel,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Cohort> {
    let nf = model.n_factors();
    let nm = model.n_measures();
    if n.checked_mul(2 * nf + nm)
        .is_none_or(|e| e > MAX_COHORT_ENTRIES)
    {
        return Err(Error::Resource(format!(
            "cohort of {n} individuals is too large"
        )));
    }
    let mut x = Matrix::with_capacity(n, nf);
    let mut x_hat = Matrix::with_capacity(n, nf);
    let mut y = Matrix::with_capacity(n, nm);
    let mut xb = vec![0.0; nf];
    let mut xhb = vec![0.0; nf];
    let mut yb = vec![0.0; nm];
    for _ in 0..n {
        model.draw_latent(stream, &mut xb, &mut yb);
        model.draw_measured(stream, &xb, &mut xhb);
        x.push_row(&xb);
        x_hat.push_row(&xhb);
        y.push_row(&yb);
    }
    Ok(Cohort {
        x,
        x_hat,
        y,
        provenance: stream.origin(),
    })
}
