//! Equal-time cross-correlation matrix and the distribution of its
//! off-diagonal coefficients.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{Histogram, HistogramBin};
use crate::matrix::SquareMatrix;
use crate::returns::NormalizedPanel;

/// Default histogram bin width for correlation coefficients.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Symmetric, unit-diagonal correlation matrix labeled by ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    tickers: Vec<String>,
    matrix: SquareMatrix,
}

impl CorrelationMatrix {
    /// Wraps an existing matrix after checking symmetry, unit diagonal, and
    /// the `[-1, 1]` range.
    pub fn from_matrix(tickers: Vec<String>, matrix: SquareMatrix) -> Result<Self> {
        if tickers.len() != matrix.dim() {
            return Err(Error::Correlation(format!(
                "{} tickers for a {}x{} matrix",
                tickers.len(),
                matrix.dim(),
                matrix.dim()
            )));
        }
        if !matrix.is_symmetric() {
            return Err(Error::Correlation("matrix is not symmetric".into()));
        }
        for i in 0..matrix.dim() {
            if (matrix[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(Error::Correlation(format!("diagonal entry {i} is not 1")));
            }
            if matrix.row(i).iter().any(|c| !(c.abs() <= 1.0 + 1e-12)) {
                return Err(Error::Correlation(format!("row {i} has an entry outside [-1, 1]")));
            }
        }
        Ok(Self { tickers, matrix })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Strict upper-triangle entries, row by row.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }

    /// Header row of tickers, then one row per ticker.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("ticker".to_string()).chain(self.tickers.iter().cloned());
        w.write_record(header)?;
        for (i, t) in self.tickers.iter().enumerate() {
            let row = std::iter::once(t.clone()).chain(self.matrix.row(i).iter().map(|c| crate::fmt6(*c)));
            w.write_record(row)?;
        }
        w.flush()
    }
}

/// `C_ij = (1/T) sum_t r_i(t) r_j(t)`, upper triangle computed once and mirrored.
pub fn correlation_matrix(np: &NormalizedPanel) -> Result<CorrelationMatrix> {
    let t = np.t();
    if t < 2 {
        return Err(Error::Correlation(format!("need T >= 2 observations, got {t}")));
    }
    let n = np.n();
    let rows = np.rows();
    let mut c = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            let v = dot / t as f64;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(CorrelationMatrix {
        tickers: np.tickers().to_vec(),
        matrix: c,
    })
}

/// Mean, population standard deviation, and density histogram of the
/// `N(N-1)/2` off-diagonal coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub bin_width: f64,
    pub histogram: Vec<HistogramBin>,
}

pub fn coefficient_stats(c: &CorrelationMatrix, bin_width: f64) -> Result<CoefficientStats> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Correlation(format!("bin width must be positive, got {bin_width}")));
    }
    if c.n() < 2 {
        return Err(Error::Correlation("need at least 2 series".into()));
    }
    let values = c.off_diagonal();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
    let mut hist = Histogram::new(-1.0, 1.0, bin_width);
    for v in &values {
        hist.add_clamped(*v);
    }
    Ok(CoefficientStats {
        mean,
        std,
        count: values.len(),
        bin_width: hist.width(),
        histogram: hist.bins(),
    })
}
