//! Log returns, per-series volatility, and normalized returns.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AlignedPanel;

/// Log returns of N series over T steps, with per-series moments.
///
/// Means and volatilities are time averages with the population denominator
/// (divide by T), which makes the diagonal of the correlation matrix exactly
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    tickers: Vec<String>,
    returns: Vec<Vec<f64>>,
    means: Vec<f64>,
    volatilities: Vec<f64>,
}

impl ReturnPanel {
    /// Wraps precomputed return rows (one row per ticker, equal lengths).
    pub fn from_rows(tickers: Vec<String>, returns: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() != returns.len() {
            return Err(Error::Returns(format!(
                "{} tickers but {} return rows",
                tickers.len(),
                returns.len()
            )));
        }
        let len = returns.first().map_or(0, Vec::len);
        if len == 0 {
            return Err(Error::Returns("return series are empty".into()));
        }
        if returns.iter().any(|r| r.len() != len) {
            return Err(Error::Returns("return series have unequal lengths".into()));
        }
        if returns.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::Returns("non-finite return".into()));
        }
        let (means, volatilities) = returns.iter().map(|r| moments(r)).unzip();
        Ok(Self {
            tickers,
            returns,
            means,
            volatilities,
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// `returns()[i][t]` is the log return of ticker `i` from step `t` to `t + 1`.
    pub fn returns(&self) -> &[Vec<f64>] {
        &self.returns
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn volatilities(&self) -> &[f64] {
        &self.volatilities
    }

    /// Number of series.
    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    /// Number of return observations per series.
    pub fn t(&self) -> usize {
        self.returns[0].len()
    }
}

/// Time mean and population standard deviation (two-pass).
fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `R_i(t) = ln P_i(t+1) - ln P_i(t)` for every ticker.
pub fn log_returns(panel: &AlignedPanel) -> Result<ReturnPanel> {
    if panel.len() < 2 {
        return Err(Error::Returns(format!(
            "need at least 2 dates for a return, got {}",
            panel.len()
        )));
    }
    let rows = (0..panel.tickers().len())
        .map(|i| {
            let prices = panel.column(i);
            prices
                .windows(2)
                .map(|w| w[1].ln() - w[0].ln())
                .collect::<Vec<_>>()
        })
        .collect();
    ReturnPanel::from_rows(panel.tickers().to_vec(), rows)
}

/// Returns standardized to zero time-mean and unit population variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPanel {
    tickers: Vec<String>,
    normalized: Vec<Vec<f64>>,
}

impl NormalizedPanel {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.normalized
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn t(&self) -> usize {
        self.normalized[0].len()
    }
}

/// `r_i(t) = (R_i(t) - <R_i>) / sigma_i`.
///
/// Fails when a series has zero volatility, since its correlations would be
/// undefined.
pub fn normalize(rp: &ReturnPanel) -> Result<NormalizedPanel> {
    let mut normalized = Vec::with_capacity(rp.n());
    for (i, row) in rp.returns.iter().enumerate() {
        let (mean, sigma) = (rp.means[i], rp.volatilities[i]);
        // A constant series can leave rounding residue of order 1e-18 in sigma.
        if sigma <= 1e-14 * (1.0 + mean.abs()) {
            return Err(Error::ZeroVolatility(rp.tickers[i].clone()));
        }
        normalized.push(row.iter().map(|r| (r - mean) / sigma).collect());
    }
    Ok(NormalizedPanel {
        tickers: rp.tickers.clone(),
        normalized,
    })
}

/// One line of the volatility table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerVolatility {
    pub ticker: String,
    pub sigma: f64,
}

/// `(ticker, sigma)` pairs in input order.
pub fn volatility_report(rp: &ReturnPanel) -> Vec<TickerVolatility> {
    rp.tickers
        .iter()
        .zip(&rp.volatilities)
        .map(|(ticker, &sigma)| TickerVolatility {
            ticker: ticker.clone(),
            sigma,
        })
        .collect()
}

pub fn write_volatility_csv<W: Write>(rows: &[TickerVolatility], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "sigma"])?;
    for r in rows {
        w.write_record([r.ticker.clone(), crate::fmt6(r.sigma)])?;
    }
    w.flush()
}
