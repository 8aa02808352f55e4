//! Seeded factor-model panels for tests, fixtures, and worked examples.
//!
//! Returns follow `R_i(t) = sum_f beta_if F_f(t) + sigma_eps * eps_i(t)` with
//! independent standard-normal factors and noise drawn from [`SplitMix64`].

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::error::Result;
use crate::ingest::AlignedPanel;
use crate::rmt::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    /// `loadings[i][f]`: exposure of series `i` to factor `f`.
    pub loadings: Vec<Vec<f64>>,
    pub factor_sigma: f64,
    pub noise_sigma: f64,
}

impl FactorModel {
    /// Every series loads `beta` on one common factor.
    pub fn one_factor(n: usize, beta: f64, factor_sigma: f64, noise_sigma: f64) -> Self {
        Self {
            loadings: vec![vec![beta]; n],
            factor_sigma,
            noise_sigma,
        }
    }

    /// Two groups, each driven only by its own factor.
    pub fn two_blocks(first: usize, second: usize, beta: f64, factor_sigma: f64, noise_sigma: f64) -> Self {
        let loadings = (0..first + second)
            .map(|i| if i < first { vec![beta, 0.0] } else { vec![0.0, beta] })
            .collect();
        Self {
            loadings,
            factor_sigma,
            noise_sigma,
        }
    }

    pub fn n(&self) -> usize {
        self.loadings.len()
    }

    /// `N x t` returns. Factor paths are drawn first, then the noise, row by row.
    pub fn simulate(&self, t: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::new(seed);
        let factors = self.loadings.first().map_or(0, Vec::len);
        let paths: Vec<Vec<f64>> = (0..factors)
            .map(|_| (0..t).map(|_| self.factor_sigma * rng.next_normal()).collect())
            .collect();
        self.loadings
            .iter()
            .map(|beta| {
                (0..t)
                    .map(|s| {
                        let common: f64 = beta.iter().zip(&paths).map(|(b, f)| b * f[s]).sum();
                        common + self.noise_sigma * rng.next_normal()
                    })
                    .collect()
            })
            .collect()
    }

    /// A dense price panel whose log returns are `simulate(t, seed)`.
    pub fn panel(&self, t: usize, seed: u64) -> Result<AlignedPanel> {
        let returns = self.simulate(t, seed);
        let dates = business_days(NaiveDate::from_ymd_opt(2006, 6, 2).unwrap(), t + 1);
        let tickers = (1..=self.n()).map(|i| format!("S{i:03}")).collect();
        AlignedPanel::new(dates, tickers, prices_from_returns(&returns, 100.0))
    }
}

/// Date-major price rows starting at `start_price`; one more row than returns.
pub fn prices_from_returns(returns: &[Vec<f64>], start_price: f64) -> Vec<Vec<f64>> {
    let t = returns.first().map_or(0, Vec::len);
    let mut log_price = vec![start_price.ln(); returns.len()];
    let mut rows = Vec::with_capacity(t + 1);
    rows.push(log_price.iter().map(|l| l.exp()).collect());
    for s in 0..t {
        for (lp, r) in log_price.iter_mut().zip(returns) {
            *lp += r[s];
        }
        rows.push(log_price.iter().map(|l| l.exp()).collect());
    }
    rows
}

/// `count` consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}
