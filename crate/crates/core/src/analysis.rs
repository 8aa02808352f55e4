//! Eigenvector-level analyses and per-window report assembly.
//!
//! * inverse participation ratios `I^k = sum_l (u_l^k)^4`, bounded by `1/N`
//!   (all components equal) and `1` (a single component);
//! * rank-matched comparison of an eigenvector across two windows, reporting
//!   components whose sign changed;
//! * [`build_report`], which runs the whole chain for one window.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::correlation::{coefficient_stats, correlation_matrix, CoefficientStats, DEFAULT_BIN_WIDTH};
use crate::error::{Error, Result};
use crate::ingest::{slice_window, AlignedPanel, WindowSpec};
use crate::returns::{log_returns, normalize, volatility_report, TickerVolatility};
use crate::rmt::{
    classify_spectrum, compare_with_model, MpModel, SpectrumClassification, SpectrumComparison,
    DEFAULT_SPECTRUM_BINS,
};
use crate::spectral::{eigendecompose, SpectralDecomposition, TickerComponent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IprEntry {
    /// 1-based, 1 = largest eigenvalue.
    pub rank: usize,
    pub eigenvalue: f64,
    pub ipr: f64,
    /// `1 / ipr`: roughly how many components carry the eigenvector.
    pub participation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IprSeries {
    pub entries: Vec<IprEntry>,
}

impl IprSeries {
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "eigenvalue", "ipr", "participation"])?;
        for e in &self.entries {
            w.write_record([
                e.rank.to_string(),
                crate::fmt6(e.eigenvalue),
                crate::fmt6(e.ipr),
                crate::fmt6(e.participation),
            ])?;
        }
        w.flush()
    }
}

/// Fourth-power inverse participation ratio of one vector.
pub fn inverse_participation(u: &[f64]) -> f64 {
    u.iter().map(|x| (x * x) * (x * x)).sum()
}

pub fn ipr(sd: &SpectralDecomposition) -> IprSeries {
    let entries = sd
        .eigenvalues()
        .iter()
        .zip(sd.eigenvectors())
        .enumerate()
        .map(|(k, (&eigenvalue, u))| {
            let ipr = inverse_participation(u);
            IprEntry {
                rank: k + 1,
                eigenvalue,
                ipr,
                participation: 1.0 / ipr,
            }
        })
        .collect();
    IprSeries { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipStatus {
    Kept,
    Flipped,
    /// At least one side is below the magnitude floor.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentChange {
    pub ticker: String,
    pub a: f64,
    /// Window B's component after global orientation.
    pub b: f64,
    pub status: FlipStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorComparison {
    pub rank: usize,
    pub floor: f64,
    /// True when B's vector was negated to agree with A's.
    pub reoriented: bool,
    pub components: Vec<ComponentChange>,
    pub flipped: usize,
    pub indeterminate: usize,
    pub fraction_flipped: f64,
}

impl VectorComparison {
    pub fn flipped_tickers(&self) -> Vec<&str> {
        self.components
            .iter()
            .filter(|c| c.status == FlipStatus::Flipped)
            .map(|c| c.ticker.as_str())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ticker", "component_a", "component_b", "status"])?;
        for c in &self.components {
            let status = match c.status {
                FlipStatus::Kept => "kept",
                FlipStatus::Flipped => "flipped",
                FlipStatus::Indeterminate => "indeterminate",
            };
            w.write_record([c.ticker.clone(), crate::fmt6(c.a), crate::fmt6(c.b), status.to_string()])?;
        }
        w.flush()
    }
}

/// Compares the rank-`rank` eigenvectors of two windows.
///
/// B's vector is first negated if that increases its agreement (dot product)
/// with A's, so an overall sign change is not counted. A component counts as
/// flipped when `a * b < 0` and both magnitudes reach `floor`.
pub fn compare_vectors(
    a: &SpectralDecomposition,
    b: &SpectralDecomposition,
    rank: usize,
    floor: f64,
) -> Result<VectorComparison> {
    let set_a: BTreeSet<&String> = a.tickers().iter().collect();
    let set_b: BTreeSet<&String> = b.tickers().iter().collect();
    if set_a != set_b || a.n() != b.n() {
        return Err(Error::TickerMismatch {
            only_a: set_a.difference(&set_b).map(|s| s.to_string()).collect(),
            only_b: set_b.difference(&set_a).map(|s| s.to_string()).collect(),
        });
    }
    if !(floor >= 0.0) {
        return Err(Error::Analysis(format!("magnitude floor must be >= 0, got {floor}")));
    }
    let (ua, ub) = match (a.eigenvector(rank), b.eigenvector(rank)) {
        (Some(ua), Some(ub)) => (ua, ub),
        _ => {
            return Err(Error::Analysis(format!(
                "rank {rank} is outside 1..={}",
                a.n()
            )))
        }
    };
    let ub: Vec<f64> = a
        .tickers()
        .iter()
        .map(|t| {
            let j = b.tickers().iter().position(|x| x == t).expect("ticker sets match");
            ub[j]
        })
        .collect();

    let dot: f64 = ua.iter().zip(&ub).map(|(x, y)| x * y).sum();
    let sign = if dot < 0.0 { -1.0 } else { 1.0 };

    let components: Vec<ComponentChange> = a
        .tickers()
        .iter()
        .zip(ua.iter().zip(&ub))
        .map(|(ticker, (&ca, &cb))| {
            let cb = sign * cb;
            let status = if ca.abs() < floor || cb.abs() < floor {
                FlipStatus::Indeterminate
            } else if ca * cb < 0.0 {
                FlipStatus::Flipped
            } else {
                FlipStatus::Kept
            };
            ComponentChange {
                ticker: ticker.clone(),
                a: ca,
                b: cb,
                status,
            }
        })
        .collect();
    let flipped = components.iter().filter(|c| c.status == FlipStatus::Flipped).count();
    let indeterminate = components
        .iter()
        .filter(|c| c.status == FlipStatus::Indeterminate)
        .count();
    Ok(VectorComparison {
        rank,
        floor,
        reoriented: sign < 0.0,
        fraction_flipped: flipped as f64 / components.len() as f64,
        components,
        flipped,
        indeterminate,
    })
}

/// Knobs for [`build_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub bin_width: f64,
    pub top_k: usize,
    /// Number of eigenvector ranks (from the largest) summarized by top-k tables.
    pub ranks: usize,
    pub spectrum_bins: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            top_k: 20,
            ranks: 2,
            spectrum_bins: DEFAULT_SPECTRUM_BINS,
        }
    }
}

/// The `top_k` largest-magnitude components of one eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopComponents {
    pub rank: usize,
    pub eigenvalue: f64,
    pub components: Vec<TickerComponent>,
}

/// Components ordered by decreasing magnitude (ticker order on ties), truncated to `k`.
pub fn top_components(sd: &SpectralDecomposition, rank: usize, k: usize) -> Option<TopComponents> {
    let u = sd.eigenvector(rank)?;
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&i, &j| u[j].abs().total_cmp(&u[i].abs()));
    Some(TopComponents {
        rank,
        eigenvalue: sd.eigenvalues()[rank - 1],
        components: idx
            .into_iter()
            .take(k)
            .map(|i| TickerComponent {
                ticker: sd.tickers()[i].clone(),
                value: u[i],
            })
            .collect(),
    })
}

/// Everything computed for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: WindowSpec,
    pub n: usize,
    /// Return observations, one fewer than the window's dates.
    pub t: usize,
    pub first_date: chrono::NaiveDate,
    pub last_date: chrono::NaiveDate,
    pub filled_cells: usize,
    pub tickers: Vec<String>,
    pub volatilities: Vec<TickerVolatility>,
    pub coefficients: CoefficientStats,
    pub mp: MpModel,
    pub eigenvalues: Vec<f64>,
    pub classification: SpectrumClassification,
    pub spectrum_vs_mp: SpectrumComparison,
    pub top_components: Vec<TopComponents>,
    pub ipr: IprSeries,
    pub decomposition: SpectralDecomposition,
}

impl WindowReport {
    /// Checks that every section describes the same N tickers.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.n;
        let ok = self.tickers.len() == n
            && self.volatilities.len() == n
            && self.volatilities.iter().zip(&self.tickers).all(|(v, t)| &v.ticker == t)
            && self.eigenvalues.len() == n
            && self.classification.total() == n
            && self.ipr.entries.len() == n
            && self.decomposition.tickers() == self.tickers.as_slice()
            && self.coefficients.count == n * (n - 1) / 2;
        if ok {
            Ok(())
        } else {
            Err(Error::Analysis(format!(
                "report for window '{}' is internally inconsistent",
                self.window.name
            )))
        }
    }
}

/// Runs returns, normalization, correlation, decomposition, the random-matrix
/// comparison, and IPR for one window. `Q` comes from the window's own `T`
/// and `N`.
pub fn build_report(window: &WindowSpec, aligned: &AlignedPanel, config: &ReportConfig) -> Result<WindowReport> {
    build_report_inner(window, aligned, config).map_err(|e| e.in_window(&window.name))
}

fn build_report_inner(window: &WindowSpec, aligned: &AlignedPanel, config: &ReportConfig) -> Result<WindowReport> {
    let panel = slice_window(aligned, window)?;
    let rp = log_returns(&panel)?;
    let np = normalize(&rp)?;
    let c = correlation_matrix(&np)?;
    let coefficients = coefficient_stats(&c, config.bin_width)?;
    let sd = eigendecompose(&c)?;
    let mp = MpModel::for_shape(rp.n(), rp.t())?;
    let classification = classify_spectrum(&sd, &mp);
    let spectrum_vs_mp = compare_with_model(sd.eigenvalues(), &mp, config.spectrum_bins)?;
    let top = (1..=config.ranks.min(sd.n()))
        .filter_map(|rank| top_components(&sd, rank, config.top_k))
        .collect();
    let report = WindowReport {
        window: window.clone(),
        n: rp.n(),
        t: rp.t(),
        first_date: panel.dates()[0],
        last_date: *panel.dates().last().unwrap(),
        filled_cells: panel.fill_log().len(),
        tickers: rp.tickers().to_vec(),
        volatilities: volatility_report(&rp),
        coefficients,
        mp,
        eigenvalues: sd.eigenvalues().to_vec(),
        classification,
        spectrum_vs_mp,
        top_components: top,
        ipr: ipr(&sd),
        decomposition: sd,
    };
    report.check_consistency()?;
    Ok(report)
}
