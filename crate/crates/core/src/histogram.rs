//! Fixed-width histograms normalized as probability densities.

use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    pub density: f64,
}

/// Equal-width bins starting at `lo`. Density is `count / (total * width)`,
/// where `total` includes samples that fell outside the bins, so the area
/// under the histogram is the fraction of samples inside the range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    width: f64,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    /// Bins of `width` covering `[lo, hi]`; the last bin may extend past `hi`.
    pub fn new(lo: f64, hi: f64, width: f64) -> Self {
        assert!(width > 0.0 && hi > lo);
        let bins = ((hi - lo) / width - 1e-9).ceil().max(1.0) as usize;
        Self {
            lo,
            width,
            counts: vec![0; bins],
            total: 0,
        }
    }

    /// `bins` equal bins exactly covering `[lo, hi]`.
    pub fn with_bins(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo);
        Self {
            lo,
            width: (hi - lo) / bins as f64,
            counts: vec![0; bins],
            total: 0,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn lower_edge(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.width
    }

    fn hi(&self) -> f64 {
        self.lower_edge(self.counts.len())
    }

    /// Counts `x`; returns false when it falls outside the bins.
    pub fn add(&mut self, x: f64) -> bool {
        self.total += 1;
        if !(self.lo..=self.hi()).contains(&x) {
            return false;
        }
        let k = (((x - self.lo) / self.width) as usize).min(self.counts.len() - 1);
        self.counts[k] += 1;
        true
    }

    /// Counts `x`, assigning out-of-range values to the nearest end bin.
    pub fn add_clamped(&mut self, x: f64) {
        self.add(x.clamp(self.lo, self.hi()));
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bins(&self) -> Vec<HistogramBin> {
        let norm = if self.total == 0 {
            0.0
        } else {
            1.0 / (self.total as f64 * self.width)
        };
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| HistogramBin {
                center: self.lower_edge(k) + 0.5 * self.width,
                density: c as f64 * norm,
            })
            .collect()
    }
}

/// Writes `(x_label, density)` rows with six decimals.
pub fn write_bins_csv<W: Write>(bins: &[HistogramBin], x_label: &str, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([x_label, "density"])?;
    for b in bins {
        w.write_record([crate::fmt6(b.center), crate::fmt6(b.density)])?;
    }
    w.flush()
}
