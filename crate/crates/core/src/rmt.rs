//! Marchenko–Pastur null model for correlation matrices of independent
//! series, plus seeded surrogate spectra to check it numerically.
//!
//! For `N` series of `L` observations and `Q = L / N >= 1`, eigenvalues of a
//! random correlation matrix fill `[lambda_minus, lambda_plus]` with
//! `lambda_pm = 1 + 1/Q ± 2 sqrt(1/Q)` and density
//! `Q / (2 pi) * sqrt((lambda_plus - x)(x - lambda_minus)) / x`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::correlation_matrix;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::returns::{normalize, ReturnPanel};
use crate::spectral::{eigendecompose, SpectralDecomposition};

/// Points in the default density curve.
pub const DEFAULT_CURVE_POINTS: usize = 512;

/// Margin added on both sides of `[lambda_minus, lambda_plus]` for curves
/// and histograms.
pub const CURVE_MARGIN: f64 = 0.1;

/// Bins used when comparing an empirical spectrum with the analytic density.
pub const DEFAULT_SPECTRUM_BINS: usize = 40;

/// Bounds of the random-matrix eigenvalue support for a given `Q = L / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpModel {
    pub q: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

/// `lambda_pm = 1 + 1/Q ± 2 sqrt(1/Q)`; requires `Q >= 1`.
pub fn mp_bounds(q: f64) -> Result<MpModel> {
    if !q.is_finite() || q < 1.0 {
        return Err(Error::Rmt(format!(
            "Q = {q} is outside the supported range Q >= 1 (fewer observations than series \
             puts a point mass at zero, which this model does not cover)"
        )));
    }
    let inv = 1.0 / q;
    let half_width = 2.0 * inv.sqrt();
    Ok(MpModel {
        q,
        lambda_minus: (1.0 + inv - half_width).max(0.0),
        lambda_plus: 1.0 + inv + half_width,
    })
}

impl MpModel {
    /// Model for `n` series of `l` observations.
    pub fn for_shape(n: usize, l: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Rmt("no series".into()));
        }
        mp_bounds(l as f64 / n as f64)
    }

    pub fn density(&self, lambda: f64) -> f64 {
        mp_density(self, lambda)
    }

    /// Analytic probability mass in `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (self.lambda_minus, self.lambda_plus);
        let a = a.clamp(lo, hi);
        let b = b.clamp(lo, hi);
        if b <= a {
            return 0.0;
        }
        // x = lo + (hi - lo) sin^2(phi) removes both square-root endpoints.
        let width = hi - lo;
        let angle = |x: f64| ((x - lo) / width).clamp(0.0, 1.0).sqrt().asin();
        let integrand = |phi: f64| {
            let (s, c) = phi.sin_cos();
            let x = lo + width * s * s;
            self.q / PI * width * width * s * s * c * c / x
        };
        gauss_legendre(integrand, angle(a), angle(b), 64)
    }

    /// Samples the density on an evenly spaced grid over
    /// `[lambda_minus - 0.1, lambda_plus + 0.1]`, endpoints included.
    pub fn density_curve(&self, points: usize) -> Vec<(f64, f64)> {
        let lo = self.lambda_minus - CURVE_MARGIN;
        let hi = self.lambda_plus + CURVE_MARGIN;
        let points = points.max(2);
        (0..points)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / (points - 1) as f64;
                (x, self.density(x))
            })
            .collect()
    }
}

/// Density at `lambda`; zero outside the support and at `lambda = 0`.
pub fn mp_density(model: &MpModel, lambda: f64) -> f64 {
    if lambda <= 0.0 || lambda < model.lambda_minus || lambda > model.lambda_plus {
        return 0.0;
    }
    let root = ((model.lambda_plus - lambda) * (lambda - model.lambda_minus)).max(0.0).sqrt();
    model.q / (2.0 * PI) * root / lambda
}

/// Composite 8-point Gauss–Legendre over `panels` equal subintervals.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            total += w * half * (f(mid - half * x) + f(mid + half * x));
        }
    }
    total
}

/// Eigenvalues split by the model's support. Values exactly on a bound are bulk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClassification {
    pub below: Vec<f64>,
    pub bulk: Vec<f64>,
    pub above: Vec<f64>,
}

impl SpectrumClassification {
    pub fn total(&self) -> usize {
        self.below.len() + self.bulk.len() + self.above.len()
    }
}

pub fn classify_spectrum(sd: &SpectralDecomposition, model: &MpModel) -> SpectrumClassification {
    classify_eigenvalues(sd.eigenvalues(), model)
}

pub fn classify_eigenvalues(eigenvalues: &[f64], model: &MpModel) -> SpectrumClassification {
    let mut out = SpectrumClassification {
        below: Vec::new(),
        bulk: Vec::new(),
        above: Vec::new(),
    };
    for &l in eigenvalues {
        if l < model.lambda_minus {
            out.below.push(l);
        } else if l > model.lambda_plus {
            out.above.push(l);
        } else {
            out.bulk.push(l);
        }
    }
    out
}

/// SplitMix64 generator with Box–Muller standard normals.
///
/// The state update and output mix are the published SplitMix64 constants,
/// so a given seed yields the same stream in any language.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate. Each pair of uniforms `(u1, u2)` yields
    /// `r cos(2 pi u2)` and then `r sin(2 pi u2)` with
    /// `r = sqrt(-2 ln(1 - u1))`.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// `n` rows of `l` standard normals drawn row by row from one stream.
pub fn gaussian_panel(n: usize, l: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| (0..l).map(|_| rng.next_normal()).collect())
        .collect()
}

/// Spectrum of the correlation matrix of `n` independent Gaussian series of
/// length `l`, run through the same normalize/correlate/decompose path as
/// market data.
pub fn surrogate_spectrum(n: usize, l: usize, seed: u64) -> Result<SpectralDecomposition> {
    if n < 2 || l < n {
        return Err(Error::Rmt(format!("surrogate needs L >= N >= 2, got N = {n}, L = {l}")));
    }
    let tickers = (1..=n).map(|i| format!("S{i:03}")).collect();
    let rp = ReturnPanel::from_rows(tickers, gaussian_panel(n, l, seed))?;
    eigendecompose(&correlation_matrix(&normalize(&rp)?)?)
}

/// Surrogates for seeds `base_seed, base_seed + 1, ...`, in seed order.
pub fn surrogate_ensemble(n: usize, l: usize, seeds: usize, base_seed: u64) -> Result<Vec<SpectralDecomposition>> {
    if seeds == 0 {
        return Err(Error::Rmt("need at least one seed".into()));
    }
    (0..seeds as u64)
        .into_par_iter()
        .map(|k| surrogate_spectrum(n, l, base_seed.wrapping_add(k)))
        .collect()
}

/// One bin of an empirical-versus-analytic spectrum comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub center: f64,
    pub empirical: f64,
    /// Bin average of the analytic density.
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComparison {
    pub model: MpModel,
    pub bins: Vec<SpectrumBin>,
    /// Integral of `|empirical - analytic|`, including empirical mass that
    /// falls outside the binned range.
    pub l1_distance: f64,
    /// Fraction of eigenvalues inside `[lambda_minus, lambda_plus]`.
    pub fraction_inside: f64,
}

/// Histograms `eigenvalues` over `[lambda_minus - 0.1, lambda_plus + 0.1]`
/// and measures its L1 distance from the analytic density.
pub fn compare_with_model(eigenvalues: &[f64], model: &MpModel, bins: usize) -> Result<SpectrumComparison> {
    if eigenvalues.is_empty() || bins == 0 {
        return Err(Error::Rmt("need eigenvalues and at least one bin".into()));
    }
    let lo = model.lambda_minus - CURVE_MARGIN;
    let hi = model.lambda_plus + CURVE_MARGIN;
    let mut hist = Histogram::with_bins(lo, hi, bins);
    let mut inside = 0usize;
    for &l in eigenvalues {
        hist.add(l);
        if (model.lambda_minus..=model.lambda_plus).contains(&l) {
            inside += 1;
        }
    }
    let w = hist.width();
    let binned: Vec<SpectrumBin> = hist
        .bins()
        .iter()
        .enumerate()
        .map(|(k, b)| SpectrumBin {
            center: b.center,
            empirical: b.density,
            analytic: model.mass_between(hist.lower_edge(k), hist.lower_edge(k + 1)) / w,
        })
        .collect();
    let captured: u64 = hist.counts().iter().sum();
    let outside_mass = 1.0 - captured as f64 / eigenvalues.len() as f64;
    let l1 = binned.iter().map(|b| (b.empirical - b.analytic).abs() * w).sum::<f64>() + outside_mass;
    Ok(SpectrumComparison {
        model: *model,
        bins: binned,
        l1_distance: l1,
        fraction_inside: inside as f64 / eigenvalues.len() as f64,
    })
}

pub fn write_curve_csv<W: Write>(curve: &[(f64, f64)], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "density"])?;
    for (x, d) in curve {
        w.write_record([crate::fmt6(*x), crate::fmt6(*d)])?;
    }
    w.flush()
}

pub fn write_comparison_csv<W: Write>(cmp: &SpectrumComparison, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "empirical_density", "mp_density"])?;
    for b in &cmp.bins {
        w.write_record([crate::fmt6(b.center), crate::fmt6(b.empirical), crate::fmt6(b.analytic)])?;
    }
    w.flush()
}
