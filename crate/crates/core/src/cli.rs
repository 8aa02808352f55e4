//! Command-line front end: `analyze`, `mp`, `surrogate`, `compare`, `align`.
//!
//! Settings resolve as command-line flags, then the configuration file, then
//! the `MARKETRMT_OUT_DIR` environment variable (output directory only), then
//! built-in defaults.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::analysis::{build_report, compare_vectors, ReportConfig, WindowReport};
use crate::correlation::{correlation_matrix, DEFAULT_BIN_WIDTH};
use crate::error::{Error, Result};
use crate::histogram::write_bins_csv;
use crate::ingest::{
    align, load_prices, paper_2008_config, slice_window, validate_windows, AlignedPanel, WindowSpec,
    DEFAULT_THETA,
};
use crate::returns::{log_returns, normalize, write_volatility_csv};
use crate::rmt::{
    compare_with_model, mp_bounds, surrogate_ensemble, write_comparison_csv, write_curve_csv, MpModel,
    DEFAULT_CURVE_POINTS, DEFAULT_SPECTRUM_BINS,
};
use crate::fmt6;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MARKETRMT_OUT_DIR";

const FALLBACK_OUT_DIR: &str = "marketrmt-out";

#[derive(Debug, Parser)]
#[command(name = "marketrmt", version, about = "Random-matrix analysis of market cross-correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline for every configured window.
    Analyze(AnalyzeArgs),
    /// Print Marchenko–Pastur bounds for Q = L/N and write the density curve.
    Mp(MpArgs),
    /// Compare averaged surrogate spectra with the analytic density.
    Surrogate(SurrogateArgs),
    /// Report component sign flips between two window reports.
    Compare(CompareArgs),
    /// Align a raw price table and write the dense panel.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Price table (first column `date`, one column per ticker).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Run configuration: a JSON list of {name, start, end} windows, or an
    /// object with `windows` and optional settings. Defaults to `paper-2008`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Remove a date when the fraction of closed markets is >= theta.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Histogram bin width for correlation coefficients over [-1, 1].
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Components listed per eigenvector, by magnitude.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Magnitude floor for cross-window sign-flip tables.
    #[arg(long)]
    pub floor: Option<f64>,
    /// Bins for the eigenvalue density compared against the analytic curve.
    #[arg(long)]
    pub spectrum_bins: Option<usize>,
    /// Seeded surrogate panels per window, matched in N and T (0 = off).
    #[arg(long)]
    pub surrogate_seeds: Option<usize>,
    /// Analyze up to this many windows concurrently.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Suppress the note on the inverse participation ratio definition.
    #[arg(long)]
    pub no_ipr_note: bool,
}

#[derive(Debug, Args)]
pub struct MpArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurrogateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub l: usize,
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, default_value_t = DEFAULT_SPECTRUM_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Eigenvector rank, 1 = largest eigenvalue.
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.0)]
    pub floor: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for `analyze`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub windows: Vec<WindowSpec>,
    pub theta: f64,
    pub bin_width: f64,
    pub top_k: usize,
    pub floor: f64,
    pub spectrum_bins: usize,
    pub surrogate_seeds: usize,
    pub ipr_note: bool,
    pub out_dir: PathBuf,
    pub parallel: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        validate_windows(&self.windows)?;
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::Config(format!("bin width must be positive, got {}", self.bin_width)));
        }
        if !(self.floor >= 0.0) {
            return Err(Error::Config(format!("floor must be >= 0, got {}", self.floor)));
        }
        if self.top_k == 0 || self.spectrum_bins == 0 || self.parallel == 0 {
            return Err(Error::Config("top-k, spectrum bins, and parallelism must be positive".into()));
        }
        Ok(())
    }

    fn report_config(&self) -> ReportConfig {
        ReportConfig {
            bin_width: self.bin_width,
            top_k: self.top_k,
            spectrum_bins: self.spectrum_bins,
            ..ReportConfig::default()
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Windows(Vec<WindowSpec>),
    Full(FullConfig),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FullConfig {
    #[allow(dead_code)]
    name: Option<String>,
    input: Option<PathBuf>,
    windows: Vec<WindowSpec>,
    theta: Option<f64>,
    bin_width: Option<f64>,
    top_k: Option<usize>,
    floor: Option<f64>,
    spectrum_bins: Option<usize>,
    surrogate_seeds: Option<usize>,
    out: Option<PathBuf>,
}

fn read_config(path: Option<&Path>) -> Result<FullConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => paper_2008_config().to_string(),
    };
    let parsed: ConfigFile = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    Ok(match parsed {
        ConfigFile::Windows(windows) => FullConfig {
            windows,
            ..FullConfig::default()
        },
        ConfigFile::Full(full) => full,
    })
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

impl AnalyzeArgs {
    /// Merges flags over the configuration file over defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = read_config(self.config.as_deref())?;
        let input = self
            .input
            .clone()
            .or(file.input)
            .ok_or_else(|| Error::Config("no input file given (--input or config `input`)".into()))?;
        let config = RunConfig {
            input,
            windows: file.windows,
            theta: self.theta.or(file.theta).unwrap_or(DEFAULT_THETA),
            bin_width: self.bin_width.or(file.bin_width).unwrap_or(DEFAULT_BIN_WIDTH),
            top_k: self.top_k.or(file.top_k).unwrap_or(20),
            floor: self.floor.or(file.floor).unwrap_or(0.0),
            spectrum_bins: self.spectrum_bins.or(file.spectrum_bins).unwrap_or(DEFAULT_SPECTRUM_BINS),
            surrogate_seeds: self.surrogate_seeds.or(file.surrogate_seeds).unwrap_or(0),
            ipr_note: !self.no_ipr_note,
            out_dir: self.out.clone().or(file.out).unwrap_or_else(default_out_dir),
            parallel: self.parallel,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Runs one subcommand. Summaries go to `stdout`; notes go to standard error.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Analyze(args) => cmd_analyze(&args.resolve()?, stdout),
        Command::Mp(args) => cmd_mp(args, stdout),
        Command::Surrogate(args) => cmd_surrogate(args, stdout),
        Command::Compare(args) => cmd_compare(args, stdout),
        Command::Align(args) => cmd_align(args, stdout),
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let werr = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(werr)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(werr)?;
    std::fs::rename(&tmp, path).map_err(werr)
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })?;
    write_atomic(path, &buf)
}

fn out_err(source: std::io::Error) -> Error {
    Error::Write {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

/// File-system-safe version of a window name.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

pub fn cmd_analyze(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let raw = load_prices(&config.input)?;
    let aligned = align(&raw, config.theta)?;
    let out = &config.out_dir;
    write_with(&out.join("aligned_prices.csv"), |b| {
        aligned.write_csv(&mut *b).map_err(std::io::Error::other)
    })?;
    write_with(&out.join("fill_log.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["date", "ticker"])?;
        for c in aligned.fill_log() {
            w.write_record([c.date.to_string(), c.ticker.clone()])?;
        }
        w.flush()
    })?;

    let report_config = config.report_config();
    let build = |w: &WindowSpec| build_report(w, &aligned, &report_config);
    let results: Vec<Result<WindowReport>> = if config.parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallel)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| config.windows.par_iter().map(build).collect())
    } else {
        config.windows.iter().map(build).collect()
    };

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(report) => {
                write_window_outputs(&report, &aligned, config)?;
                reports.push(report);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }

    for pair in reports.windows(2) {
        for rank in 1..=2.min(pair[0].n) {
            let cmp = compare_vectors(&pair[0].decomposition, &pair[1].decomposition, rank, config.floor)?;
            let path = out.join("comparisons").join(format!(
                "{}__{}_rank{rank}.csv",
                file_stem(&pair[0].window.name),
                file_stem(&pair[1].window.name)
            ));
            write_with(&path, |b| cmp.write_csv(b))?;
        }
    }

    let summary = summary_table(&reports);
    write_atomic(&out.join("summary.csv"), summary.as_bytes())?;
    stdout.write_all(summary.as_bytes()).map_err(out_err)?;
    if config.ipr_note {
        eprintln!(
            "note: IPR is I^k = sum_l (u_l^k)^4 over unit-norm eigenvectors (range 1/N..1); \
             the squared-component form is identically 1 and is not used"
        );
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Analysis(format!(
            "{} of {} windows failed: {}",
            failures.len(),
            config.windows.len(),
            failures.join("; ")
        )))
    }
}

fn summary_table(reports: &[WindowReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "window", "n", "t", "q", "lambda_minus", "lambda_plus", "lambda_max", "mean_c", "below", "bulk", "above",
    ])
    .expect("in-memory write");
    for r in reports {
        w.write_record([
            r.window.name.clone(),
            r.n.to_string(),
            r.t.to_string(),
            fmt6(r.mp.q),
            fmt6(r.mp.lambda_minus),
            fmt6(r.mp.lambda_plus),
            fmt6(r.eigenvalues[0]),
            fmt6(r.coefficients.mean),
            r.classification.below.len().to_string(),
            r.classification.bulk.len().to_string(),
            r.classification.above.len().to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

fn write_window_outputs(report: &WindowReport, aligned: &AlignedPanel, config: &RunConfig) -> Result<()> {
    let stem = file_stem(&report.window.name);
    let out = &config.out_dir;
    let json = serde_json::to_vec_pretty(report).map_err(|e| Error::Analysis(e.to_string()))?;
    write_atomic(&out.join(format!("{stem}.report.json")), &json)?;

    let dir = out.join(&stem);
    write_with(&dir.join("volatility.csv"), |b| write_volatility_csv(&report.volatilities, b))?;
    write_with(&dir.join("coefficient_density.csv"), |b| {
        write_bins_csv(&report.coefficients.histogram, "c", b)
    })?;
    write_with(&dir.join("eigenvalues.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["rank", "eigenvalue", "class"])?;
        for (k, &l) in report.eigenvalues.iter().enumerate() {
            let class = if l < report.mp.lambda_minus {
                "below"
            } else if l > report.mp.lambda_plus {
                "above"
            } else {
                "bulk"
            };
            w.write_record([(k + 1).to_string(), fmt6(l), class.to_string()])?;
        }
        w.flush()
    })?;
    write_with(&dir.join("eigenvalue_density.csv"), |b| write_comparison_csv(&report.spectrum_vs_mp, b))?;
    write_with(&dir.join("mp_density.csv"), |b| {
        write_curve_csv(&report.mp.density_curve(DEFAULT_CURVE_POINTS), b)
    })?;
    write_with(&dir.join("top_components.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["rank", "eigenvalue", "ticker", "component"])?;
        for top in &report.top_components {
            for c in &top.components {
                w.write_record([top.rank.to_string(), fmt6(top.eigenvalue), c.ticker.clone(), fmt6(c.value)])?;
            }
        }
        w.flush()
    })?;
    write_with(&dir.join("ipr.csv"), |b| report.ipr.write_csv(b))?;

    // The report holds only summaries; recompute the matrix for its table.
    let panel = slice_window(aligned, &report.window)?;
    let c = correlation_matrix(&normalize(&log_returns(&panel)?)?)?;
    write_with(&dir.join("correlation.csv"), |b| c.write_csv(b))?;

    if config.surrogate_seeds > 0 {
        let ensemble = surrogate_ensemble(report.n, report.t, config.surrogate_seeds, 0)
            .map_err(|e| e.in_window(&report.window.name))?;
        let eigs: Vec<f64> = ensemble.iter().flat_map(|sd| sd.eigenvalues().to_vec()).collect();
        let cmp = compare_with_model(&eigs, &report.mp, config.spectrum_bins)?;
        write_with(&dir.join("surrogate_density.csv"), |b| write_comparison_csv(&cmp, b))?;
    }
    Ok(())
}

pub fn cmd_mp(args: &MpArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = mp_bounds(args.q)?;
    writeln!(stdout, "q,lambda_minus,lambda_plus").map_err(out_err)?;
    writeln!(
        stdout,
        "{},{},{}",
        fmt6(model.q),
        fmt6(model.lambda_minus),
        fmt6(model.lambda_plus)
    )
    .map_err(out_err)?;
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    write_with(&out.join("mp_density.csv"), |b| {
        write_curve_csv(&model.density_curve(args.points), b)
    })
}

pub fn cmd_surrogate(args: &SurrogateArgs, stdout: &mut dyn Write) -> Result<()> {
    if args.n < 2 || args.l < args.n {
        return Err(Error::Rmt(format!(
            "surrogate needs L >= N >= 2, got N = {}, L = {}",
            args.n, args.l
        )));
    }
    if args.bins == 0 {
        return Err(Error::Rmt("need at least one bin".into()));
    }
    let model = MpModel::for_shape(args.n, args.l)?;
    let ensemble = surrogate_ensemble(args.n, args.l, args.seeds, args.base_seed)?;
    let eigs: Vec<f64> = ensemble.iter().flat_map(|sd| sd.eigenvalues().to_vec()).collect();
    let cmp = compare_with_model(&eigs, &model, args.bins)?;

    let out = args.out.clone().unwrap_or_else(default_out_dir);
    write_with(&out.join("surrogate_eigenvalues.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["seed", "rank", "eigenvalue"])?;
        for (k, sd) in ensemble.iter().enumerate() {
            let seed = args.base_seed.wrapping_add(k as u64);
            for (r, l) in sd.eigenvalues().iter().enumerate() {
                w.write_record([seed.to_string(), (r + 1).to_string(), format!("{l:.12}")])?;
            }
        }
        w.flush()
    })?;
    write_with(&out.join("surrogate_density.csv"), |b| write_comparison_csv(&cmp, b))?;
    write_with(&out.join("mp_density.csv"), |b| {
        write_curve_csv(&model.density_curve(DEFAULT_CURVE_POINTS), b)
    })?;

    writeln!(stdout, "q,lambda_minus,lambda_plus,eigenvalues,fraction_inside,l1_distance").map_err(out_err)?;
    writeln!(
        stdout,
        "{},{},{},{},{},{}",
        fmt6(model.q),
        fmt6(model.lambda_minus),
        fmt6(model.lambda_plus),
        eigs.len(),
        fmt6(cmp.fraction_inside),
        fmt6(cmp.l1_distance)
    )
    .map_err(out_err)
}

/// Reads a window report written by `analyze`.
pub fn read_report(path: &Path) -> Result<WindowReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let report: WindowReport = serde_json::from_str(&text)
        .map_err(|e| Error::Analysis(format!("{} is not a window report: {e}", path.display())))?;
    report.check_consistency()?;
    Ok(report)
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let a = read_report(&args.a)?;
    let b = read_report(&args.b)?;
    let cmp = compare_vectors(&a.decomposition, &b.decomposition, args.rank, args.floor)?;
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    let path = out.join(format!(
        "compare_{}__{}_rank{}.csv",
        file_stem(&a.window.name),
        file_stem(&b.window.name),
        args.rank
    ));
    write_with(&path, |buf| cmp.write_csv(buf))?;
    writeln!(stdout, "rank,tickers,flipped,indeterminate,fraction_flipped").map_err(out_err)?;
    writeln!(
        stdout,
        "{},{},{},{},{}",
        cmp.rank,
        cmp.components.len(),
        cmp.flipped,
        cmp.indeterminate,
        fmt6(cmp.fraction_flipped)
    )
    .map_err(out_err)?;
    if cmp.flipped > 0 {
        writeln!(stdout, "flipped: {}", cmp.flipped_tickers().join(" ")).map_err(out_err)?;
    }
    Ok(())
}

pub fn cmd_align(args: &AlignArgs, stdout: &mut dyn Write) -> Result<()> {
    let raw = load_prices(&args.input)?;
    let aligned = align(&raw, args.theta)?;
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    write_with(&out.join("aligned_prices.csv"), |b| {
        aligned.write_csv(&mut *b).map_err(std::io::Error::other)
    })?;
    writeln!(
        stdout,
        "raw_dates,kept_dates,removed_dates,filled_cells,tickers\n{},{},{},{},{}",
        raw.dates().len(),
        aligned.len(),
        aligned.removed_dates().len(),
        aligned.fill_log().len(),
        aligned.tickers().len()
    )
    .map_err(out_err)
}
