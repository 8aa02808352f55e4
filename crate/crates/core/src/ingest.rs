//! Loading daily closing-price tables, calendar filtering with forward fill,
//! and slicing the aligned panel into named windows.
//!
//! The input is a wide table: the first column is `date` (`YYYY-MM-DD`) and
//! every further column holds one ticker's closing prices. An empty cell or
//! the token `NA` marks a market that did not trade on that date.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Date format used for every date column and window bound.
pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Default removal threshold: drop a date when at least this fraction of
/// markets is closed.
pub const DEFAULT_THETA: f64 = 0.30;

const PAPER_2008: &str = include_str!("../config/paper-2008.json");

/// Raw closing prices, one row per calendar date, with explicit gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl PricePanel {
    /// Builds a panel, sorting rows by date and checking the invariants
    /// (unique dates, unique tickers, rectangular table, positive prices).
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if dates.len() != rows.len() {
            return Err(Error::Ingest(format!(
                "{} dates but {} price rows",
                dates.len(),
                rows.len()
            )));
        }
        check_tickers(&tickers)?;
        for (date, row) in dates.iter().zip(&rows) {
            if row.len() != tickers.len() {
                return Err(Error::Ingest(format!(
                    "row {date} has {} prices, expected {}",
                    row.len(),
                    tickers.len()
                )));
            }
            if row.iter().flatten().any(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::Ingest(format!("row {date} holds a non-positive price")));
            }
        }
        let mut order: Vec<usize> = (0..dates.len()).collect();
        order.sort_by_key(|&i| dates[i]);
        for pair in order.windows(2) {
            if dates[pair[0]] == dates[pair[1]] {
                return Err(Error::DuplicateDate {
                    date: dates[pair[0]].format(DATE_FORMAT).to_string(),
                    line: 0,
                });
            }
        }
        let sorted_dates = order.iter().map(|&i| dates[i]).collect();
        let mut rows = rows.into_iter().map(Some).collect::<Vec<_>>();
        let sorted_rows = order.iter().map(|&i| rows[i].take().unwrap()).collect();
        Ok(Self {
            dates: sorted_dates,
            tickers,
            rows: sorted_rows,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// Row-major table: `rows()[t][i]` is ticker `i` on date `t`.
    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn get(&self, date_index: usize, ticker_index: usize) -> Option<f64> {
        self.rows[date_index][ticker_index]
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|p| p.is_none()).count()
    }
}

/// A dense panel: every cell holds a positive price.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    rows: Vec<Vec<f64>>,
    fill_log: Vec<FilledCell>,
    removed: Vec<NaiveDate>,
}

/// A cell that was missing in the raw panel and received the ticker's most
/// recent earlier closing price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledCell {
    pub date: NaiveDate,
    pub ticker: String,
}

impl AlignedPanel {
    /// Builds a dense panel directly, e.g. from simulated prices.
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let raw = rows
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect();
        let panel = PricePanel::new(dates, tickers, raw)?;
        Ok(Self {
            dates: panel.dates,
            tickers: panel.tickers,
            rows: panel
                .rows
                .into_iter()
                .map(|r| r.into_iter().map(|p| p.unwrap()).collect())
                .collect(),
            fill_log: Vec::new(),
            removed: Vec::new(),
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Prices of one ticker in date order.
    pub fn column(&self, ticker_index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[ticker_index]).collect()
    }

    pub fn fill_log(&self) -> &[FilledCell] {
        &self.fill_log
    }

    /// Raw dates dropped by the threshold rule or for lack of a prior price.
    pub fn removed_dates(&self) -> &[NaiveDate] {
        &self.removed
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Writes the panel in the same wide format `load_prices` reads.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("date").chain(self.tickers.iter().map(String::as_str));
        w.write_record(header).map_err(csv_io)?;
        for (date, row) in self.dates.iter().zip(&self.rows) {
            let mut record = vec![date.format(DATE_FORMAT).to_string()];
            record.extend(row.iter().map(|p| p.to_string()));
            w.write_record(&record).map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::Ingest(e.to_string()))
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Ingest(e.to_string())
}

fn check_tickers(tickers: &[String]) -> Result<()> {
    if tickers.is_empty() {
        return Err(Error::Ingest("panel has no tickers".into()));
    }
    let mut seen = HashSet::new();
    for t in tickers {
        if t.trim().is_empty() {
            return Err(Error::Ingest("empty ticker name".into()));
        }
        if !seen.insert(t.as_str()) {
            return Err(Error::Ingest(format!("duplicate ticker '{t}'")));
        }
    }
    Ok(())
}

/// Reads a price table from disk.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PricePanel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_prices(&text)
}

/// Parses a price table from text. The delimiter (comma, tab, or semicolon)
/// is taken from the header line.
pub fn parse_prices(text: &str) -> Result<PricePanel> {
    let header_line = text.lines().find(|l| !l.trim().is_empty()).ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let delimiter = b",\t;"
        .iter()
        .copied()
        .find(|d| header_line.as_bytes().contains(d))
        .unwrap_or(b',');

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_error(&e, "unreadable header")),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let header_line_no = header.position().map_or(1, |p| p.line());
    let first = header.get(0).unwrap_or("").trim_start_matches('\u{feff}');
    if !first.eq_ignore_ascii_case("date") {
        return Err(Error::Parse {
            line: header_line_no,
            message: format!("malformed header: first column must be 'date', found '{first}'"),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if tickers.is_empty() {
        return Err(Error::Parse {
            line: header_line_no,
            message: "malformed header: no ticker columns".into(),
        });
    }
    check_tickers(&tickers).map_err(|e| Error::Parse {
        line: header_line_no,
        message: format!("malformed header: {}", e.to_string().trim_start_matches("ingest: ")),
    })?;

    let mut dates = Vec::new();
    let mut rows = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for record in records {
        let record = record.map_err(|e| parse_error(&e, "unreadable row"))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != tickers.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    tickers.len() + 1,
                    record.len()
                ),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], DATE_FORMAT).map_err(|_| Error::Parse {
            line,
            message: format!("invalid date '{}'", &record[0]),
        })?;
        if seen.insert(date, line).is_some() {
            return Err(Error::DuplicateDate {
                date: date.format(DATE_FORMAT).to_string(),
                line,
            });
        }
        let row = record.iter().skip(1).map(parse_cell).collect();
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(Error::Parse {
            line: header_line_no,
            message: "no data rows".into(),
        });
    }
    PricePanel::new(dates, tickers, rows)
}

fn parse_error(e: &csv::Error, what: &str) -> Error {
    Error::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: format!("{what}: {e}"),
    }
}

/// Empty, `NA`, unparseable, non-finite, and non-positive cells are missing.
fn parse_cell(cell: &str) -> Option<f64> {
    if cell.is_empty() || cell == "NA" {
        return None;
    }
    cell.parse::<f64>().ok().filter(|p| p.is_finite() && *p > 0.0)
}

/// Removes dates on which the fraction of closed markets is at least `theta`
/// and forward-fills the remaining gaps with each ticker's last closing price.
///
/// A date with no missing cells is always kept. Leading dates on which some
/// ticker has not yet traded are dropped for the whole panel; nothing is
/// back-filled.
pub fn align(panel: &PricePanel, theta: f64) -> Result<AlignedPanel> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Ingest(format!("theta must lie in [0, 1], got {theta}")));
    }
    if panel.dates.is_empty() {
        return Err(Error::Ingest("panel has no dates".into()));
    }
    let n = panel.tickers.len();
    for (j, ticker) in panel.tickers.iter().enumerate() {
        if panel.rows.iter().all(|r| r[j].is_none()) {
            return Err(Error::TickerAllMissing(ticker.clone()));
        }
    }

    let mut last: Vec<Option<f64>> = vec![None; n];
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    let mut fill_log = Vec::new();
    let mut removed = Vec::new();
    for (date, raw) in panel.dates.iter().zip(&panel.rows) {
        let missing = raw.iter().filter(|p| p.is_none()).count();
        let closed_fraction = missing as f64 / n as f64;
        // Tolerance keeps e.g. 3/10 >= 0.30 exact in decimal terms.
        let keep = missing == 0 || closed_fraction < theta - 1e-12;

        let mut row = Vec::with_capacity(n);
        let mut filled = Vec::new();
        for (j, cell) in raw.iter().enumerate() {
            match (cell, last[j]) {
                (Some(p), _) => row.push(*p),
                (None, Some(prev)) => {
                    row.push(prev);
                    filled.push(j);
                }
                (None, None) => {}
            }
        }
        for (j, cell) in raw.iter().enumerate() {
            if cell.is_some() {
                last[j] = *cell;
            }
        }
        if keep && row.len() == n {
            fill_log.extend(filled.into_iter().map(|j| FilledCell {
                date: *date,
                ticker: panel.tickers[j].clone(),
            }));
            dates.push(*date);
            rows.push(row);
        } else {
            removed.push(*date);
        }
    }
    if dates.is_empty() {
        return Err(Error::Ingest("no dates survive alignment".into()));
    }
    Ok(AlignedPanel {
        dates,
        tickers: panel.tickers.clone(),
        rows,
        fill_log,
        removed,
    })
}

/// A named, inclusive date range analyzed on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl WindowSpec {
    pub fn new(name: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let w = Self {
            name: name.into(),
            start,
            end,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("window name is empty".into()));
        }
        if self.start > self.end {
            return Err(Error::Config(format!(
                "window '{}' starts after it ends",
                self.name
            )));
        }
        Ok(())
    }
}

/// Checks a window list: non-empty, every window well-formed, names unique.
pub fn validate_windows(windows: &[WindowSpec]) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::Config("no windows configured".into()));
    }
    let mut names = HashSet::new();
    for w in windows {
        w.validate()?;
        if !names.insert(w.name.as_str()) {
            return Err(Error::Config(format!("duplicate window name '{}'", w.name)));
        }
    }
    Ok(())
}

/// Parses a JSON list of `{name, start, end}` objects.
pub fn parse_windows(json: &str) -> Result<Vec<WindowSpec>> {
    let windows: Vec<WindowSpec> =
        serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
    validate_windows(&windows)?;
    Ok(windows)
}

/// The before/during/after windows around the 2008 crisis (`paper-2008`).
pub fn paper_2008_windows() -> Vec<WindowSpec> {
    #[derive(Deserialize)]
    struct Bundled {
        windows: Vec<WindowSpec>,
    }
    let bundled: Bundled = serde_json::from_str(PAPER_2008).expect("bundled configuration parses");
    validate_windows(&bundled.windows).expect("bundled windows are valid");
    bundled.windows
}

/// Text of the bundled `paper-2008` run configuration.
pub fn paper_2008_config() -> &'static str {
    PAPER_2008
}

/// First window containing `date`, if any.
pub fn window_containing(windows: &[WindowSpec], date: NaiveDate) -> Option<&WindowSpec> {
    windows.iter().find(|w| w.contains(date))
}

/// Restricts the panel to `w.start <= date <= w.end`.
pub fn slice_window(panel: &AlignedPanel, w: &WindowSpec) -> Result<AlignedPanel> {
    let keep: Vec<usize> = (0..panel.dates.len())
        .filter(|&t| w.contains(panel.dates[t]))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyWindow(w.name.clone()));
    }
    Ok(AlignedPanel {
        dates: keep.iter().map(|&t| panel.dates[t]).collect(),
        tickers: panel.tickers.clone(),
        rows: keep.iter().map(|&t| panel.rows[t].clone()).collect(),
        fill_log: panel
            .fill_log
            .iter()
            .filter(|c| w.contains(c.date))
            .cloned()
            .collect(),
        removed: panel
            .removed
            .iter()
            .copied()
            .filter(|d| w.contains(*d))
            .collect(),
    })
}
