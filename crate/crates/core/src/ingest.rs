//! Accident and exposure ingestion, aggregation into count windows, and
//! correlation of fatality and injury series.
//!
//! `accidents.csv` columns: `date,operator,category,fatalities,serious_injuries`.
//! `exposure.csv` columns: `operator,period_start,period_end,volume,unit`.
//! Dates are ISO-8601. All date ranges, including exposure periods, are
//! half-open `[start, end)`.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{domain, Result as CoreResult};
use crate::rate_ratio::{round_half_up, CountWindow};

pub const ACCIDENT_COLUMNS: [&str; 5] = ["date", "operator", "category", "fatalities", "serious_injuries"];
pub const EXPOSURE_COLUMNS: [&str; 5] = ["operator", "period_start", "period_end", "volume", "unit"];

/// Weight of a serious injury relative to a fatality.
pub const DEFAULT_FWSI_WEIGHT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate header column `{0}`")]
    DuplicateHeader(String),
    #[error("missing header column `{0}`")]
    MissingColumn(String),
    #[error("{} malformed row(s): {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Rows(Vec<RowError>),
    #[error("no exposure records for operator `{0}`")]
    UnknownOperator(String),
    #[error("exposure for `{operator}` does not cover {}", .gaps.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", "))]
    ExposureGap { operator: String, gaps: Vec<DateRange> },
    #[error(transparent)]
    Domain(#[from] crate::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccidentRecord {
    pub date: NaiveDate,
    pub operator: String,
    pub category: String,
    pub fatalities: u32,
    pub serious_injuries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub operator: String,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub volume: f64,
    pub unit: String,
}

/// Half-open date range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> CoreResult<Self> {
        if end <= start {
            return domain(format!("date range end {end} must be after start {start}"));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d < self.end
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days()
    }

    fn overlap_days(&self, other: &DateRange) -> i64 {
        let s = self.start.max(other.start);
        let e = self.end.min(other.end);
        (e - s).num_days().max(0)
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for DateRange {
    type Err = crate::Error;

    /// Parses `YYYY-MM-DD..YYYY-MM-DD`.
    fn from_str(s: &str) -> CoreResult<Self> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| crate::Error::Domain(format!("date range `{s}` must look like START..END")))?;
        let parse = |t: &str| {
            NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d")
                .map_err(|e| crate::Error::Domain(format!("bad date `{t}`: {e}")))
        };
        DateRange::new(parse(a)?, parse(b)?)
    }
}

/// What is counted in a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum Basis {
    Events,
    Fatalities,
    /// Fatalities plus `weight` × serious injuries.
    Fwsi { weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub window: CountWindow,
    /// Unrounded total; differs from `window.events` only for FWSI.
    pub raw_total: f64,
    pub basis: Basis,
    pub unit: String,
    pub records: usize,
}

fn header_index(headers: &csv::StringRecord, wanted: &[&str; 5]) -> Result<[usize; 5], IngestError> {
    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h.trim()) {
            return Err(IngestError::DuplicateHeader(h.trim().to_string()));
        }
    }
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(wanted) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
    }
    Ok(idx)
}

fn parse_date(field: &str, what: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(field.trim(), "%Y-%m-%d").map_err(|e| format!("{what} `{field}`: {e}"))
}

fn parse_count(field: &str, what: &str) -> Result<u32, String> {
    let v: i64 = field
        .trim()
        .parse()
        .map_err(|_| format!("{what} `{field}` is not an integer"))?;
    if v < 0 {
        return Err(format!("{what} must be non-negative, got {v}"));
    }
    u32::try_from(v).map_err(|_| format!("{what} {v} is too large"))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input)
}

/// Parses `accidents.csv`. Either every row parses or all row errors are
/// returned together.
pub fn parse_accidents<R: Read>(input: R) -> Result<Vec<AccidentRecord>, IngestError> {
    let mut rdr = reader(input);
    let idx = header_index(rdr.headers()?, &ACCIDENT_COLUMNS)?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<AccidentRecord, String> {
            let category = row[idx[2]].trim();
            if category.is_empty() {
                return Err("category is empty".into());
            }
            let operator = row[idx[1]].trim();
            if operator.is_empty() {
                return Err("operator is empty".into());
            }
            Ok(AccidentRecord {
                date: parse_date(&row[idx[0]], "date")?,
                operator: operator.to_string(),
                category: category.to_string(),
                fatalities: parse_count(&row[idx[3]], "fatalities")?,
                serious_injuries: parse_count(&row[idx[4]], "serious_injuries")?,
            })
        })();
        match parsed {
            Ok(r) => out.push(r),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(IngestError::Rows(errors))
    }
}

pub fn parse_exposures<R: Read>(input: R) -> Result<Vec<ExposureRecord>, IngestError> {
    let mut rdr = reader(input);
    let idx = header_index(rdr.headers()?, &EXPOSURE_COLUMNS)?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<ExposureRecord, String> {
            let period_start = parse_date(&row[idx[1]], "period_start")?;
            let period_end = parse_date(&row[idx[2]], "period_end")?;
            if period_end <= period_start {
                return Err(format!("period_end {period_end} must be after period_start {period_start}"));
            }
            let volume: f64 = row[idx[3]]
                .trim()
                .parse()
                .map_err(|_| format!("volume `{}` is not a number", &row[idx[3]]))?;
            if !(volume > 0.0) || !volume.is_finite() {
                return Err(format!("volume must be positive, got {volume}"));
            }
            let operator = row[idx[0]].trim();
            if operator.is_empty() {
                return Err("operator is empty".into());
            }
            Ok(ExposureRecord {
                operator: operator.to_string(),
                period_start,
                period_end,
                volume,
                unit: row[idx[4]].trim().to_string(),
            })
        })();
        match parsed {
            Ok(r) => out.push(r),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(IngestError::Rows(errors))
    }
}

fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_accidents(path: &Path) -> Result<Vec<AccidentRecord>, IngestError> {
    parse_accidents(open(path)?)
}

pub fn read_exposures(path: &Path) -> Result<Vec<ExposureRecord>, IngestError> {
    parse_exposures(open(path)?)
}

pub fn write_accidents<W: Write>(records: &[AccidentRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ACCIDENT_COLUMNS)?;
    for r in records {
        w.write_record([
            r.date.to_string(),
            r.operator.clone(),
            r.category.clone(),
            r.fatalities.to_string(),
            r.serious_injuries.to_string(),
        ])?;
    }
    w.flush().map_err(|e| IngestError::Csv(e.into()))?;
    Ok(())
}

/// Sub-ranges of `window` not covered by any of `periods`.
fn coverage_gaps(window: &DateRange, periods: &[DateRange]) -> Vec<DateRange> {
    let mut sorted: Vec<DateRange> = periods.to_vec();
    sorted.sort_by_key(|p| p.start);
    let mut gaps = Vec::new();
    let mut cursor = window.start;
    for p in sorted {
        if p.end <= cursor {
            continue;
        }
        if p.start >= window.end {
            break;
        }
        if p.start > cursor {
            gaps.push(DateRange {
                start: cursor,
                end: p.start.min(window.end),
            });
        }
        cursor = cursor.max(p.end);
        if cursor >= window.end {
            break;
        }
    }
    if cursor < window.end {
        gaps.push(DateRange {
            start: cursor,
            end: window.end,
        });
    }
    gaps
}

/// Counts matching accidents in `window` and pro-rates exposure linearly in
/// days. FWSI totals are rounded half-up for the count window; the
/// unrounded total is kept in [`Aggregate::raw_total`].
pub fn aggregate(
    records: &[AccidentRecord],
    exposures: &[ExposureRecord],
    window: &DateRange,
    operator: &str,
    category: Option<&str>,
    basis: Basis,
) -> Result<Aggregate, IngestError> {
    if let Basis::Fwsi { weight } = basis {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(crate::Error::Domain(format!("FWSI weight must be non-negative, got {weight}")).into());
        }
    }
    let own: Vec<&ExposureRecord> = exposures.iter().filter(|e| e.operator == operator).collect();
    if own.is_empty() {
        return Err(IngestError::UnknownOperator(operator.to_string()));
    }
    let periods: Vec<DateRange> = own
        .iter()
        .map(|e| DateRange {
            start: e.period_start,
            end: e.period_end,
        })
        .collect();
    let gaps = coverage_gaps(window, &periods);
    if !gaps.is_empty() {
        return Err(IngestError::ExposureGap {
            operator: operator.to_string(),
            gaps,
        });
    }
    let exposure: f64 = own
        .iter()
        .zip(&periods)
        .map(|(e, p)| e.volume * window.overlap_days(p) as f64 / p.days() as f64)
        .sum();
    let unit = own[0].unit.clone();

    let matching: Vec<&AccidentRecord> = records
        .iter()
        .filter(|r| r.operator == operator && window.contains(r.date))
        .filter(|r| category.is_none_or(|c| r.category.eq_ignore_ascii_case(c)))
        .collect();

    let (raw_total, events) = match basis {
        Basis::Events => (matching.len() as f64, matching.len() as u64),
        Basis::Fatalities => {
            let f: u64 = matching.iter().map(|r| u64::from(r.fatalities)).sum();
            (f as f64, f)
        }
        Basis::Fwsi { weight } => {
            let f: u64 = matching.iter().map(|r| u64::from(r.fatalities)).sum();
            let s: u64 = matching.iter().map(|r| u64::from(r.serious_injuries)).sum();
            let raw = f as f64 + weight * s as f64;
            (raw, round_half_up(raw, 0) as u64)
        }
    };

    Ok(Aggregate {
        window: CountWindow::new(events, exposure, window.to_string())?,
        raw_total,
        basis,
        unit,
        records: matching.len(),
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> CoreResult<f64> {
    if xs.len() != ys.len() {
        return domain(format!("series lengths differ: {} vs {}", xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return domain("correlation needs at least two pairs");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return domain("correlation is undefined for a constant series");
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
