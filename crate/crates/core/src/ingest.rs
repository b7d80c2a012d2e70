//! Smart-meter CSV ingestion, daily resampling and synthetic data.
//!
//! Long input format, one reading per row:
//!
//! ```text
//! customer_id,timestamp,kwh
//! C001,2012-07-01 00:30,0.25
//! ```
//!
//! Timestamps are local, timezone-naive; a reading belongs to the calendar
//! date of its timestamp. The wide format has `customer_id` followed by one
//! column per slot, headed `YYYY-MM-DDTHH:MM`; empty cells are absent
//! readings.
//!
//! The daily table written and read by [`write_daily_csv`] and
//! [`read_daily_csv`] has header `customer_id,date,kwh`, one row per customer
//! and day, with an empty `kwh` for a missing day.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveDateTime};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Bounds, EvolvingDataset};
use crate::error::{Error, Result};
use crate::format::format_sig;
use crate::rng;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M";
pub const WIDE_SLOT_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq)]
pub struct RawReading {
    pub customer_id: String,
    pub timestamp: NaiveDateTime,
    pub kwh: f64,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, reason: e.to_string() }
}

fn parse_kwh(raw: &str, line: u64) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("kwh {raw:?} is not a number"),
    })?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Parse { line, reason: format!("kwh {raw:?} must be finite and >= 0") });
    }
    Ok(v)
}

fn expect_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let ok = found.len() == expected.len()
        && found.iter().zip(expected).all(|(a, b)| a.trim() == *b);
    if ok {
        Ok(())
    } else {
        Err(Error::Parse {
            line: 1,
            reason: format!("expected header {:?}, found {:?}", expected.join(","), found.iter().collect::<Vec<_>>().join(",")),
        })
    }
}

/// Rejects a second reading for the same customer and timestamp.
struct DuplicateGuard(HashSet<(String, NaiveDateTime)>);

impl DuplicateGuard {
    fn new() -> Self {
        Self(HashSet::new())
    }

    fn check(&mut self, r: &RawReading, line: u64) -> Result<()> {
        if self.0.insert((r.customer_id.clone(), r.timestamp)) {
            Ok(())
        } else {
            Err(Error::DuplicateReading {
                line,
                customer: r.customer_id.clone(),
                timestamp: r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            })
        }
    }
}

pub fn parse_long_csv(path: &Path) -> Result<Vec<RawReading>> {
    parse_long_reader(open(path)?)
}

pub fn parse_long_reader<R: Read>(reader: R) -> Result<Vec<RawReading>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    expect_header(rdr.headers().map_err(csv_error)?, &["customer_id", "timestamp", "kwh"])?;
    let mut seen = DuplicateGuard::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let customer_id = rec[0].trim().to_string();
        if customer_id.is_empty() {
            return Err(Error::Parse { line, reason: "empty customer_id".into() });
        }
        let timestamp = NaiveDateTime::parse_from_str(rec[1].trim(), TIMESTAMP_FORMAT).map_err(|e| {
            Error::Parse { line, reason: format!("timestamp {:?}: {e}", &rec[1]) }
        })?;
        let kwh = parse_kwh(&rec[2], line)?;
        let reading = RawReading { customer_id, timestamp, kwh };
        seen.check(&reading, line)?;
        out.push(reading);
    }
    Ok(out)
}

pub fn parse_wide_csv(path: &Path) -> Result<Vec<RawReading>> {
    parse_wide_reader(open(path)?)
}

/// Converts the wide layout (one row per customer, one column per slot) to readings.
pub fn parse_wide_reader<R: Read>(reader: R) -> Result<Vec<RawReading>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0).map(str::trim) != Some("customer_id") {
        return Err(Error::Parse { line: 1, reason: "first column must be customer_id".into() });
    }
    let slots = headers
        .iter()
        .skip(1)
        .map(|h| {
            NaiveDateTime::parse_from_str(h.trim(), WIDE_SLOT_FORMAT)
                .map_err(|e| Error::Parse { line: 1, reason: format!("slot header {h:?}: {e}") })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen = DuplicateGuard::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let customer_id = rec[0].trim().to_string();
        if customer_id.is_empty() {
            return Err(Error::Parse { line, reason: "empty customer_id".into() });
        }
        for (cell, &timestamp) in rec.iter().skip(1).zip(&slots) {
            if cell.trim().is_empty() {
                continue;
            }
            let reading = RawReading { customer_id: customer_id.clone(), timestamp, kwh: parse_kwh(cell, line)? };
            seen.check(&reading, line)?;
            out.push(reading);
        }
    }
    Ok(out)
}

/// Writes readings in the long format, with values in shortest round-trip form.
pub fn write_long_csv<W: Write>(writer: W, readings: &[RawReading]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["customer_id", "timestamp", "kwh"]).map_err(csv_error)?;
    for r in readings {
        w.write_record([
            r.customer_id.as_str(),
            &r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            &r.kwh.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

/// Customer × day table. `values[i][j]` is customer `i` on day `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyTable {
    pub customers: Vec<String>,
    pub days: Vec<NaiveDate>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl DailyTable {
    pub fn get(&self, customer: usize, day: usize) -> Option<f64> {
        self.values[customer][day]
    }
}

/// One value per (customer, day) over the union of days seen in `readings`.
pub fn resample_daily(readings: &[RawReading], agg: Aggregation) -> Result<DailyTable> {
    if readings.is_empty() {
        return Err(Error::InvalidParameter("no readings to resample".into()));
    }
    let mut groups: BTreeMap<(&str, NaiveDate), (f64, usize)> = BTreeMap::new();
    let mut days = BTreeSet::new();
    let mut customers = BTreeSet::new();
    for r in readings {
        let day = r.timestamp.date();
        days.insert(day);
        customers.insert(r.customer_id.as_str());
        let g = groups.entry((r.customer_id.as_str(), day)).or_insert((0.0, 0));
        g.0 += r.kwh;
        g.1 += 1;
    }
    let days: Vec<NaiveDate> = days.into_iter().collect();
    let values = customers
        .iter()
        .map(|c| {
            days.iter()
                .map(|d| {
                    groups.get(&(*c, *d)).map(|&(sum, count)| match agg {
                        Aggregation::Sum => sum,
                        Aggregation::Mean => sum / count as f64,
                    })
                })
                .collect()
        })
        .collect();
    Ok(DailyTable { customers: customers.into_iter().map(str::to_string).collect(), days, values })
}

/// Builds the dataset with rows in sorted customer order and one column per
/// day of `date_range` (inclusive; defaults to the table's first to last
/// day). Days absent from the table become all-missing columns.
pub fn to_evolving_dataset(
    table: &DailyTable,
    bounds: Bounds,
    date_range: Option<(NaiveDate, NaiveDate)>,
) -> Result<EvolvingDataset> {
    let (first, last) = match date_range {
        Some(r) => r,
        None => match (table.days.first(), table.days.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::InvalidParameter("daily table has no days".into())),
        },
    };
    if last < first {
        return Err(Error::InvalidParameter(format!("empty date range {first}..{last}")));
    }
    let mut order: Vec<usize> = (0..table.customers.len()).collect();
    order.sort_by(|&a, &b| table.customers[a].cmp(&table.customers[b]));
    let day_index: BTreeMap<NaiveDate, usize> =
        table.days.iter().enumerate().map(|(j, d)| (*d, j)).collect();

    let mut ds = EvolvingDataset::new(table.customers.len(), bounds)?.with_start_date(first);
    let mut day = first;
    while day <= last {
        let column: Vec<Option<f64>> = match day_index.get(&day) {
            Some(&j) => order.iter().map(|&i| table.values[i][j]).collect(),
            None => vec![None; order.len()],
        };
        for (&i, v) in order.iter().zip(&column) {
            if let Some(v) = *v {
                if !bounds.contains(v) {
                    return Err(Error::ReadingOutOfBounds {
                        customer: table.customers[i].clone(),
                        day: day.format(DATE_FORMAT).to_string(),
                        value: v,
                        lo: bounds.lo,
                        hi: bounds.hi,
                    });
                }
            }
        }
        ds.append_column(column)?;
        day = day + Days::new(1);
    }
    Ok(ds)
}

pub fn write_daily_csv<W: Write>(writer: W, table: &DailyTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["customer_id", "date", "kwh"]).map_err(csv_error)?;
    for (i, c) in table.customers.iter().enumerate() {
        for (j, d) in table.days.iter().enumerate() {
            let v = table.values[i][j].map(|v| format_sig(v, 9)).unwrap_or_default();
            w.write_record([c.as_str(), &d.format(DATE_FORMAT).to_string(), &v]).map_err(csv_error)?;
        }
    }
    w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })
}

pub fn read_daily_csv(path: &Path) -> Result<DailyTable> {
    read_daily_reader(open(path)?)
}

pub fn read_daily_reader<R: Read>(reader: R) -> Result<DailyTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    expect_header(rdr.headers().map_err(csv_error)?, &["customer_id", "date", "kwh"])?;
    let mut cells: BTreeMap<(String, NaiveDate), Option<f64>> = BTreeMap::new();
    let mut days = BTreeSet::new();
    let mut customers = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let customer = rec[0].trim().to_string();
        let day = NaiveDate::parse_from_str(rec[1].trim(), DATE_FORMAT)
            .map_err(|e| Error::Parse { line, reason: format!("date {:?}: {e}", &rec[1]) })?;
        let value = if rec[2].trim().is_empty() { None } else { Some(parse_kwh(&rec[2], line)?) };
        days.insert(day);
        customers.insert(customer.clone());
        if cells.insert((customer.clone(), day), value).is_some() {
            return Err(Error::DuplicateReading { line, customer, timestamp: day.to_string() });
        }
    }
    let days: Vec<NaiveDate> = days.into_iter().collect();
    let customers: Vec<String> = customers.into_iter().collect();
    let values = customers
        .iter()
        .map(|c| days.iter().map(|d| cells.get(&(c.clone(), *d)).copied().flatten()).collect())
        .collect();
    Ok(DailyTable { customers, days, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub days: usize,
    pub seed: u64,
    /// Mean daily consumption before seasonality.
    pub base_load: f64,
    /// Relative amplitude of the yearly sine.
    pub seasonal_amplitude: f64,
    /// Standard deviation of the per-household offset.
    pub offset_sd: f64,
    /// Standard deviation of the day-to-day noise.
    pub noise_sd: f64,
    pub bounds: Bounds,
    pub start_date: NaiveDate,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 300,
            days: 365,
            seed: 42,
            base_load: 20.0,
            seasonal_amplitude: 0.3,
            offset_sd: 6.0,
            noise_sd: 4.0,
            bounds: Bounds::default(),
            start_date: NaiveDate::from_ymd_opt(2012, 7, 1).expect("valid date"),
        }
    }
}

const SYNTH_STREAM_TAG: u32 = 0x5359;

fn normal_draws(sd: f64, count: usize, rng: &mut rng::StreamRng) -> Result<Vec<f64>> {
    if sd == 0.0 {
        return Ok(vec![0.0; count]);
    }
    let dist = Normal::new(0.0, sd)
        .map_err(|e| Error::InvalidParameter(format!("standard deviation {sd}: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Synthetic daily table: household `i` on day `d` (0-based) gets
/// `base·(1 + amp·sin(2πd/365)) + offset_i + noise_{i,d}`, clipped to bounds.
pub fn gen_synthetic_table(cfg: &SyntheticConfig) -> Result<DailyTable> {
    if cfg.n == 0 || cfg.days == 0 {
        return Err(Error::InvalidParameter("n and days must be at least 1".into()));
    }
    if !(cfg.offset_sd >= 0.0 && cfg.noise_sd >= 0.0) {
        return Err(Error::InvalidParameter("standard deviations must be >= 0".into()));
    }
    let offsets = normal_draws(cfg.offset_sd, cfg.n, &mut rng::stream(cfg.seed, rng::stream_id(SYNTH_STREAM_TAG, 0)))?;
    let mut noise_rng = rng::stream(cfg.seed, rng::stream_id(SYNTH_STREAM_TAG, 1));
    let mut values = vec![Vec::with_capacity(cfg.days); cfg.n];
    for d in 0..cfg.days {
        let season = cfg.base_load * (1.0 + cfg.seasonal_amplitude * (2.0 * PI * d as f64 / 365.0).sin());
        let noise = normal_draws(cfg.noise_sd, cfg.n, &mut noise_rng)?;
        for (i, row) in values.iter_mut().enumerate() {
            let v = (season + offsets[i] + noise[i]).clamp(cfg.bounds.lo, cfg.bounds.hi);
            row.push(Some(v));
        }
    }
    let width = cfg.n.to_string().len().max(4);
    let customers = (1..=cfg.n).map(|i| format!("C{i:0width$}")).collect();
    let days = (0..cfg.days as u64)
        .map(|d| {
            cfg.start_date
                .checked_add_days(Days::new(d))
                .ok_or_else(|| Error::InvalidParameter("date range overflows".into()))
        })
        .collect::<Result<_>>()?;
    Ok(DailyTable { customers, days, values })
}

pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<EvolvingDataset> {
    to_evolving_dataset(&gen_synthetic_table(cfg)?, cfg.bounds, None)
}
