//! Multichannel time series and their CSV form.
//!
//! CSV layout: header `t,ch0[,ch1,...]`, one row per time index, values
//! rounded to 9 significant digits. An empty cell marks a missing value.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Real-valued series with `c >= 1` channels of equal length `L >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn from_channels(channels: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::Input("series needs at least one channel".into()));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::Input("series needs at least one sample".into()));
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != len {
                return Err(Error::Shape {
                    expected: format!("{len} samples"),
                    got: format!("{} samples in channel {i}", ch.len()),
                });
            }
            if let Some(k) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::Input(format!(
                    "non-finite value {} at channel {i}, index {k}",
                    ch[k]
                )));
            }
        }
        Ok(Self { channels })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_channels(vec![values])
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Single-channel convenience accessor.
    pub fn values(&self) -> &[f64] {
        &self.channels[0]
    }
}

/// Per-point missingness flags (`true` = missing), same shape as a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    flags: Vec<Vec<bool>>,
}

impl MissingMask {
    pub fn new(flags: Vec<Vec<bool>>) -> Self {
        Self { flags }
    }

    pub fn none(channels: usize, len: usize) -> Self {
        Self {
            flags: vec![vec![false; len]; channels],
        }
    }

    pub fn channel(&self, i: usize) -> &[bool] {
        &self.flags[i]
    }

    pub fn is_missing(&self, channel: usize, k: usize) -> bool {
        self.flags[channel][k]
    }

    pub fn n_channels(&self) -> usize {
        self.flags.len()
    }

    pub fn count(&self) -> usize {
        self.flags.iter().flatten().filter(|m| **m).count()
    }

    pub fn any(&self) -> bool {
        self.flags.iter().flatten().any(|m| *m)
    }

    pub fn density(&self) -> f64 {
        let total: usize = self.flags.iter().map(Vec::len).sum();
        if total == 0 {
            0.0
        } else {
            self.count() as f64 / total as f64
        }
    }
}

/// A series as observed, possibly with missing points. Missing points carry
/// the last valid value (or the first valid one for a leading gap).
#[derive(Debug, Clone, PartialEq)]
pub struct Observed {
    pub series: TimeSeries,
    pub missing: Option<MissingMask>,
}

impl Observed {
    pub fn complete(series: TimeSeries) -> Self {
        Self {
            series,
            missing: None,
        }
    }
}

/// Fills `None` entries with the previous valid value; a leading gap takes
/// the first valid value, an all-missing channel becomes zeros.
pub fn carry_forward(values: &[Option<f64>]) -> Vec<f64> {
    let first = values.iter().flatten().next().copied().unwrap_or(0.0);
    let mut last = first;
    values
        .iter()
        .map(|v| {
            if let Some(x) = v {
                last = *x;
            }
            last
        })
        .collect()
}

/// Rounds to 9 significant digits and renders with `.` as decimal separator.
pub fn format_sig9(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded:?}")
    }
}

pub fn write_csv<W: Write>(out: W, series: &TimeSeries, missing: Option<&MissingMask>) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    write!(w, "t")?;
    for i in 0..series.n_channels() {
        write!(w, ",ch{i}")?;
    }
    writeln!(w)?;
    for k in 0..series.len() {
        write!(w, "{k}")?;
        for (i, ch) in series.channels().iter().enumerate() {
            if missing.is_some_and(|m| m.is_missing(i, k)) {
                write!(w, ",")?;
            } else {
                write!(w, ",{}", format_sig9(ch[k]))?;
            }
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_csv_file(path: &Path, series: &TimeSeries, missing: Option<&MissingMask>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(f, series, missing).map_err(|e| Error::io(path, e))
}

const INDEX_COLUMNS: [&str; 5] = ["t", "date", "time", "timestamp", "index"];

/// Reads a multichannel CSV. The first column is treated as an index and
/// dropped when its header is a conventional index name or its cells are
/// not numeric (e.g. ETT-style `date` columns).
pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Observed> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in rdr.records() {
        rows.push(rec.map_err(|e| Error::format(path, e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }
    let first_header = headers.get(0).unwrap_or("").trim().to_ascii_lowercase();
    let first_numeric = rows.iter().all(|r| r.get(0).is_some_and(|c| c.trim().parse::<f64>().is_ok()));
    let skip = usize::from(INDEX_COLUMNS.contains(&first_header.as_str()) || !first_numeric);
    let n_ch = headers.len().saturating_sub(skip);
    if n_ch == 0 {
        return Err(Error::format(path, "no value columns"));
    }
    let mut raw: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows.len()); n_ch];
    for (line, rec) in rows.iter().enumerate() {
        if rec.len() != headers.len() {
            return Err(Error::format(path, format!("row {} has {} fields, expected {}", line + 2, rec.len(), headers.len())));
        }
        for (c, col) in raw.iter_mut().enumerate() {
            let cell = rec.get(c + skip).unwrap_or("").trim();
            if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                col.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::format(path, format!("row {}: `{cell}` is not a number", line + 2)))?;
                if !v.is_finite() {
                    return Err(Error::format(path, format!("row {}: non-finite value", line + 2)));
                }
                col.push(Some(v));
            }
        }
    }
    let flags: Vec<Vec<bool>> = raw.iter().map(|c| c.iter().map(Option::is_none).collect()).collect();
    let mask = MissingMask::new(flags);
    let values: Vec<Vec<f64>> = raw.iter().map(|c| carry_forward(c)).collect();
    let series = TimeSeries::from_channels(values).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(Observed {
        series,
        missing: mask.any().then_some(mask),
    })
}

pub fn read_csv_file(path: &Path) -> Result<Observed> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, path)
}
