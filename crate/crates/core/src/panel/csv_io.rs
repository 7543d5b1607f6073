use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::TimeSeriesPanel;
use crate::{Error, Result};

/// Maps a CSV column onto a panel variable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub column: String,
    pub name: String,
}

/// How to read a panel CSV.
#[derive(Debug, Clone)]
pub struct LoadSchema {
    pub timestamp_column: String,
    /// Columns to load. Empty means every non-timestamp column under its own name.
    pub variables: Vec<ColumnMap>,
    pub resolution_seconds: u32,
    /// Subject id for the panel; defaults to the file stem in [`load_panel`].
    pub subject_id: Option<String>,
}

impl LoadSchema {
    pub fn new(resolution_seconds: u32) -> Self {
        Self {
            timestamp_column: "timestamp".into(),
            variables: Vec::new(),
            resolution_seconds,
            subject_id: None,
        }
    }

    pub fn with_variables<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.variables = names
            .into_iter()
            .map(|n| {
                let n = n.into();
                ColumnMap {
                    column: n.clone(),
                    name: n,
                }
            })
            .collect();
        self
    }
}

impl Default for LoadSchema {
    fn default() -> Self {
        Self::new(60)
    }
}

pub fn load_panel(path: impl AsRef<Path>, schema: &LoadSchema) -> Result<TimeSeriesPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let panel = read_panel(file, schema)?;
    match &schema.subject_id {
        Some(_) => Ok(panel),
        None => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(panel.with_subject_id(stem))
        }
    }
}

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC; naive
/// timestamps are taken to be UTC already.
fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    NAIVE
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|t| t.and_utc())
}

fn parse_value(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na") {
        return Some(f64::NAN);
    }
    s.parse().ok()
}

/// Reads a panel from CSV.
///
/// Rows are sorted by timestamp and placed on a grid of
/// `schema.resolution_seconds` starting at the earliest timestamp; grid slots
/// without a row become all-missing.
pub fn read_panel<R: Read>(reader: R, schema: &LoadSchema) -> Result<TimeSeriesPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyInput("no header row".into()));
    }
    let ts_idx = headers
        .iter()
        .position(|h| h == schema.timestamp_column)
        .ok_or_else(|| Error::Argument(format!("missing `{}` column", schema.timestamp_column)))?;
    let mapping: Vec<(usize, String)> = if schema.variables.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != ts_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect()
    } else {
        schema
            .variables
            .iter()
            .map(|m| {
                headers
                    .iter()
                    .position(|h| h == m.column)
                    .map(|i| (i, m.name.clone()))
                    .ok_or_else(|| Error::Argument(format!("missing `{}` column", m.column)))
            })
            .collect::<Result<_>>()?
    };
    if mapping.is_empty() {
        return Err(Error::Argument("schema selects no variable columns".into()));
    }

    let mut rows: Vec<(DateTime<Utc>, Vec<f64>)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw_ts = record.get(ts_idx).unwrap_or("");
        let ts = parse_timestamp(raw_ts).ok_or_else(|| Error::Parse {
            row,
            message: format!("malformed timestamp `{raw_ts}`"),
        })?;
        let values = mapping
            .iter()
            .map(|(col, name)| {
                let raw = record.get(*col).unwrap_or("");
                parse_value(raw).ok_or_else(|| Error::Parse {
                    row,
                    message: format!("column `{name}`: cannot parse `{raw}` as a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((ts, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no data rows".into()));
    }

    rows.sort_by_key(|(ts, _)| *ts);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Integrity(format!("duplicate timestamp {}", w[0].0)));
    }

    let res = schema.resolution_seconds as i64;
    if res <= 0 {
        return Err(Error::Argument("resolution must be positive".into()));
    }
    let start = rows[0].0;
    let span = (rows[rows.len() - 1].0 - start).num_seconds();
    let len = (span / res + 1) as usize;
    let mut columns = vec![vec![f64::NAN; len]; mapping.len()];
    for (ts, values) in rows {
        let offset = (ts - start).num_seconds();
        if offset % res != 0 || (ts - start).subsec_nanos() != 0 {
            return Err(Error::Integrity(format!(
                "timestamp {ts} is not on the {res}s grid starting at {start}"
            )));
        }
        let t = (offset / res) as usize;
        for (col, v) in columns.iter_mut().zip(values) {
            col[t] = v;
        }
    }
    let names = mapping.into_iter().map(|(_, n)| n).collect();
    TimeSeriesPanel::new(
        schema.subject_id.clone().unwrap_or_default(),
        start,
        schema.resolution_seconds,
        names,
        columns,
    )
}

/// Writes the panel in the same CSV layout [`read_panel`] accepts.
pub fn write_panel<W: Write>(panel: &TimeSeriesPanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string()];
    header.extend(panel.variable_names().iter().cloned());
    wtr.write_record(&header)?;
    for t in 0..panel.len() {
        let mut record = vec![panel.timestamp(t).format("%Y-%m-%dT%H:%M:%SZ").to_string()];
        record.extend(panel.columns().iter().map(|c| {
            let v = c[t];
            if v.is_nan() {
                String::new()
            } else {
                v.to_string()
            }
        }));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<panel csv>", e))?;
    Ok(())
}
