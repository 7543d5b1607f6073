//! Aligned multivariate sensor panels.
//!
//! A [`TimeSeriesPanel`] holds `T` equally spaced rows of `d` variables for one
//! subject. Missing observations are stored as `NaN` and are never imputed;
//! downstream consumers drop affected rows instead (see [`build_lagged_matrix`]).

mod csv_io;
mod lagged;

use chrono::{DateTime, Duration, Utc};

use crate::{Error, Result};

pub use csv_io::{load_panel, read_panel, write_panel, ColumnMap, LoadSchema};
pub use lagged::{build_lagged_matrix, LaggedSampleMatrix};
pub(crate) use lagged::lagged_columns;

/// Names of the particle-count channels summed into [`BINS_SUM`].
pub const BIN_COLUMNS: [&str; 7] = ["bin0", "bin1", "bin2", "bin3", "bin4", "bin5", "bin6"];

/// Name of the derived column holding the sum of `bin0..bin6`.
pub const BINS_SUM: &str = "bins_sum";

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    subject_id: String,
    start_time: DateTime<Utc>,
    resolution_seconds: u32,
    variable_names: Vec<String>,
    /// One column per variable, each of length `T`. `NaN` marks a missing value.
    columns: Vec<Vec<f64>>,
}

impl TimeSeriesPanel {
    pub fn new(
        subject_id: impl Into<String>,
        start_time: DateTime<Utc>,
        resolution_seconds: u32,
        variable_names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if resolution_seconds == 0 {
            return Err(Error::Argument("resolution must be positive".into()));
        }
        if variable_names.len() != columns.len() {
            return Err(Error::Argument(format!(
                "{} variable names for {} columns",
                variable_names.len(),
                columns.len()
            )));
        }
        for (i, name) in variable_names.iter().enumerate() {
            if variable_names[..i].contains(name) {
                return Err(Error::Integrity(format!("duplicate variable name `{name}`")));
            }
        }
        if let Some(first) = columns.first() {
            if let Some(bad) = columns.iter().position(|c| c.len() != first.len()) {
                return Err(Error::Argument(format!(
                    "column `{}` has {} rows, expected {}",
                    variable_names[bad],
                    columns[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            start_time,
            resolution_seconds,
            variable_names,
            columns,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn with_subject_id(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = subject_id.into();
        self
    }

    pub fn start_time(&self) -> DateTime<Utc> {
        self.start_time
    }

    pub fn resolution_seconds(&self) -> u32 {
        self.resolution_seconds
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    /// Number of variables.
    pub fn d(&self) -> usize {
        self.columns.len()
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, var: usize) -> &[f64] {
        &self.columns[var]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn value(&self, t: usize, var: usize) -> Option<f64> {
        let v = self.columns[var][t];
        (!v.is_nan()).then_some(v)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|n| n == name)
    }

    pub fn timestamp(&self, t: usize) -> DateTime<Utc> {
        self.start_time + Duration::seconds(self.resolution_seconds as i64 * t as i64)
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().flatten().filter(|v| v.is_nan()).count()
    }

    /// Returns a copy with every value of `var` multiplied by `factor`.
    pub fn scaled(&self, var: usize, factor: f64) -> Self {
        let mut out = self.clone();
        out.columns[var].iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Block-averages the panel onto a coarser grid.
///
/// Each output row is the mean of the non-missing values in its window of
/// `new_resolution_seconds / resolution_seconds` input rows. Windows with less
/// than half of their rows observed become missing. Windows are anchored at the
/// panel start; a trailing partial window is kept and judged against the full
/// window length.
pub fn resample(panel: &TimeSeriesPanel, new_resolution_seconds: u32) -> Result<TimeSeriesPanel> {
    let old = panel.resolution_seconds;
    if new_resolution_seconds == 0 || new_resolution_seconds % old != 0 {
        return Err(Error::Argument(format!(
            "new resolution {new_resolution_seconds}s is not a positive multiple of {old}s"
        )));
    }
    let factor = (new_resolution_seconds / old) as usize;
    let columns = panel
        .columns
        .iter()
        .map(|col| {
            col.chunks(factor)
                .map(|window| {
                    let (sum, count) = window
                        .iter()
                        .filter(|v| !v.is_nan())
                        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                    if 2 * count < factor {
                        f64::NAN
                    } else {
                        sum / count as f64
                    }
                })
                .collect()
        })
        .collect();
    TimeSeriesPanel::new(
        panel.subject_id.clone(),
        panel.start_time,
        new_resolution_seconds,
        panel.variable_names.clone(),
        columns,
    )
}

/// Centres each variable to mean 0 and scales it to unit population variance
/// (divisor `n`) over its observed entries. Missing entries stay missing.
pub fn standardize(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let mut columns = Vec::with_capacity(panel.d());
    for (name, col) in panel.variable_names.iter().zip(&panel.columns) {
        let observed: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        if observed.len() < 2 {
            return Err(Error::DegenerateVariable(name.clone()));
        }
        let mean = crate::stats::mean(&observed);
        let sd = crate::stats::population_variance(&observed).sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::DegenerateVariable(name.clone()));
        }
        columns.push(col.iter().map(|v| (v - mean) / sd).collect());
    }
    TimeSeriesPanel::new(
        panel.subject_id.clone(),
        panel.start_time,
        panel.resolution_seconds,
        panel.variable_names.clone(),
        columns,
    )
}

/// Appends a `bins_sum` column holding `bin0 + ... + bin6` (missing if any
/// channel is missing at that row).
pub fn with_bins_sum(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let idx: Vec<usize> = BIN_COLUMNS
        .iter()
        .map(|name| {
            panel
                .var_index(name)
                .ok_or_else(|| Error::Argument(format!("panel has no `{name}` column")))
        })
        .collect::<Result<_>>()?;
    let sum = (0..panel.len())
        .map(|t| idx.iter().map(|&v| panel.columns[v][t]).sum())
        .collect();
    let mut names = panel.variable_names.clone();
    let mut columns = panel.columns.clone();
    names.push(BINS_SUM.to_string());
    columns.push(sum);
    TimeSeriesPanel::new(
        panel.subject_id.clone(),
        panel.start_time,
        panel.resolution_seconds,
        names,
        columns,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn panel(columns: Vec<Vec<f64>>) -> TimeSeriesPanel {
        let names = (0..columns.len()).map(|i| format!("v{i}")).collect();
        TimeSeriesPanel::new(
            "s",
            Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap(),
            60,
            names,
            columns,
        )
        .unwrap()
    }

    #[test]
    fn resample_constant_series() {
        let p = resample(&panel(vec![vec![7.0; 45]]), 900).unwrap();
        assert_eq!(p.resolution_seconds(), 900);
        assert_eq!(p.column(0), &[7.0, 7.0, 7.0]);
    }

    #[test]
    fn resample_window_mean() {
        let values: Vec<f64> = (1..=15).map(f64::from).collect();
        let p = resample(&panel(vec![values]), 900).unwrap();
        assert_eq!(p.column(0), &[8.0]);
    }

    #[test]
    fn resample_coverage_threshold() {
        let mut values = vec![1.0; 4];
        values[0] = f64::NAN;
        values[1] = f64::NAN;
        values[2] = f64::NAN;
        // 2 of 4 observed passes, 1 of 4 does not
        let mut half = vec![2.0, 4.0, f64::NAN, f64::NAN];
        half.extend(values);
        let p = resample(&panel(vec![half]), 240).unwrap();
        assert_eq!(p.column(0)[0], 3.0);
        assert!(p.column(0)[1].is_nan());
    }

    #[test]
    fn resample_rejects_non_multiple() {
        let err = resample(&panel(vec![vec![1.0; 4]]), 90).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn resample_by_factor_one_is_identity() {
        let p = panel(vec![vec![1.0, f64::NAN, 3.5], vec![0.25, 2.0, -1.0]]);
        let q = resample(&p, 60).unwrap();
        for v in 0..2 {
            for t in 0..3 {
                assert_eq!(p.value(t, v), q.value(t, v));
            }
        }
    }

    #[test]
    fn eight_hours_at_fifteen_minutes_is_32_lags() {
        assert_eq!(8 * 3600 / 900, 32);
    }

    #[test]
    fn standardize_uses_population_sd() {
        let p = standardize(&panel(vec![vec![2.0, 4.0, 6.0]])).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in p.column(0).iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_preserves_missing() {
        let p = standardize(&panel(vec![vec![1.0, f64::NAN, 3.0, 5.0]])).unwrap();
        assert!(p.column(0)[1].is_nan());
        assert_eq!(p.missing_count(), 1);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let err = standardize(&panel(vec![vec![1.0, 2.0], vec![3.0, 3.0]])).unwrap_err();
        match err {
            Error::DegenerateVariable(name) => assert_eq!(name, "v1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bins_sum_adds_channels() {
        let mut cols: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, 1.0]).collect();
        cols[3][1] = f64::NAN;
        let names = BIN_COLUMNS.iter().map(|s| s.to_string()).collect();
        let p = TimeSeriesPanel::new("s", chrono::DateTime::<Utc>::UNIX_EPOCH, 60, names, cols).unwrap();
        let q = with_bins_sum(&p).unwrap();
        let sum = q.column(q.var_index(BINS_SUM).unwrap());
        assert_eq!(sum[0], 21.0);
        assert!(sum[1].is_nan());
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = TimeSeriesPanel::new(
            "s",
            chrono::DateTime::<Utc>::UNIX_EPOCH,
            60,
            vec!["a".into(), "a".into()],
            vec![vec![1.0], vec![2.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }
}
