//! Cohort-level aggregation of per-subject discovery results.
//!
//! All functions are pure folds over per-subject graphs or diagnostics that
//! share one shape (variables and `tau_max`).

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discovery::Diagnostics;
use crate::graph::CausalGraph;
use crate::stats::{pearson, spearman};
use crate::{Error, Result};

fn check_shapes(graphs: &[CausalGraph], source_var: usize, target_var: usize) -> Result<()> {
    let Some(first) = graphs.first() else {
        return Ok(());
    };
    let offenders: Vec<&str> = graphs
        .iter()
        .filter(|g| !g.same_shape(first))
        .map(CausalGraph::subject_id)
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Argument(format!(
            "graphs differ in shape from `{}`: {}",
            first.subject_id(),
            offenders.join(", ")
        )));
    }
    if source_var >= first.d() || target_var >= first.d() {
        return Err(Error::Argument(format!(
            "variable pair ({source_var}, {target_var}) out of range for {} variables",
            first.d()
        )));
    }
    Ok(())
}

/// Per subject, the number of lags `τ` with a link `source_var@τ → target_var`.
pub fn link_count_histogram(graphs: &[CausalGraph], source_var: usize, target_var: usize) -> Result<Vec<usize>> {
    check_shapes(graphs, source_var, target_var)?;
    Ok(graphs
        .iter()
        .map(|g| g.lag_link_indicator(source_var, target_var).iter().filter(|&&b| b).count())
        .collect())
}

/// Element `τ` is the share of subjects with a link `source_var@τ → target_var`.
pub fn lag_probability_curve(graphs: &[CausalGraph], source_var: usize, target_var: usize) -> Result<Vec<f64>> {
    check_shapes(graphs, source_var, target_var)?;
    let Some(first) = graphs.first() else {
        return Err(Error::Argument("cohort is empty".into()));
    };
    let mut counts = vec![0usize; first.tau_max() + 1];
    for g in graphs {
        for (c, linked) in counts.iter_mut().zip(g.lag_link_indicator(source_var, target_var)) {
            *c += linked as usize;
        }
    }
    let n = graphs.len();
    Ok(counts.into_iter().map(|c| c as f64 / n as f64).collect())
}

/// Mean absolute statistic per lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub resolution_seconds: u32,
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn lag_minutes(&self) -> Vec<f64> {
        self.lags
            .iter()
            .map(|&l| l as f64 * self.resolution_seconds as f64 / 60.0)
            .collect()
    }

    /// Values of `self` and `other` at the lags (in time units) both cover.
    pub fn aligned_with(&self, other: &Trajectory) -> (Vec<f64>, Vec<f64>) {
        let theirs: BTreeMap<u64, f64> = other
            .lags
            .iter()
            .zip(&other.values)
            .map(|(&l, &v)| (l as u64 * other.resolution_seconds as u64, v))
            .collect();
        self.lags
            .iter()
            .zip(&self.values)
            .filter_map(|(&l, &v)| theirs.get(&(l as u64 * self.resolution_seconds as u64)).map(|&w| (v, w)))
            .unzip()
    }
}

/// Per-lag mean over subjects of `|statistic|` for `source_var@τ → target_var`.
///
/// Covers `τ ∈ [0, tau_max]`, or `[1, tau_max]` when source and target
/// coincide. With `normalize`, each subject's values are first divided by
/// their maximum. Every subject must have a statistic at every lag.
pub fn statistic_trajectory(
    diagnostics: &[Diagnostics],
    source_var: usize,
    target_var: usize,
    normalize: bool,
) -> Result<Trajectory> {
    let Some(first) = diagnostics.first() else {
        return Err(Error::Argument("cohort is empty".into()));
    };
    let d = first.variable_names.len();
    if source_var >= d || target_var >= d {
        return Err(Error::Argument(format!(
            "variable pair ({source_var}, {target_var}) out of range for {d} variables"
        )));
    }
    let start = usize::from(source_var == target_var);
    let lags: Vec<usize> = (start..=first.tau_max).collect();
    let mut sums = vec![0.0; lags.len()];
    for diag in diagnostics {
        if diag.tau_max != first.tau_max
            || diag.variable_names != first.variable_names
            || diag.resolution_seconds != first.resolution_seconds
        {
            return Err(Error::Argument(format!(
                "diagnostics of `{}` differ in shape from `{}`",
                diag.subject_id, first.subject_id
            )));
        }
        let records = diag.pair_records(source_var, target_var);
        let values: Vec<Option<f64>> = lags
            .iter()
            .map(|&l| records[l].and_then(|r| r.statistic).map(f64::abs))
            .collect();
        let gaps: Vec<String> = lags
            .iter()
            .zip(&values)
            .filter(|(_, v)| v.is_none())
            .map(|(l, _)| l.to_string())
            .collect();
        if !gaps.is_empty() {
            return Err(Error::Argument(format!(
                "subject `{}` has no statistic at lags {}",
                diag.subject_id,
                gaps.join(", ")
            )));
        }
        let values: Vec<f64> = values.into_iter().flatten().collect();
        let scale = if normalize {
            values.iter().copied().fold(0.0, f64::max)
        } else {
            1.0
        };
        for (s, v) in sums.iter_mut().zip(values) {
            *s += if scale > 0.0 { v / scale } else { v };
        }
    }
    let n = diagnostics.len() as f64;
    Ok(Trajectory {
        resolution_seconds: first.resolution_seconds,
        lags,
        values: sums.into_iter().map(|s| s / n).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonKind {
    PValues,
    Statistics,
    RawSeries,
}

impl ComparisonKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComparisonKind::PValues => "p_values",
            ComparisonKind::Statistics => "statistics",
            ComparisonKind::RawSeries => "raw_series",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub variable: String,
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub kind: ComparisonKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationReport {
    pub fn extend(&mut self, other: CorrelationReport) {
        self.rows.extend(other.rows);
    }
}

/// Correlates `series_a` with `series_b` after pooling every subject's
/// values into one sample. Pairs with a non-finite member are dropped.
pub fn correlation_report(
    variable: &str,
    series_a: &[Vec<f64>],
    series_b: &[Vec<f64>],
    kind: ComparisonKind,
) -> Result<CorrelationReport> {
    if series_a.len() != series_b.len() {
        return Err(Error::Argument(format!(
            "{} subjects against {}",
            series_a.len(),
            series_b.len()
        )));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (s, (x, y)) in series_a.iter().zip(series_b).enumerate() {
        if x.len() != y.len() {
            return Err(Error::Argument(format!(
                "subject {s}: {} values against {}",
                x.len(),
                y.len()
            )));
        }
        for (&u, &v) in x.iter().zip(y) {
            if u.is_finite() && v.is_finite() {
                a.push(u);
                b.push(v);
            }
        }
    }
    Ok(CorrelationReport {
        rows: vec![CorrelationRow {
            variable: variable.to_string(),
            pearson_r: pearson(&a, &b)?,
            spearman_rho: spearman(&a, &b)?,
            kind,
        }],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub n_subjects: usize,
    pub lag_probability: Vec<f64>,
    pub link_count_per_subject: Vec<usize>,
    pub mean_normalized_statistic: Vec<f64>,
}

/// Builds the summary for one variable pair from matching graphs and
/// diagnostics.
pub fn summarize(
    graphs: &[CausalGraph],
    diagnostics: &[Diagnostics],
    source_var: usize,
    target_var: usize,
) -> Result<CohortSummary> {
    Ok(CohortSummary {
        n_subjects: graphs.len(),
        lag_probability: lag_probability_curve(graphs, source_var, target_var)?,
        link_count_per_subject: link_count_histogram(graphs, source_var, target_var)?,
        mean_normalized_statistic: statistic_trajectory(diagnostics, source_var, target_var, true)?.values,
    })
}

/// `histogram.csv`: `subject_id,link_count`.
pub fn write_histogram<W: Write>(out: W, subject_ids: &[&str], counts: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "link_count"])?;
    for (id, c) in subject_ids.iter().zip(counts) {
        w.write_record([id.to_string(), c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("histogram.csv", e))
}

/// `lag_probability.csv`: `lag_minutes,probability`.
pub fn write_lag_probability<W: Write>(out: W, curve: &[f64], resolution_seconds: u32) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag_minutes", "probability"])?;
    for (lag, p) in curve.iter().enumerate() {
        let minutes = lag as f64 * resolution_seconds as f64 / 60.0;
        w.write_record([minutes.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("lag_probability.csv", e))
}

/// `trajectory.csv`: `lag_minutes,mean_stat_1min,mean_stat_15min`, one row
/// per lag of either trajectory; a cell is empty where that trajectory has
/// no lag at that time.
pub fn write_trajectory<W: Write>(out: W, fine: Option<&Trajectory>, coarse: Option<&Trajectory>) -> Result<()> {
    let mut rows: BTreeMap<u64, [Option<f64>; 2]> = BTreeMap::new();
    for (slot, t) in [fine, coarse].into_iter().enumerate() {
        let Some(t) = t else { continue };
        for (&l, &v) in t.lags.iter().zip(&t.values) {
            rows.entry(l as u64 * t.resolution_seconds as u64).or_default()[slot] = Some(v);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag_minutes", "mean_stat_1min", "mean_stat_15min"])?;
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for (seconds, [a, b]) in rows {
        w.write_record([(seconds as f64 / 60.0).to_string(), cell(a), cell(b)])?;
    }
    w.flush().map_err(|e| Error::io("trajectory.csv", e))
}

/// `correlations.csv`: `variable,pearson_r,spearman_rho,kind`.
pub fn write_correlations<W: Write>(out: W, report: &CorrelationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "pearson_r", "spearman_rho", "kind"])?;
    for r in &report.rows {
        w.write_record([
            r.variable.clone(),
            r.pearson_r.to_string(),
            r.spearman_rho.to_string(),
            r.kind.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("correlations.csv", e))
}
