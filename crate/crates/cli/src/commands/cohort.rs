//! `cohort`: the four cohort tables from a directory of discovery outputs.

use std::path::{Path, PathBuf};

use causal_ts::cohort::{
    correlation_report, lag_probability_curve, link_count_histogram, statistic_trajectory, write_correlations,
    write_histogram, write_lag_probability, write_trajectory, ComparisonKind, CorrelationReport, Trajectory,
};
use causal_ts::discovery::Diagnostics;
use causal_ts::graph::CausalGraph;
use causal_ts::panel::{load_panel, LoadSchema, TimeSeriesPanel};

use super::out_dir;
use crate::config::{self, resolve, CohortConfig, CorrelationSpec};
use crate::error::{CliError, Result};
use crate::output::{files_with_suffix, read_to_string, write_atomic};
use crate::CohortArgs;

const GRAPH_SUFFIX: &str = ".graph.json";
const DIAGNOSTICS_SUFFIX: &str = ".diagnostics.json";

struct Cohort {
    graphs: Vec<CausalGraph>,
    diagnostics: Vec<Diagnostics>,
}

pub fn run(args: &CohortArgs) -> Result<()> {
    let (cfg, base): (CohortConfig, PathBuf) = config::load(args.common.config.as_deref())?;
    let graphs_dir = cfg
        .graphs
        .as_ref()
        .map(|p| resolve(&base, p))
        .ok_or_else(|| CliError::Usage("a graph directory is required (graphs)".into()))?;
    let (Some(source), Some(target)) = (&cfg.source, &cfg.target) else {
        return Err(CliError::Usage("source and target variables are required".into()));
    };
    let out = out_dir(args.common.out.as_ref(), cfg.out.as_ref(), &base)?;

    let fine = load_cohort(&graphs_dir)?;
    let first = &fine.graphs[0];
    let s = var(first, source)?;
    let t = var(first, target)?;

    let counts = link_count_histogram(&fine.graphs, s, t)?;
    let ids: Vec<&str> = fine.graphs.iter().map(CausalGraph::subject_id).collect();
    let mut bytes = Vec::new();
    write_histogram(&mut bytes, &ids, &counts)?;
    write_atomic(&out.join("histogram.csv"), &bytes)?;

    let curve = lag_probability_curve(&fine.graphs, s, t)?;
    let mut bytes = Vec::new();
    write_lag_probability(&mut bytes, &curve, first.resolution_seconds())?;
    write_atomic(&out.join("lag_probability.csv"), &bytes)?;

    let fine_trajectory = statistic_trajectory(&fine.diagnostics, s, t, cfg.normalize)?;
    let coarse_trajectory: Option<Trajectory> = match &cfg.graphs_coarse {
        Some(dir) => {
            let coarse = load_cohort(&resolve(&base, dir))?;
            let g = &coarse.graphs[0];
            Some(statistic_trajectory(
                &coarse.diagnostics,
                var(g, source)?,
                var(g, target)?,
                cfg.normalize,
            )?)
        }
        None => None,
    };
    let mut bytes = Vec::new();
    write_trajectory(&mut bytes, Some(&fine_trajectory), coarse_trajectory.as_ref())?;
    write_atomic(&out.join("trajectory.csv"), &bytes)?;

    let panels = match &cfg.panels {
        Some(dir) if cfg.correlations.iter().any(|c| c.kind == ComparisonKind::RawSeries) => {
            load_panels(&resolve(&base, dir), cfg.panel_resolution_seconds)?
        }
        _ => Vec::new(),
    };
    let mut report = CorrelationReport::default();
    for c in &cfg.correlations {
        report.extend(correlation(c, &fine, t, &panels)?);
    }
    let mut bytes = Vec::new();
    write_correlations(&mut bytes, &report)?;
    write_atomic(&out.join("correlations.csv"), &bytes)?;

    println!(
        "cohort of {} subjects, {source} -> {target}: peak lag probability {}",
        fine.graphs.len(),
        curve.iter().copied().fold(0.0, f64::max)
    );
    Ok(())
}

fn var(graph: &CausalGraph, name: &str) -> Result<usize> {
    graph
        .var_index(name)
        .ok_or_else(|| CliError::Failed(format!("graphs have no variable `{name}`")))
}

/// Graphs of a directory with their diagnostics sidecars, sorted by file name.
fn load_cohort(dir: &Path) -> Result<Cohort> {
    let files = files_with_suffix(dir, GRAPH_SUFFIX)?;
    if files.is_empty() {
        return Err(CliError::Failed(format!("{} holds no graphs", dir.display())));
    }
    let mut graphs = Vec::with_capacity(files.len());
    let mut diagnostics = Vec::with_capacity(files.len());
    let mut missing = Vec::new();
    for f in &files {
        graphs.push(CausalGraph::from_json(&read_to_string(f)?)?);
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let stem = &name[..name.len() - GRAPH_SUFFIX.len()];
        let sidecar = dir.join(format!("{stem}{DIAGNOSTICS_SUFFIX}"));
        if sidecar.is_file() {
            diagnostics.push(Diagnostics::from_json(&read_to_string(&sidecar)?)?);
        } else {
            missing.push(stem.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Failed(format!("missing diagnostics for: {}", missing.join(", "))));
    }
    Ok(Cohort { graphs, diagnostics })
}

fn load_panels(dir: &Path, resolution_seconds: u32) -> Result<Vec<TimeSeriesPanel>> {
    let files = files_with_suffix(dir, ".csv")?;
    if files.is_empty() {
        return Err(CliError::Failed(format!("{} holds no panels", dir.display())));
    }
    let schema = LoadSchema::new(resolution_seconds);
    files
        .iter()
        .map(|f| load_panel(f, &schema).map_err(CliError::from))
        .collect()
}

/// Per-subject series of one comparison. p-value and statistic comparisons
/// take the records of `variable → target` and `reference → target` over all
/// lags; raw-series comparisons take the two panel columns.
fn correlation(
    c: &CorrelationSpec,
    cohort: &Cohort,
    target: usize,
    panels: &[TimeSeriesPanel],
) -> Result<CorrelationReport> {
    let (a, b) = match c.kind {
        ComparisonKind::RawSeries => {
            if panels.is_empty() {
                return Err(CliError::Usage(format!(
                    "raw-series comparison of `{}` needs a panel directory (panels)",
                    c.variable
                )));
            }
            let column = |p: &TimeSeriesPanel, name: &str| {
                p.var_index(name).map(|i| p.column(i).to_vec()).ok_or_else(|| {
                    CliError::Failed(format!("panel `{}` has no column `{name}`", p.subject_id()))
                })
            };
            let a = panels.iter().map(|p| column(p, &c.variable)).collect::<Result<Vec<_>>>()?;
            let b = panels.iter().map(|p| column(p, &c.reference)).collect::<Result<Vec<_>>>()?;
            (a, b)
        }
        ComparisonKind::PValues | ComparisonKind::Statistics => {
            let g = &cohort.graphs[0];
            let (vi, ri) = (var(g, &c.variable)?, var(g, &c.reference)?);
            let series = |source: usize| -> Vec<Vec<f64>> {
                cohort
                    .diagnostics
                    .iter()
                    .map(|d| {
                        d.pair_records(source, target)
                            .into_iter()
                            .map(|r| {
                                let v = match c.kind {
                                    ComparisonKind::PValues => r.and_then(|r| r.p_value),
                                    _ => r.and_then(|r| r.statistic),
                                };
                                v.unwrap_or(f64::NAN)
                            })
                            .collect()
                    })
                    .collect()
            };
            (series(vi), series(ri))
        }
    };
    Ok(correlation_report(&c.variable, &a, &b, c.kind)?)
}
