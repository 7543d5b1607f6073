use super::TimeSeriesPanel;
use crate::graph::LaggedVariable;
use crate::{Error, Result};

/// Samples of a target node and a list of lagged nodes, one row per usable
/// time index.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedSampleMatrix {
    pub target: LaggedVariable,
    pub columns: Vec<LaggedVariable>,
    /// Column-major storage: `data[0]` is the target, `data[j + 1]` is `columns[j]`.
    data: Vec<Vec<f64>>,
}

impl LaggedSampleMatrix {
    /// Effective sample count after lag trimming and listwise deletion.
    pub fn n(&self) -> usize {
        self.data[0].len()
    }

    pub fn target_values(&self) -> &[f64] {
        &self.data[0]
    }

    pub fn column_values(&self, j: usize) -> &[f64] {
        &self.data[j + 1]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.iter().map(|c| c[i]).collect()
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        self.data
    }
}

/// Builds the sample matrix for `target` and `columns` over `t ∈ [tau_max, T)`.
///
/// A node `(v, lag)` takes the value of variable `v` at `t - lag`. Any row that
/// touches a missing value is dropped.
pub fn build_lagged_matrix(
    panel: &TimeSeriesPanel,
    target: LaggedVariable,
    columns: &[LaggedVariable],
    tau_max: usize,
) -> Result<LaggedSampleMatrix> {
    let mut nodes = Vec::with_capacity(columns.len() + 1);
    nodes.push(target);
    nodes.extend_from_slice(columns);
    for node in &nodes {
        if node.var_index >= panel.d() {
            return Err(Error::Argument(format!(
                "variable index {} out of range for {} variables",
                node.var_index,
                panel.d()
            )));
        }
        if node.lag > tau_max {
            return Err(Error::Argument(format!(
                "lag {} exceeds tau_max {tau_max}",
                node.lag
            )));
        }
    }
    let data = lagged_columns(panel, &nodes, tau_max)?;
    Ok(LaggedSampleMatrix {
        target,
        columns: columns.to_vec(),
        data,
    })
}

/// Extracts one column per node over the window `[window, T)` with listwise
/// deletion. Lags are not checked against `window` here; callers guarantee
/// `lag <= window`.
pub(crate) fn lagged_columns(
    panel: &TimeSeriesPanel,
    nodes: &[LaggedVariable],
    window: usize,
) -> Result<Vec<Vec<f64>>> {
    let len = panel.len();
    if window >= len {
        return Err(Error::InsufficientData {
            needed: window,
            available: len,
        });
    }
    let sources: Vec<&[f64]> = nodes.iter().map(|n| panel.column(n.var_index)).collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(len - window); nodes.len()];
    for t in window..len {
        let complete = nodes
            .iter()
            .zip(&sources)
            .all(|(n, col)| !col[t - n.lag].is_nan());
        if complete {
            for ((n, col), dst) in nodes.iter().zip(&sources).zip(out.iter_mut()) {
                dst.push(col[t - n.lag]);
            }
        }
    }
    Ok(out)
}
