//! JSON run configurations, one per command.
//!
//! Every field can be given in the config file; the common ones can also be
//! set by command-line flags, which take precedence. Relative paths in a
//! config file are resolved against the file's directory. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use causal_ts::citest::{CiTest, CmiParams};
use causal_ts::cohort::ComparisonKind;
use causal_ts::discovery::DiscoveryConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    #[default]
    Parcorr,
    #[serde(alias = "cmi-knn")]
    CmiKnn,
}

impl TestKind {
    pub fn ci_test(self, cmi: CmiParams) -> CiTest {
        match self {
            TestKind::Parcorr => CiTest::Parcorr,
            TestKind::CmiKnn => CiTest::CmiKnn(cmi),
        }
    }

    /// 0.02 for partial correlation, 0.05 for the kNN test.
    pub fn default_alpha(self) -> f64 {
        match self {
            TestKind::Parcorr => 0.02,
            TestKind::CmiKnn => 0.05,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Parcorr => "parcorr",
            TestKind::CmiKnn => "cmi_knn",
        }
    }
}

/// Reads a config file, or the all-defaults config when `path` is `None`.
/// Returns the config and the directory relative paths resolve against.
pub fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<(T, PathBuf)> {
    let (text, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (text, base)
        }
        None => ("{}".to_string(), PathBuf::new()),
    };
    let config = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    Ok((config, base))
}

pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn default_timestamp() -> String {
    "timestamp".into()
}

fn default_resolution() -> u32 {
    60
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverConfig {
    /// Panel CSV files, or directories whose `*.csv` files are all used.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default = "default_timestamp")]
    pub timestamp_column: String,
    /// Columns to load; all non-timestamp columns when empty.
    #[serde(default)]
    pub variables: Vec<String>,
    /// Sampling interval of the input files.
    #[serde(default = "default_resolution")]
    pub input_resolution_seconds: u32,
    /// Resolution to analyse at; the input resolution when unset.
    #[serde(default)]
    pub resolution_seconds: Option<u32>,
    /// Append a `bins_sum` column computed from `bin0..bin6`.
    #[serde(default)]
    pub bins_sum: bool,
    #[serde(default)]
    pub tau_max: Option<usize>,
    /// Defaults to 0.02 for partial correlation and 0.05 for the kNN test.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub pc_alpha: Option<f64>,
    #[serde(default)]
    pub test: TestKind,
    #[serde(default)]
    pub cmi: CmiParams,
    #[serde(default)]
    pub max_condition_dim: Option<usize>,
    #[serde(default)]
    pub q_max: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl DiscoverConfig {
    pub fn discovery_config(&self) -> Result<DiscoveryConfig> {
        let tau_max = self
            .tau_max
            .ok_or_else(|| CliError::Usage("tau_max is required (--tau-max)".into()))?;
        let config = DiscoveryConfig {
            tau_max,
            alpha: self.alpha.unwrap_or(self.test.default_alpha()),
            pc_alpha: self.pc_alpha,
            ci_test: self.test.ci_test(self.cmi),
            max_condition_dim: self.max_condition_dim,
            q_max: self.q_max,
            seed: self.seed,
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Path to a spec file, or the spec itself.
    #[serde(default)]
    pub spec: Option<serde_json::Value>,
    #[serde(default = "default_one")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// File name prefix of the emitted panels and truth graph.
    #[serde(default)]
    pub prefix: String,
    /// Index of the first emitted panel.
    #[serde(default)]
    pub start_index: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSpec {
    pub variable: String,
    /// Variable `variable` is compared against.
    pub reference: String,
    pub kind: ComparisonKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortConfig {
    /// Directory of `*.graph.json` files with `*.diagnostics.json` sidecars.
    #[serde(default)]
    pub graphs: Option<PathBuf>,
    /// Same cohort discovered at a coarser resolution.
    #[serde(default)]
    pub graphs_coarse: Option<PathBuf>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Rows of `correlations.csv`. p-value and statistic comparisons pool the
    /// `variable → target` and `reference → target` records over subjects
    /// and lags; raw-series comparisons pool the panel columns in `panels`.
    #[serde(default)]
    pub correlations: Vec<CorrelationSpec>,
    #[serde(default)]
    pub panels: Option<PathBuf>,
    #[serde(default = "default_resolution")]
    pub panel_resolution_seconds: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Battery {
    pub name: String,
    /// Path to a spec file, or the spec itself; its length is overridden.
    pub spec: serde_json::Value,
    pub tests: Vec<TestKind>,
    pub alphas: Vec<f64>,
    pub lengths: Vec<usize>,
    pub seeds: usize,
    pub tau_max: usize,
    #[serde(default)]
    pub cmi: CmiParams,
    #[serde(default)]
    pub max_condition_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default)]
    pub batteries: Vec<Battery>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batteries.is_empty() {
            return Err(CliError::Usage("benchmark needs at least one battery".into()));
        }
        for b in &self.batteries {
            let usage = |m: &str| Err(CliError::Usage(format!("battery `{}`: {m}", b.name)));
            if b.seeds == 0 {
                return usage("seeds must be at least 1");
            }
            if b.tests.is_empty() || b.alphas.is_empty() || b.lengths.is_empty() {
                return usage("tests, alphas and lengths must be non-empty");
            }
            if b.tau_max == 0 {
                return usage("tau_max must be at least 1");
            }
            if b.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
                return usage("alphas must lie in (0, 1)");
            }
        }
        Ok(())
    }
}
