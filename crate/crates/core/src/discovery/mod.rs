//! Two-stage causal discovery.
//!
//! [`pc_stage`] prunes the lagged candidates of one target variable down to a
//! superset of its parents. [`mci_stage`] tests every link from a superset
//! while conditioning on the supersets of both endpoints. [`run_discovery`] does the
//! same for lag-0 pairs as well, drops links that become independent once
//! contemporaneous neighbours are conditioned on, and orients what it can.
//!
//! Every test uses the same sample window `t ∈ [2·tau_max, T)`, so that the
//! time-shifted parents of a lagged source are always observable.

mod mci;
mod orient;
mod pc;
mod skeleton;

use serde::{Deserialize, Serialize};

use crate::citest::CiTest;
use crate::graph::LaggedVariable;
use crate::panel::{lagged_columns, TimeSeriesPanel};
use crate::{Error, Result};

pub use mci::mci_stage;
pub use pc::pc_stage;
pub use skeleton::{discover, run_discovery, DiscoveryOutput};

/// Conditioning cap applied to the kNN test when none is configured.
pub const CMI_DEFAULT_MAX_CONDITION_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoveryConfig {
    /// Largest lag considered, in sampling steps.
    pub tau_max: usize,
    /// Significance level of the MCI tests.
    pub alpha: f64,
    /// Significance level of the PC stage; `alpha` when unset.
    #[serde(default)]
    pub pc_alpha: Option<f64>,
    pub ci_test: CiTest,
    /// Caps both the PC-stage subset size and the number of parents taken from
    /// each endpoint's superset. Unset means unlimited for partial correlation
    /// and [`CMI_DEFAULT_MAX_CONDITION_DIM`] for the kNN test.
    #[serde(default)]
    pub max_condition_dim: Option<usize>,
    /// Caps the PC-stage subset size.
    #[serde(default)]
    pub q_max: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl DiscoveryConfig {
    pub fn new(tau_max: usize, alpha: f64, ci_test: CiTest) -> Self {
        Self {
            tau_max,
            alpha,
            pc_alpha: None,
            ci_test,
            max_condition_dim: None,
            q_max: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_max == 0 {
            return Err(Error::Argument("tau_max must be at least 1".into()));
        }
        for (name, a) in [("alpha", Some(self.alpha)), ("pc_alpha", self.pc_alpha)] {
            if let Some(a) = a {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Argument(format!("{name} must lie in (0, 1), got {a}")));
                }
            }
        }
        if let CiTest::CmiKnn(p) = &self.ci_test {
            if p.k == 0 || p.n_shuffles == 0 || p.k_perm == 0 {
                return Err(Error::Argument(
                    "cmi_knn k, n_shuffles and k_perm must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn pc_alpha(&self) -> f64 {
        self.pc_alpha.unwrap_or(self.alpha)
    }

    /// The conditioning cap in force, after applying the per-test default.
    pub fn condition_cap(&self) -> Option<usize> {
        self.max_condition_dim.or(match self.ci_test {
            CiTest::Parcorr => None,
            CiTest::CmiKnn(_) => Some(CMI_DEFAULT_MAX_CONDITION_DIM),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub node: LaggedVariable,
    /// Smallest absolute statistic seen across the PC-stage tests.
    pub statistic: f64,
    /// Largest p-value seen across the PC-stage tests.
    pub p_value: f64,
}

/// Estimated superset of the lagged parents of `target`, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSuperset {
    pub target: LaggedVariable,
    pub candidates: Vec<Candidate>,
}

impl ParentSuperset {
    pub fn nodes(&self) -> impl Iterator<Item = LaggedVariable> + '_ {
        self.candidates.iter().map(|c| c.node)
    }

    pub fn contains(&self, node: LaggedVariable) -> bool {
        self.nodes().any(|n| n == node)
    }
}

/// Stage whose test decided a link.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Dropped from the parent superset of its target.
    Pc,
    #[default]
    Mci,
}

/// Record of the test that decided one candidate link.
///
/// For a link in the output graph this is its weakest test (largest p-value);
/// for a removed link it is the test that removed it, which for a lagged link
/// missing from the target's superset is a PC-stage test. `level` counts the
/// contemporaneous neighbours conditioned on in an MCI test. Lag-0 pairs get
/// one record per direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDiagnostic {
    pub source_var: usize,
    pub lag: usize,
    pub target_var: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub cond_dim: usize,
    pub level: usize,
    #[serde(default)]
    pub stage: Stage,
    pub included: bool,
    /// Why no test could be run, if none could.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

/// Diagnostics sidecar of one discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub subject_id: String,
    pub variable_names: Vec<String>,
    pub tau_max: usize,
    pub resolution_seconds: u32,
    pub supersets: Vec<ParentSuperset>,
    pub links: Vec<LinkDiagnostic>,
}

impl Diagnostics {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Records for `source_var@τ → target_var`, indexed by `τ`.
    pub fn pair_records(&self, source_var: usize, target_var: usize) -> Vec<Option<&LinkDiagnostic>> {
        let mut out = vec![None; self.tau_max + 1];
        for r in &self.links {
            if r.source_var == source_var && r.target_var == target_var && r.lag <= self.tau_max {
                out[r.lag] = Some(r);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tested {
    pub statistic: f64,
    pub p_value: f64,
    pub cond_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Outcome {
    Tested(Tested),
    Skipped(String),
}

/// Stage tags mixed into per-test seeds.
pub(crate) const STAGE_PC: u64 = 1;
pub(crate) const STAGE_MCI: u64 = 2;

pub(crate) use crate::seed::derive as test_seed;

/// Shared state of one discovery run.
pub(crate) struct Ctx<'a> {
    pub panel: &'a TimeSeriesPanel,
    pub config: &'a DiscoveryConfig,
    pub window: usize,
}

impl<'a> Ctx<'a> {
    pub fn new(panel: &'a TimeSeriesPanel, config: &'a DiscoveryConfig) -> Result<Self> {
        config.validate()?;
        if panel.d() == 0 {
            return Err(Error::EmptyInput("panel has no variables".into()));
        }
        let window = 2 * config.tau_max;
        let needed = window + config.ci_test.min_samples(0);
        if panel.len() <= needed {
            return Err(Error::InsufficientData {
                needed,
                available: panel.len(),
            });
        }
        Ok(Self {
            panel,
            config,
            window,
        })
    }

    pub fn d(&self) -> usize {
        self.panel.d()
    }

    pub fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.d() {
            return Err(Error::Argument(format!(
                "variable index {var} out of range for {} variables",
                self.d()
            )));
        }
        Ok(())
    }

    /// Tests `x ⊥ X^target_t | z`. Sample shortfalls and degenerate
    /// conditioning sets yield [`Outcome::Skipped`] instead of an error.
    pub fn test(&self, x: LaggedVariable, target: usize, z: &[LaggedVariable], seed: u64) -> Result<Outcome> {
        let mut nodes = Vec::with_capacity(z.len() + 2);
        nodes.push(x);
        nodes.push(LaggedVariable::new(target, 0));
        nodes.extend_from_slice(z);
        let cols = lagged_columns(self.panel, &nodes, self.window)?;
        let n = cols[0].len();
        let needed = self.config.ci_test.min_samples(z.len());
        if n < needed {
            return Ok(Outcome::Skipped(format!(
                "{n} usable samples, {needed} needed with {} conditions",
                z.len()
            )));
        }
        let zs: Vec<&[f64]> = cols[2..].iter().map(Vec::as_slice).collect();
        match self.config.ci_test.run(&cols[0], &cols[1], &zs, seed) {
            Ok(r) => Ok(Outcome::Tested(Tested {
                statistic: r.statistic,
                p_value: r.p_value,
                cond_dim: z.len(),
            })),
            Err(e @ (Error::Conditioning(_) | Error::InsufficientData { .. })) => {
                Ok(Outcome::Skipped(e.to_string()))
            }
            Err(e) => Err(e),
        }
    }

    /// MCI conditioning set of `source → X^target_t`: the superset of the
    /// target without the source, then the superset of the source variable
    /// shifted back by the source lag. Each part is truncated to the
    /// conditioning cap.
    pub fn mci_conditions(
        &self,
        supersets: &[Vec<LaggedVariable>],
        source: LaggedVariable,
        target: usize,
    ) -> Vec<LaggedVariable> {
        let cap = self.config.condition_cap().unwrap_or(usize::MAX);
        let mut z: Vec<LaggedVariable> = supersets[target]
            .iter()
            .copied()
            .filter(|&p| p != source)
            .take(cap)
            .collect();
        for p in supersets[source.var_index].iter().take(cap) {
            let s = p.shifted(source.lag);
            if s != source && !z.contains(&s) {
                z.push(s);
            }
        }
        z
    }
}
