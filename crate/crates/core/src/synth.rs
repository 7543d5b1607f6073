//! Synthetic structural causal models with known ground truth.
//!
//! An [`ScmSpec`] lists lagged and contemporaneous links, each with a
//! mechanism, plus one noise law per variable. [`simulate`] runs the model
//! forward from zero initial values, discards a burn-in and returns a panel.
//! Construction rejects specs that cannot yield a stationary series: cyclic
//! contemporaneous links, a linear part whose companion matrix has spectral
//! radius ≥ 1, and quadratic links that feed back into their own source.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::graph::{contains_cycle, CausalGraph, LaggedVariable, Link, Orientation};
use crate::panel::TimeSeriesPanel;
use crate::{Error, Result};

pub const DEFAULT_BURN_IN: usize = 500;
pub const DEFAULT_LENGTH: usize = 1000;
const DEFAULT_RESOLUTION: u32 = 60;

/// Contribution of a parent value `x` to its child.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// `c·x`
    Linear(f64),
    /// `c·x²`
    Quadratic(f64),
    /// `c·tanh(x)`
    Tanh(f64),
}

impl Mechanism {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Mechanism::Linear(c) => c * x,
            Mechanism::Quadratic(c) => c * x * x,
            Mechanism::Tanh(c) => c * x.tanh(),
        }
    }

    /// Coefficient bounding the mechanism's slope near the origin; used for
    /// the stationarity check. Quadratic links contribute none.
    fn linear_part(&self) -> f64 {
        match *self {
            Mechanism::Linear(c) | Mechanism::Tanh(c) => c,
            Mechanism::Quadratic(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Gaussian { sigma: f64 },
    /// Uniform on `[-width/2, width/2)`.
    Uniform { width: f64 },
}

impl Noise {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Noise::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            Noise::Uniform { width } => width * (rng.random::<f64>() - 0.5),
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Noise::Gaussian { sigma } => sigma.is_finite() && sigma >= 0.0,
            Noise::Uniform { width } => width.is_finite() && width >= 0.0,
        }
    }
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Gaussian { sigma: 1.0 }
    }
}

/// `mechanism(X^source_var_{t-lag})` is added to `X^target_var_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmLink {
    pub source_var: usize,
    pub lag: usize,
    pub target_var: usize,
    pub mechanism: Mechanism,
}

impl ScmLink {
    pub fn new(source_var: usize, lag: usize, target_var: usize, mechanism: Mechanism) -> Self {
        Self {
            source_var,
            lag,
            target_var,
            mechanism,
        }
    }

    pub fn linear(source_var: usize, lag: usize, target_var: usize, coefficient: f64) -> Self {
        Self::new(source_var, lag, target_var, Mechanism::Linear(coefficient))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScmSpecJson", into = "ScmSpecJson")]
pub struct ScmSpec {
    variable_names: Vec<String>,
    links: Vec<ScmLink>,
    noise: Vec<Noise>,
    t: usize,
    burn_in: usize,
    resolution_seconds: u32,
}

impl ScmSpec {
    /// Validated spec with unit Gaussian noise, length [`DEFAULT_LENGTH`] and
    /// burn-in [`DEFAULT_BURN_IN`].
    pub fn new(d: usize, links: Vec<ScmLink>) -> Result<Self> {
        let spec = Self {
            variable_names: (0..d).map(|i| format!("x{i}")).collect(),
            links,
            noise: vec![Noise::default(); d],
            t: DEFAULT_LENGTH,
            burn_in: DEFAULT_BURN_IN,
            resolution_seconds: DEFAULT_RESOLUTION,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One directed link per directed graph link, all with `mechanism`.
    pub fn from_graph(graph: &CausalGraph, mechanism: Mechanism) -> Result<Self> {
        let links = graph
            .links()
            .iter()
            .map(|l| match l.orientation {
                Orientation::Directed => Ok(ScmLink::new(l.source.var_index, l.source.lag, l.target_var, mechanism)),
                Orientation::Unoriented => Err(Error::Argument(format!(
                    "unoriented edge {} - {} has no direction to simulate",
                    l.source.var_index, l.target_var
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph.d(), links)?
            .with_variable_names(graph.variable_names().to_vec())
            .map(|s| s.with_resolution(graph.resolution_seconds()))
    }

    pub fn with_length(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_resolution(mut self, resolution_seconds: u32) -> Self {
        self.resolution_seconds = resolution_seconds;
        self
    }

    /// Per-variable noise; a single entry applies to every variable.
    pub fn with_noise(mut self, noise: Vec<Noise>) -> Result<Self> {
        self.noise = match noise.len() {
            1 => vec![noise[0]; self.d()],
            _ => noise,
        };
        self.validate()?;
        Ok(self)
    }

    pub fn with_variable_names(mut self, names: Vec<String>) -> Result<Self> {
        self.variable_names = names;
        self.validate()?;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.variable_names.len()
    }

    pub fn links(&self) -> &[ScmLink] {
        &self.links
    }

    pub fn noise(&self) -> &[Noise] {
        &self.noise
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn resolution_seconds(&self) -> u32 {
        self.resolution_seconds
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn max_lag(&self) -> usize {
        self.links.iter().map(|l| l.lag).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn validate(&self) -> Result<()> {
        let d = self.d();
        if d == 0 {
            return Err(Error::Argument("spec needs at least one variable".into()));
        }
        if self.noise.len() != d {
            return Err(Error::Argument(format!("{} noise entries for {d} variables", self.noise.len())));
        }
        if let Some(bad) = self.noise.iter().find(|n| !n.is_valid()) {
            return Err(Error::Argument(format!("invalid noise {bad:?}")));
        }
        if self.resolution_seconds == 0 {
            return Err(Error::Argument("resolution must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &self.links {
            if l.source_var >= d || l.target_var >= d {
                return Err(Error::Argument(format!(
                    "link {}@{} -> {} references a variable outside 0..{d}",
                    l.source_var, l.lag, l.target_var
                )));
            }
            if l.lag == 0 && l.source_var == l.target_var {
                return Err(Error::Integrity(format!("contemporaneous self-link on {}", l.source_var)));
            }
            if !seen.insert((l.source_var, l.lag, l.target_var)) {
                return Err(Error::Integrity(format!(
                    "duplicate link {}@{} -> {}",
                    l.source_var, l.lag, l.target_var
                )));
            }
            let c = match l.mechanism {
                Mechanism::Linear(c) | Mechanism::Quadratic(c) | Mechanism::Tanh(c) => c,
            };
            if !c.is_finite() {
                return Err(Error::Argument("mechanism coefficients must be finite".into()));
            }
        }
        let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for l in self.links.iter().filter(|l| l.lag == 0) {
            children.entry(l.source_var).or_default().push(l.target_var);
        }
        if contains_cycle(d, &children) {
            return Err(Error::Integrity("contemporaneous links form a cycle".into()));
        }
        self.check_quadratic_feedback()?;
        let radius = self.spectral_radius()?;
        if radius >= 1.0 {
            return Err(Error::Unstable(format!(
                "spectral radius {radius:.4} of the linear part is not below 1"
            )));
        }
        Ok(())
    }

    fn check_quadratic_feedback(&self) -> Result<()> {
        let d = self.d();
        let mut reach = vec![vec![false; d]; d];
        for l in &self.links {
            reach[l.source_var][l.target_var] = true;
        }
        for k in 0..d {
            for i in 0..d {
                if reach[i][k] {
                    for j in 0..d {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        match self
            .links
            .iter()
            .find(|l| matches!(l.mechanism, Mechanism::Quadratic(_)) && reach[l.target_var][l.source_var])
        {
            Some(l) => Err(Error::Unstable(format!(
                "quadratic link {}@{} -> {} lies on a feedback loop",
                l.source_var, l.lag, l.target_var
            ))),
            None => Ok(()),
        }
    }

    /// Spectral radius of the companion matrix of the reduced-form linear
    /// system `x_t = Σ_τ (I − A_0)⁻¹ A_τ x_{t−τ} + noise`.
    pub fn spectral_radius(&self) -> Result<f64> {
        let d = self.d();
        let lags = self.max_lag();
        if lags == 0 {
            return Ok(0.0);
        }
        let mut a = vec![DMatrix::<f64>::zeros(d, d); lags + 1];
        for l in &self.links {
            a[l.lag][(l.target_var, l.source_var)] += l.mechanism.linear_part();
        }
        let reduce = (DMatrix::<f64>::identity(d, d) - &a[0])
            .try_inverse()
            .ok_or_else(|| Error::Unstable("contemporaneous system is singular".into()))?;
        let n = d * lags;
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for tau in 1..=lags {
            let block = &reduce * &a[tau];
            companion.view_mut((0, (tau - 1) * d), (d, d)).copy_from(&block);
        }
        for r in d..n {
            companion[(r, r - d)] = 1.0;
        }
        Ok(companion
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    /// Variable order in which every contemporaneous parent comes first.
    fn evaluation_order(&self) -> Vec<usize> {
        let d = self.d();
        let mut indegree = vec![0usize; d];
        for l in self.links.iter().filter(|l| l.lag == 0) {
            indegree[l.target_var] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..d).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(d);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for l in self.links.iter().filter(|l| l.lag == 0 && l.source_var == v) {
                indegree[l.target_var] -= 1;
                if indegree[l.target_var] == 0 {
                    ready.insert(l.target_var);
                }
            }
        }
        order
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScmSpecJson {
    d: usize,
    #[serde(default)]
    variable_names: Option<Vec<String>>,
    #[serde(default)]
    links: Vec<ScmLink>,
    #[serde(default)]
    noise: Option<Vec<Noise>>,
    #[serde(default = "default_length")]
    t: usize,
    #[serde(default = "default_burn_in")]
    burn_in: usize,
    #[serde(default = "default_resolution")]
    resolution_seconds: u32,
}

fn default_length() -> usize {
    DEFAULT_LENGTH
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_resolution() -> u32 {
    DEFAULT_RESOLUTION
}

impl TryFrom<ScmSpecJson> for ScmSpec {
    type Error = Error;

    fn try_from(j: ScmSpecJson) -> Result<Self> {
        let names = j
            .variable_names
            .unwrap_or_else(|| (0..j.d).map(|i| format!("x{i}")).collect());
        if names.len() != j.d {
            return Err(Error::Argument(format!("{} variable names for d = {}", names.len(), j.d)));
        }
        let noise = match j.noise {
            Some(n) if n.len() == 1 => vec![n[0]; j.d],
            Some(n) => n,
            None => vec![Noise::default(); j.d],
        };
        let spec = ScmSpec {
            variable_names: names,
            links: j.links,
            noise,
            t: j.t,
            burn_in: j.burn_in,
            resolution_seconds: j.resolution_seconds,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ScmSpec> for ScmSpecJson {
    fn from(s: ScmSpec) -> Self {
        ScmSpecJson {
            d: s.d(),
            variable_names: Some(s.variable_names),
            links: s.links,
            noise: Some(s.noise),
            t: s.t,
            burn_in: s.burn_in,
            resolution_seconds: s.resolution_seconds,
        }
    }
}

/// Simulates `burn_in + T` steps from zero initial values and returns the last
/// `T` rows. Noise is drawn for variables `0..d` in index order at each step.
///
/// The result is checked for finiteness and, when `T ≥ 20`, for a stable
/// mean: the first- and second-half means of each variable must differ by less
/// than 5 standard errors, with the standard error inflated by the lag-1
/// autocorrelation.
pub fn simulate(spec: &ScmSpec, seed: u64) -> Result<TimeSeriesPanel> {
    let d = spec.d();
    let total = spec.burn_in + spec.t;
    let order = spec.evaluation_order();
    let mut parents: Vec<Vec<&ScmLink>> = vec![Vec::new(); d];
    for l in &spec.links {
        parents[l.target_var].push(l);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![vec![0.0; total]; d];
    let mut noise = vec![0.0; d];
    for s in 0..total {
        for (v, e) in noise.iter_mut().enumerate() {
            *e = spec.noise[v].sample(&mut rng);
        }
        for &v in &order {
            let mut x = noise[v];
            for l in &parents[v] {
                if s >= l.lag {
                    x += l.mechanism.apply(columns[l.source_var][s - l.lag]);
                }
            }
            columns[v][s] = x;
        }
    }
    for col in &mut columns {
        col.drain(..spec.burn_in);
    }
    for (name, col) in spec.variable_names.iter().zip(&columns) {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable(format!("`{name}` diverged")));
        }
        if spec.t >= 20 && !stable_mean(col) {
            return Err(Error::Unstable(format!("`{name}` failed the half-mean stationarity check")));
        }
    }
    TimeSeriesPanel::new(
        format!("sim-{seed}"),
        chrono::DateTime::<chrono::Utc>::UNIX_EPOCH,
        spec.resolution_seconds,
        spec.variable_names.clone(),
        columns,
    )
}

fn stable_mean(col: &[f64]) -> bool {
    if crate::stats::population_variance(col) == 0.0 {
        return true;
    }
    let (a, b) = col.split_at(col.len() / 2);
    // nuisance variance is estimated within each half so that a level shift
    // between the halves does not masquerade as persistence
    let se = [a, b]
        .iter()
        .map(|h| {
            let rho = crate::stats::autocorrelation(h, 1).clamp(0.0, 0.999);
            let inflation = ((1.0 + rho) / (1.0 - rho)).max(bartlett_inflation(h));
            crate::stats::population_variance(h) * inflation / h.len() as f64
        })
        .sum::<f64>()
        .sqrt();
    (crate::stats::mean(a) - crate::stats::mean(b)).abs() <= 5.0 * se
}

/// Long-run variance over variance, `1 + 2·Σ (1 − k/(L+1))·r_k` with
/// bandwidth `L = min(n/8, 1000)`. Catches slow components that the lag-1
/// autocorrelation misses, e.g. white noise riding on a persistent parent.
fn bartlett_inflation(col: &[f64]) -> f64 {
    let bandwidth = (col.len() / 8).min(1000);
    let sum: f64 = (1..=bandwidth)
        .map(|k| (1.0 - k as f64 / (bandwidth + 1) as f64) * crate::stats::autocorrelation(col, k))
        .sum();
    1.0 + 2.0 * sum
}

/// Statistic and p-value carried by ground-truth links.
pub const TRUTH_STATISTIC: f64 = 0.0;
pub const TRUTH_P_VALUE: f64 = 0.0;

/// One directed link per spec link, with [`TRUTH_STATISTIC`] and
/// [`TRUTH_P_VALUE`]. `tau_max` is the largest spec lag, at least 1.
pub fn ground_truth_graph(spec: &ScmSpec) -> CausalGraph {
    let links = spec
        .links
        .iter()
        .map(|l| {
            Link::directed(
                LaggedVariable::new(l.source_var, l.lag),
                l.target_var,
                TRUTH_STATISTIC,
                TRUTH_P_VALUE,
            )
        })
        .collect();
    CausalGraph::new(
        "truth",
        spec.variable_names.clone(),
        spec.max_lag().max(1),
        spec.resolution_seconds,
        links,
    )
    .expect("a validated spec is a valid graph")
}

/// Adjacency-level comparison of a found graph with the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub true_positive_adjacencies: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Candidate adjacencies absent from the truth.
    pub negatives: usize,
    /// 1 when nothing was found.
    pub precision: f64,
    /// 1 when the truth is empty.
    pub recall: f64,
}

impl RecoveryScore {
    /// Share of absent adjacencies that were reported; 0 when there are none.
    pub fn false_positive_rate(&self) -> f64 {
        if self.negatives == 0 {
            0.0
        } else {
            self.false_positives as f64 / self.negatives as f64
        }
    }

    pub fn exact(&self) -> bool {
        self.false_positives == 0 && self.false_negatives == 0
    }
}

/// Compares adjacencies `(source_var, lag, target_var)`; lag-0 pairs are
/// compared without orientation.
pub fn score(found: &CausalGraph, truth: &CausalGraph) -> Result<RecoveryScore> {
    if found.d() != truth.d() || found.tau_max() != truth.tau_max() {
        return Err(Error::Argument(format!(
            "graphs differ in shape: d {} vs {}, tau_max {} vs {}",
            found.d(),
            truth.d(),
            found.tau_max(),
            truth.tau_max()
        )));
    }
    let f = found.adjacency_keys();
    let t = truth.adjacency_keys();
    let tp = f.intersection(&t).count();
    let (fp, fneg) = (f.len() - tp, t.len() - tp);
    let d = truth.d();
    let candidates = d * d * truth.tau_max() + d * (d - 1) / 2;
    Ok(RecoveryScore {
        true_positive_adjacencies: tp,
        false_positives: fp,
        false_negatives: fneg,
        negatives: candidates - t.len(),
        precision: if f.is_empty() { 1.0 } else { tp as f64 / f.len() as f64 },
        recall: if t.is_empty() { 1.0 } else { tp as f64 / t.len() as f64 },
    })
}
