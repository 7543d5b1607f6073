//! Time-lag causal graphs.
//!
//! A [`CausalGraph`] is the window representation of a causally stationary
//! time-lag DAG: each [`Link`] `X^i_{t-τ} → X^j_t` stands for the same relation
//! at every `t`. Contemporaneous (`τ = 0`) links whose direction could not be
//! decided are kept as [`Orientation::Unoriented`] rather than dropped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A node `X^{var_index}_{t-lag}` of the time-lag graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaggedVariable {
    pub var_index: usize,
    pub lag: usize,
}

impl LaggedVariable {
    pub const fn new(var_index: usize, lag: usize) -> Self {
        Self { var_index, lag }
    }

    /// The same variable `by` steps further in the past.
    pub const fn shifted(self, by: usize) -> Self {
        Self::new(self.var_index, self.lag + by)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Directed,
    #[serde(rename = "unoriented_contemporaneous")]
    Unoriented,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub source: LaggedVariable,
    pub target_var: usize,
    pub orientation: Orientation,
    pub statistic: f64,
    pub p_value: f64,
}

impl Link {
    pub fn directed(source: LaggedVariable, target_var: usize, statistic: f64, p_value: f64) -> Self {
        Self {
            source,
            target_var,
            orientation: Orientation::Directed,
            statistic,
            p_value,
        }
    }

    pub fn is_contemporaneous(&self) -> bool {
        self.source.lag == 0
    }

    /// Orientation-agnostic identity used for adjacency comparisons: lag-0
    /// pairs are normalised to `(min, 0, max)`.
    pub fn adjacency_key(&self) -> (usize, usize, usize) {
        let (i, j) = (self.source.var_index, self.target_var);
        if self.source.lag == 0 && i > j {
            (j, 0, i)
        } else {
            (i, self.source.lag, j)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct CausalGraph {
    subject_id: String,
    variable_names: Vec<String>,
    tau_max: usize,
    resolution_seconds: u32,
    links: Vec<Link>,
}

impl CausalGraph {
    /// Validates and builds a graph. Links are stored sorted by
    /// `(target_var, lag, source_var)`.
    pub fn new(
        subject_id: impl Into<String>,
        variable_names: Vec<String>,
        tau_max: usize,
        resolution_seconds: u32,
        mut links: Vec<Link>,
    ) -> Result<Self> {
        let d = variable_names.len();
        let mut seen = BTreeSet::new();
        for link in &links {
            let (i, lag, j) = (link.source.var_index, link.source.lag, link.target_var);
            if i >= d || j >= d {
                return Err(Error::Argument(format!(
                    "link {i}@{lag} -> {j} references a variable outside 0..{d}"
                )));
            }
            if lag > tau_max {
                return Err(Error::Argument(format!(
                    "link {i}@{lag} -> {j} exceeds tau_max {tau_max}"
                )));
            }
            if lag > 0 && link.orientation != Orientation::Directed {
                return Err(Error::Integrity(format!(
                    "lagged link {i}@{lag} -> {j} must be directed"
                )));
            }
            if lag == 0 && i == j {
                return Err(Error::Integrity(format!(
                    "contemporaneous self-link on variable {i}"
                )));
            }
            if !(0.0..=1.0).contains(&link.p_value) {
                return Err(Error::Argument(format!(
                    "p-value {} of link {i}@{lag} -> {j} outside [0, 1]",
                    link.p_value
                )));
            }
            if !seen.insert(link.adjacency_key()) {
                return Err(Error::Integrity(format!("duplicate link {i}@{lag} -> {j}")));
            }
        }
        links.sort_by_key(|l| (l.target_var, l.source.lag, l.source.var_index));
        let graph = Self {
            subject_id: subject_id.into(),
            variable_names,
            tau_max,
            resolution_seconds,
            links,
        };
        if graph.has_contemporaneous_cycle() {
            return Err(Error::Integrity(
                "directed contemporaneous links form a cycle".into(),
            ));
        }
        Ok(graph)
    }

    pub fn empty(variable_names: Vec<String>, tau_max: usize) -> Self {
        Self {
            subject_id: String::new(),
            variable_names,
            tau_max,
            resolution_seconds: 60,
            links: Vec::new(),
        }
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn with_subject_id(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = subject_id.into();
        self
    }

    pub fn with_resolution(mut self, resolution_seconds: u32) -> Self {
        self.resolution_seconds = resolution_seconds;
        self
    }

    /// Same links under a larger lag horizon.
    pub fn widened(mut self, tau_max: usize) -> Result<Self> {
        if let Some(l) = self.links.iter().find(|l| l.source.lag > tau_max) {
            return Err(Error::Argument(format!(
                "link at lag {} does not fit tau_max {tau_max}",
                l.source.lag
            )));
        }
        self.tau_max = tau_max;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.variable_names.len()
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn resolution_seconds(&self) -> u32 {
        self.resolution_seconds
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|n| n == name)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.d() {
            return Err(Error::Argument(format!(
                "variable index {var} out of range for {} variables",
                self.d()
            )));
        }
        Ok(())
    }

    /// Sources of the directed links into `X^var_t`. Unoriented contemporaneous
    /// neighbours are not parents.
    pub fn parents_of(&self, var: usize) -> Result<BTreeSet<LaggedVariable>> {
        self.check_var(var)?;
        Ok(self
            .links
            .iter()
            .filter(|l| l.target_var == var && l.orientation == Orientation::Directed)
            .map(|l| l.source)
            .collect())
    }

    /// Parents of the node `X^var_{t-lag}`, expressed relative to `t`.
    pub fn parents_of_at(&self, var: usize, lag: usize) -> Result<BTreeSet<LaggedVariable>> {
        Ok(self
            .parents_of(var)?
            .into_iter()
            .map(|p| p.shifted(lag))
            .collect())
    }

    pub fn to_summary(&self) -> SummaryGraph {
        SummaryGraph {
            d: self.d(),
            edges: self
                .links
                .iter()
                .map(|l| (l.source.var_index, l.target_var))
                .collect(),
        }
    }

    /// Element `τ` is true iff a link `source_var@τ → target_var` exists. At
    /// `τ = 0` an unoriented edge between the two variables also counts.
    pub fn lag_link_indicator(&self, source_var: usize, target_var: usize) -> Vec<bool> {
        let mut out = vec![false; self.tau_max + 1];
        for l in &self.links {
            let forward = l.source.var_index == source_var && l.target_var == target_var;
            let unoriented_reverse = l.orientation == Orientation::Unoriented
                && l.source.var_index == target_var
                && l.target_var == source_var;
            if forward || unoriented_reverse {
                out[l.source.lag] = true;
            }
        }
        out
    }

    pub fn adjacency_keys(&self) -> BTreeSet<(usize, usize, usize)> {
        self.links.iter().map(Link::adjacency_key).collect()
    }

    /// Same `d`, `tau_max` and variable names.
    pub fn same_shape(&self, other: &CausalGraph) -> bool {
        self.tau_max == other.tau_max && self.variable_names == other.variable_names
    }

    fn has_contemporaneous_cycle(&self) -> bool {
        let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for l in &self.links {
            if l.source.lag == 0 && l.orientation == Orientation::Directed {
                children.entry(l.source.var_index).or_default().push(l.target_var);
            }
        }
        contains_cycle(self.d(), &children)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Depth-first cycle check over a directed adjacency list on `0..d`.
pub(crate) fn contains_cycle(d: usize, children: &BTreeMap<usize, Vec<usize>>) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(v: usize, children: &BTreeMap<usize, Vec<usize>>, marks: &mut [Mark]) -> bool {
        marks[v] = Mark::Active;
        for &c in children.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            let mark = marks[c];
            if mark == Mark::Active || (mark == Mark::New && visit(c, children, marks)) {
                return true;
            }
        }
        marks[v] = Mark::Done;
        false
    }
    let mut marks = vec![Mark::New; d];
    (0..d).any(|v| marks[v] == Mark::New && visit(v, children, &mut marks))
}

/// Projection of a [`CausalGraph`] onto variables: `(i, j)` is present iff some
/// link `X^i_{t-τ} → X^j_t` exists at any lag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryGraph {
    pub d: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkJson {
    source_var: usize,
    lag: usize,
    target_var: usize,
    orientation: Orientation,
    statistic: f64,
    p_value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    subject_id: String,
    variable_names: Vec<String>,
    tau_max: usize,
    resolution_seconds: u32,
    links: Vec<LinkJson>,
}

impl TryFrom<GraphJson> for CausalGraph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        let links = g
            .links
            .into_iter()
            .map(|l| Link {
                source: LaggedVariable::new(l.source_var, l.lag),
                target_var: l.target_var,
                orientation: l.orientation,
                statistic: l.statistic,
                p_value: l.p_value,
            })
            .collect();
        CausalGraph::new(g.subject_id, g.variable_names, g.tau_max, g.resolution_seconds, links)
    }
}

impl From<CausalGraph> for GraphJson {
    fn from(g: CausalGraph) -> Self {
        GraphJson {
            subject_id: g.subject_id,
            variable_names: g.variable_names,
            tau_max: g.tau_max,
            resolution_seconds: g.resolution_seconds,
            links: g
                .links
                .into_iter()
                .map(|l| LinkJson {
                    source_var: l.source.var_index,
                    lag: l.source.lag,
                    target_var: l.target_var,
                    orientation: l.orientation,
                    statistic: l.statistic,
                    p_value: l.p_value,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (1..=d).map(|i| format!("X{i}")).collect()
    }

    fn lv(var_index: usize, lag: usize) -> LaggedVariable {
        LaggedVariable::new(var_index, lag)
    }

    /// Links drawn in the four-variable example graph (0-based variables):
    /// X1_{t-1}, X2_{t-1} → X1_t and X2_{t-2}, X3_{t-1}, X4_{t-3} → X3_t.
    fn example_graph() -> CausalGraph {
        let links = [(0, 1, 0), (1, 1, 0), (1, 2, 2), (2, 1, 2), (3, 3, 2)]
            .into_iter()
            .map(|(i, lag, j)| Link::directed(lv(i, lag), j, 0.0, 0.0))
            .collect();
        CausalGraph::new("fig", names(4), 3, 60, links).unwrap()
    }

    #[test]
    fn parents_of_x3() {
        let parents = example_graph().parents_of(2).unwrap();
        let expect: BTreeSet<_> = [lv(1, 2), lv(2, 1), lv(3, 3)].into_iter().collect();
        assert_eq!(parents, expect);
    }

    #[test]
    fn parents_of_lagged_x1() {
        let parents = example_graph().parents_of_at(0, 1).unwrap();
        let expect: BTreeSet<_> = [lv(0, 2), lv(1, 2)].into_iter().collect();
        assert_eq!(parents, expect);
    }

    #[test]
    fn parents_out_of_range() {
        assert!(matches!(example_graph().parents_of(4), Err(Error::Argument(_))));
        assert!(CausalGraph::empty(names(2), 1).parents_of(0).unwrap().is_empty());
    }

    #[test]
    fn summary_collapses_lags() {
        let links = vec![
            Link::directed(lv(0, 1), 1, 0.3, 0.01),
            Link::directed(lv(0, 3), 1, 0.2, 0.01),
        ];
        let g = CausalGraph::new("", names(2), 3, 60, links).unwrap();
        let s = g.to_summary();
        assert_eq!(s.edges, [(0, 1)].into_iter().collect());
        assert!(CausalGraph::empty(names(2), 3).to_summary().edges.is_empty());
    }

    #[test]
    fn summary_of_example_graph() {
        // oracle: walk the drawn arrows and collapse lags by hand
        let mut expect = BTreeSet::new();
        for (i, j) in [(1, 1), (2, 1), (2, 3), (3, 3), (4, 3)] {
            expect.insert((i - 1, j - 1));
        }
        let s = example_graph().to_summary();
        assert_eq!(s.edges, expect);
        assert!(s.edges.len() <= example_graph().links().len());
    }

    #[test]
    fn lag_indicator() {
        let g = CausalGraph::new(
            "",
            names(2),
            3,
            60,
            vec![Link::directed(lv(0, 2), 1, 0.5, 0.001)],
        )
        .unwrap();
        assert_eq!(g.lag_link_indicator(0, 1), vec![false, false, true, false]);
        assert_eq!(g.lag_link_indicator(1, 0), vec![false; 4]);
        assert_eq!(CausalGraph::empty(names(2), 480).lag_link_indicator(0, 1).len(), 481);
    }

    #[test]
    fn unoriented_edge_counts_both_ways_at_lag_zero() {
        let link = Link {
            source: lv(0, 0),
            target_var: 1,
            orientation: Orientation::Unoriented,
            statistic: 0.4,
            p_value: 0.0,
        };
        let g = CausalGraph::new("", names(2), 1, 60, vec![link]).unwrap();
        assert_eq!(g.lag_link_indicator(1, 0), vec![true, false]);
        assert!(g.parents_of(1).unwrap().is_empty());
    }

    #[test]
    fn invariants_enforced() {
        let lagged_unoriented = Link {
            orientation: Orientation::Unoriented,
            ..Link::directed(lv(0, 1), 1, 0.0, 0.0)
        };
        assert!(CausalGraph::new("", names(2), 2, 60, vec![lagged_unoriented]).is_err());
        let self_contemp = Link::directed(lv(1, 0), 1, 0.0, 0.0);
        assert!(CausalGraph::new("", names(2), 2, 60, vec![self_contemp]).is_err());
        let dup = vec![
            Link::directed(lv(0, 0), 1, 0.0, 0.0),
            Link::directed(lv(1, 0), 0, 0.0, 0.0),
        ];
        assert!(CausalGraph::new("", names(2), 2, 60, dup).is_err());
        let cycle = vec![
            Link::directed(lv(0, 0), 1, 0.0, 0.0),
            Link::directed(lv(1, 0), 2, 0.0, 0.0),
            Link::directed(lv(2, 0), 0, 0.0, 0.0),
        ];
        assert!(matches!(
            CausalGraph::new("", names(3), 2, 60, cycle),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = example_graph().with_subject_id("subject-7");
        let text = g.to_json().unwrap();
        assert_eq!(CausalGraph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn json_rejects_lagged_unoriented() {
        let text = r#"{"subject_id":"s","variable_names":["a","b"],"tau_max":2,
            "resolution_seconds":60,"links":[{"source_var":0,"lag":1,"target_var":1,
            "orientation":"unoriented_contemporaneous","statistic":0.1,"p_value":0.01}]}"#;
        assert!(CausalGraph::from_json(text).is_err());
    }
}
