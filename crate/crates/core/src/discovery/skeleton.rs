//! Full discovery run including contemporaneous links.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rayon::prelude::*;

use super::mci::mci_seed;
use super::orient::{orient, sepset_key, Sepsets};
use super::{pc, Ctx, Diagnostics, DiscoveryConfig, LinkDiagnostic, Outcome, Stage, Tested};
use crate::graph::{CausalGraph, LaggedVariable, Link, Orientation};
use crate::panel::TimeSeriesPanel;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutput {
    pub graph: CausalGraph,
    pub diagnostics: Diagnostics,
}

/// Runs discovery and returns only the graph. See [`discover`].
pub fn run_discovery(panel: &TimeSeriesPanel, config: &DiscoveryConfig) -> Result<CausalGraph> {
    discover(panel, config).map(|out| out.graph)
}

/// Full discovery run with its diagnostics.
///
/// 1. [`pc_stage`](super::pc_stage) for every variable.
/// 2. Level 0: every lagged link `(i, τ ≥ 1) → j` still in the superset of
///    `j` and every ordered lag-0 pair `i → j`, `i ≠ j`, gets an MCI test;
///    links with `p ≥ alpha` are removed. Lagged links dropped by the PC stage
///    stay removed and keep the test that dropped them.
/// 3. Levels 1, 2, ...: each surviving link into `X^j_t` is retested with the
///    MCI conditions plus every size-`level` subset of the contemporaneous
///    neighbours of `j` (taken from a snapshot at the start of the level). The
///    first subset giving `p ≥ alpha` removes the link and is stored as its
///    separating set. A lag-0 pair survives only while both of its directions
///    do. Stops when no link has enough neighbours left.
/// 4. Lagged links point forward in time; lag-0 edges are oriented by the
///    collider rule and otherwise reported unoriented.
///
/// Each emitted link carries the statistic and p-value of its weakest test,
/// so every p-value is below `alpha`.
pub fn discover(panel: &TimeSeriesPanel, config: &DiscoveryConfig) -> Result<DiscoveryOutput> {
    let ctx = Ctx::new(panel, config)?;
    let d = ctx.d();
    let searches = (0..d)
        .into_par_iter()
        .map(|j| pc::search(&ctx, j))
        .collect::<Result<Vec<_>>>()?;
    let (supersets, dropped): (Vec<_>, Vec<_>) = searches.into_iter().unzip();
    let parents: Vec<Vec<LaggedVariable>> = supersets.iter().map(|s| s.nodes().collect()).collect();

    let mut states: Vec<LinkState> = (0..d)
        .flat_map(|j| {
            (0..=config.tau_max).flat_map(move |lag| {
                (0..d)
                    .filter(move |&i| lag > 0 || i != j)
                    .map(move |i| LinkState::new(LaggedVariable::new(i, lag), j))
            })
        })
        .collect();
    let index: BTreeMap<(LaggedVariable, usize), usize> = states
        .iter()
        .enumerate()
        .map(|(n, s)| ((s.source, s.target), n))
        .collect();
    let mut sepsets = Sepsets::new();
    for (j, dropped) in dropped.into_iter().enumerate() {
        for (source, outcome) in dropped {
            let s = &mut states[index[&(source, j)]];
            s.alive = false;
            s.stage = Stage::Pc;
            match outcome {
                // PC-stage conditions are all lagged: no contemporaneous separator
                Outcome::Tested(t) => {
                    s.removed_by = Some((t, 0));
                    sepsets.insert(sepset_key(source, j), Vec::new());
                }
                Outcome::Skipped(reason) => s.skip = Some(reason),
            }
        }
    }

    for level in 0usize.. {
        let neighbours = contemporaneous_neighbours(d, &states, &index);
        let results = states
            .par_iter()
            .map(|s| {
                if !s.alive {
                    return Ok(None);
                }
                test_link(&ctx, &parents, &neighbours, s.source, s.target, level)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut attempted = false;
        for (s, r) in states.iter_mut().zip(results) {
            let Some(r) = r else { continue };
            attempted = true;
            for t in r.tested {
                if s.best.is_none_or(|(b, _)| t.p_value > b.p_value) {
                    s.best = Some((t, level));
                }
            }
            if s.skip.is_none() {
                s.skip = r.skip;
            }
            if let Some((t, sepset)) = r.removed {
                s.alive = false;
                s.removed_by = Some((t, level));
                sepsets.entry(sepset_key(s.source, s.target)).or_insert(sepset);
            }
        }
        // a lag-0 pair is removed as soon as either direction is
        for n in 0..states.len() {
            let s = &states[n];
            if s.alive && s.source.lag == 0 {
                let partner = index[&(LaggedVariable::new(s.target, 0), s.source.var_index)];
                if !states[partner].alive {
                    states[n].alive = false;
                }
            }
        }
        if !attempted {
            break;
        }
    }

    let graph = assemble(&ctx, &states, &index, &sepsets)?;
    let included = graph.adjacency_keys();
    let links = states
        .iter()
        .map(|s| {
            let key = Link::directed(s.source, s.target, 0.0, 0.0).adjacency_key();
            s.diagnostic(included.contains(&key))
        })
        .collect();
    let diagnostics = Diagnostics {
        subject_id: panel.subject_id().to_string(),
        variable_names: panel.variable_names().to_vec(),
        tau_max: config.tau_max,
        resolution_seconds: panel.resolution_seconds(),
        supersets,
        links,
    };
    Ok(DiscoveryOutput { graph, diagnostics })
}

#[derive(Debug, Clone)]
struct LinkState {
    source: LaggedVariable,
    target: usize,
    alive: bool,
    /// Test with the largest p-value and its level.
    best: Option<(Tested, usize)>,
    removed_by: Option<(Tested, usize)>,
    skip: Option<String>,
    stage: Stage,
}

impl LinkState {
    fn new(source: LaggedVariable, target: usize) -> Self {
        Self {
            source,
            target,
            alive: true,
            best: None,
            removed_by: None,
            skip: None,
            stage: Stage::Mci,
        }
    }

    fn diagnostic(&self, included: bool) -> LinkDiagnostic {
        let decisive = self.removed_by.or(self.best);
        LinkDiagnostic {
            source_var: self.source.var_index,
            lag: self.source.lag,
            target_var: self.target,
            statistic: decisive.map(|(t, _)| t.statistic),
            p_value: decisive.map(|(t, _)| t.p_value),
            cond_dim: decisive.map_or(0, |(t, _)| t.cond_dim),
            level: decisive.map_or(0, |(_, l)| l),
            stage: self.stage,
            included,
            skipped: if decisive.is_none() { self.skip.clone() } else { None },
        }
    }
}

struct LevelResult {
    tested: Vec<Tested>,
    skip: Option<String>,
    removed: Option<(Tested, Vec<usize>)>,
}

fn contemporaneous_neighbours(
    d: usize,
    states: &[LinkState],
    index: &BTreeMap<(LaggedVariable, usize), usize>,
) -> Vec<Vec<usize>> {
    (0..d)
        .map(|j| {
            (0..d)
                .filter(|&i| i != j && states[index[&(LaggedVariable::new(i, 0), j)]].alive)
                .collect()
        })
        .collect()
}

/// Runs the level-`level` tests of one link. `None` when the target has too
/// few contemporaneous neighbours for this level.
fn test_link(
    ctx: &Ctx,
    parents: &[Vec<LaggedVariable>],
    neighbours: &[Vec<usize>],
    source: LaggedVariable,
    target: usize,
    level: usize,
) -> Result<Option<LevelResult>> {
    let pool: Vec<usize> = neighbours[target]
        .iter()
        .copied()
        .filter(|&k| !(source.lag == 0 && k == source.var_index))
        .collect();
    if pool.len() < level {
        return Ok(None);
    }
    let base = ctx.mci_conditions(parents, source, target);
    let mut out = LevelResult {
        tested: Vec::new(),
        skip: None,
        removed: None,
    };
    for (c, combo) in pool.into_iter().combinations(level).enumerate() {
        let mut z = base.clone();
        z.extend(combo.iter().map(|&k| LaggedVariable::new(k, 0)));
        let seed = mci_seed(ctx.config, source, target, level, c);
        match ctx.test(source, target, &z, seed)? {
            Outcome::Tested(t) => {
                out.tested.push(t);
                if t.p_value >= ctx.config.alpha {
                    out.removed = Some((t, combo));
                    break;
                }
            }
            Outcome::Skipped(reason) => {
                out.skip.get_or_insert(reason);
            }
        }
    }
    Ok(Some(out))
}

fn assemble(
    ctx: &Ctx,
    states: &[LinkState],
    index: &BTreeMap<(LaggedVariable, usize), usize>,
    sepsets: &Sepsets,
) -> Result<CausalGraph> {
    let d = ctx.d();
    let kept = |s: &LinkState| s.alive && s.best.is_some();
    let lagged: BTreeSet<(LaggedVariable, usize)> = states
        .iter()
        .filter(|s| s.source.lag > 0 && kept(s))
        .map(|s| (s.source, s.target))
        .collect();
    let mut pair_tests: BTreeMap<(usize, usize), Tested> = BTreeMap::new();
    for a in 0..d {
        for b in a + 1..d {
            let forward = &states[index[&(LaggedVariable::new(a, 0), b)]];
            let backward = &states[index[&(LaggedVariable::new(b, 0), a)]];
            if !(forward.alive && backward.alive) {
                continue;
            }
            let weakest = match (forward.best, backward.best) {
                (Some((f, _)), Some((r, _))) => Some(if r.p_value > f.p_value { r } else { f }),
                (f, r) => f.or(r).map(|(t, _)| t),
            };
            if let Some(t) = weakest {
                pair_tests.insert((a, b), t);
            }
        }
    }
    let pairs: BTreeSet<(usize, usize)> = pair_tests.keys().copied().collect();
    let directions = orient(d, &lagged, &pairs, sepsets);

    let mut links: Vec<Link> = lagged
        .iter()
        .map(|&(source, target)| {
            let (t, _) = states[index[&(source, target)]].best.expect("kept links were tested");
            Link::directed(source, target, t.statistic, t.p_value)
        })
        .collect();
    for (&(a, b), t) in &pair_tests {
        links.push(match directions[&(a, b)] {
            Some((from, to)) => Link::directed(LaggedVariable::new(from, 0), to, t.statistic, t.p_value),
            None => Link {
                source: LaggedVariable::new(a, 0),
                target_var: b,
                orientation: Orientation::Unoriented,
                statistic: t.statistic,
                p_value: t.p_value,
            },
        });
    }
    CausalGraph::new(
        ctx.panel.subject_id(),
        ctx.panel.variable_names().to_vec(),
        ctx.config.tau_max,
        ctx.panel.resolution_seconds(),
        links,
    )
}
