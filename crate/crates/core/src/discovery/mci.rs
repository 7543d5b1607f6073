//! Momentary conditional independence tests of lagged links.

use rayon::prelude::*;

use super::{test_seed, Ctx, DiscoveryConfig, Outcome, ParentSuperset, STAGE_MCI};
use crate::graph::{CausalGraph, LaggedVariable, Link};
use crate::panel::TimeSeriesPanel;
use crate::{Error, Result};

/// Tests every link `X^i_{t-τ} → X^j_t` whose source is in the superset of
/// `X^j_t`, conditional on that superset without the source and on the
/// superset of `X^i_t` shifted back by `τ`. A link enters the graph iff its
/// p-value is below `alpha`; links whose test cannot be run are left out.
pub fn mci_stage(
    panel: &TimeSeriesPanel,
    supersets: &[ParentSuperset],
    config: &DiscoveryConfig,
) -> Result<CausalGraph> {
    let ctx = Ctx::new(panel, config)?;
    let parents = superset_nodes(&ctx, supersets)?;
    let candidates: Vec<(LaggedVariable, usize)> = parents
        .iter()
        .enumerate()
        .flat_map(|(j, nodes)| nodes.iter().map(move |&source| (source, j)))
        .collect();
    let outcomes = candidates
        .par_iter()
        .map(|&(source, target)| {
            let z = ctx.mci_conditions(&parents, source, target);
            ctx.test(source, target, &z, mci_seed(config, source, target, 0, 0))
        })
        .collect::<Result<Vec<_>>>()?;
    let links = candidates
        .into_iter()
        .zip(outcomes)
        .filter_map(|((source, target), outcome)| match outcome {
            Outcome::Tested(t) if t.p_value < config.alpha => {
                Some(Link::directed(source, target, t.statistic, t.p_value))
            }
            _ => None,
        })
        .collect();
    CausalGraph::new(
        panel.subject_id(),
        panel.variable_names().to_vec(),
        config.tau_max,
        panel.resolution_seconds(),
        links,
    )
}

pub(crate) fn mci_seed(
    config: &DiscoveryConfig,
    source: LaggedVariable,
    target: usize,
    level: usize,
    combo: usize,
) -> u64 {
    test_seed(
        config.seed,
        &[
            STAGE_MCI,
            target as u64,
            source.var_index as u64,
            source.lag as u64,
            level as u64,
            combo as u64,
        ],
    )
}

/// Checks that there is one superset per variable, in order, and returns
/// their node lists.
pub(crate) fn superset_nodes(ctx: &Ctx, supersets: &[ParentSuperset]) -> Result<Vec<Vec<LaggedVariable>>> {
    if supersets.len() != ctx.d() {
        return Err(Error::Argument(format!(
            "{} supersets for {} variables",
            supersets.len(),
            ctx.d()
        )));
    }
    supersets
        .iter()
        .enumerate()
        .map(|(j, s)| {
            if s.target != LaggedVariable::new(j, 0) {
                return Err(Error::Argument(format!("superset {j} targets {:?}", s.target)));
            }
            let nodes: Vec<LaggedVariable> = s.nodes().collect();
            if let Some(bad) = nodes
                .iter()
                .find(|n| n.var_index >= ctx.d() || n.lag == 0 || n.lag > ctx.config.tau_max)
            {
                return Err(Error::Argument(format!(
                    "superset {j} holds invalid node {}@{}",
                    bad.var_index, bad.lag
                )));
            }
            Ok(nodes)
        })
        .collect()
}
