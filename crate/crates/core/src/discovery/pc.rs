//! Parent-superset search for one target variable.

use rayon::prelude::*;

use super::{test_seed, Candidate, Ctx, DiscoveryConfig, Outcome, ParentSuperset, STAGE_PC};
use crate::graph::LaggedVariable;
use crate::panel::TimeSeriesPanel;
use crate::Result;

/// Estimates a superset of the lagged parents of `X^target_var_t`.
///
/// Starts from every `(var, lag)` with `lag ∈ [1, tau_max]`. At subset size
/// `q = 0, 1, ...` each candidate is tested conditional on the first `q` other
/// candidates in the current order, candidates with `p ≥ pc_alpha` are dropped
/// after the sweep, and the rest are re-sorted by their smallest absolute
/// statistic so far (ties: smaller lag, then smaller variable index). Stops
/// once `q` reaches the number of remaining candidates or exceeds `q_max` or
/// the conditioning cap.
pub fn pc_stage(panel: &TimeSeriesPanel, target_var: usize, config: &DiscoveryConfig) -> Result<ParentSuperset> {
    let ctx = Ctx::new(panel, config)?;
    ctx.check_var(target_var)?;
    superset(&ctx, target_var)
}

pub(crate) fn superset(ctx: &Ctx, target: usize) -> Result<ParentSuperset> {
    search(ctx, target).map(|(s, _)| s)
}

/// The superset together with the dropped candidates and the outcome that
/// dropped each one.
pub(crate) fn search(ctx: &Ctx, target: usize) -> Result<(ParentSuperset, Vec<(LaggedVariable, Outcome)>)> {
    let config = ctx.config;
    let alpha = config.pc_alpha();
    let cap = config.condition_cap();
    let mut entries: Vec<Candidate> = (1..=config.tau_max)
        .flat_map(|lag| (0..ctx.d()).map(move |var| LaggedVariable::new(var, lag)))
        .map(|node| Candidate {
            node,
            statistic: f64::INFINITY,
            p_value: 0.0,
        })
        .collect();

    let mut removed = Vec::new();
    for q in 0usize.. {
        if entries.is_empty() || (q > 0 && q >= entries.len()) {
            break;
        }
        if config.q_max.is_some_and(|m| q > m) || cap.is_some_and(|m| q > m) {
            break;
        }
        let outcomes = (0..entries.len())
            .into_par_iter()
            .map(|c| {
                let node = entries[c].node;
                let z: Vec<LaggedVariable> = entries
                    .iter()
                    .enumerate()
                    .filter(|&(o, _)| o != c)
                    .take(q)
                    .map(|(_, e)| e.node)
                    .collect();
                let seed = test_seed(
                    config.seed,
                    &[STAGE_PC, target as u64, node.var_index as u64, node.lag as u64, q as u64],
                );
                ctx.test(node, target, &z, seed)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut any_tested = false;
        let mut kept = Vec::with_capacity(entries.len());
        for (mut e, outcome) in entries.into_iter().zip(outcomes) {
            match outcome {
                Outcome::Tested(t) => {
                    any_tested = true;
                    e.statistic = e.statistic.min(t.statistic.abs());
                    e.p_value = e.p_value.max(t.p_value);
                    if t.p_value < alpha {
                        kept.push(e);
                    } else {
                        removed.push((e.node, Outcome::Tested(t)));
                    }
                }
                // undecidable with no conditions: no evidence of dependence
                Outcome::Skipped(reason) if q == 0 => removed.push((e.node, Outcome::Skipped(reason))),
                Outcome::Skipped(_) => kept.push(e),
            }
        }
        sort_candidates(&mut kept);
        entries = kept;
        if !any_tested {
            break;
        }
    }
    let superset = ParentSuperset {
        target: LaggedVariable::new(target, 0),
        candidates: entries,
    };
    Ok((superset, removed))
}

fn sort_candidates(entries: &mut [Candidate]) {
    entries.sort_by(|a, b| {
        b.statistic
            .total_cmp(&a.statistic)
            .then(a.node.lag.cmp(&b.node.lag))
            .then(a.node.var_index.cmp(&b.node.var_index))
    });
}
