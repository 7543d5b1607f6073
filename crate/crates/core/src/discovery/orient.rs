//! Orientation of contemporaneous edges by the collider rule.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::LaggedVariable;

/// Separating sets keyed by `(source, target_var)`, holding the
/// contemporaneous variables conditioned on when the link was removed. Lag-0
/// pairs are keyed with the smaller variable as source.
pub(crate) type Sepsets = BTreeMap<(LaggedVariable, usize), Vec<usize>>;

pub(crate) fn sepset_key(source: LaggedVariable, target: usize) -> (LaggedVariable, usize) {
    if source.lag == 0 && source.var_index > target {
        (LaggedVariable::new(target, 0), source.var_index)
    } else {
        (source, target)
    }
}

/// Decides a direction for each surviving contemporaneous pair `(a, b)`,
/// `a < b`. Returns `Some((from, to))` or `None` when undetermined.
///
/// For every unshielded triple whose middle node `k` is at lag 0 and is
/// missing from the separating set of the outer pair, both outer edges point
/// into `k`. Lagged edges are already directed by time order and only vote
/// on their contemporaneous partner edge. A pair that receives votes for both
/// directions stays undetermined, as does any edge on a directed cycle.
pub(crate) fn orient(
    d: usize,
    lagged: &BTreeSet<(LaggedVariable, usize)>,
    contemporaneous: &BTreeSet<(usize, usize)>,
    sepsets: &Sepsets,
) -> BTreeMap<(usize, usize), Option<(usize, usize)>> {
    let mut neighbours = vec![BTreeSet::new(); d];
    for &(a, b) in contemporaneous {
        neighbours[a].insert(b);
        neighbours[b].insert(a);
    }
    let adjacent = |a: usize, b: usize| contemporaneous.contains(&(a.min(b), a.max(b)));
    let separated_without = |source: LaggedVariable, target: usize, k: usize| {
        sepsets
            .get(&sepset_key(source, target))
            .is_some_and(|s| !s.contains(&k))
    };

    let mut votes: BTreeMap<(usize, usize), BTreeSet<(usize, usize)>> = BTreeMap::new();
    let mut vote = |from: usize, to: usize| {
        votes.entry((from.min(to), from.max(to))).or_default().insert((from, to));
    };
    for k in 0..d {
        let nb: Vec<usize> = neighbours[k].iter().copied().collect();
        for (x, &i) in nb.iter().enumerate() {
            for &j in &nb[x + 1..] {
                if !adjacent(i, j) && separated_without(LaggedVariable::new(i, 0), j, k) {
                    vote(i, k);
                    vote(j, k);
                }
            }
        }
    }
    for &(source, k) in lagged {
        for &j in &neighbours[k] {
            if !lagged.contains(&(source, j)) && separated_without(source, j, k) {
                vote(j, k);
            }
        }
    }

    let mut out: BTreeMap<(usize, usize), Option<(usize, usize)>> = contemporaneous
        .iter()
        .map(|&pair| {
            let dir = votes
                .get(&pair)
                .filter(|v| v.len() == 1)
                .and_then(|v| v.iter().next().copied());
            (pair, dir)
        })
        .collect();

    let directed: Vec<(usize, usize)> = out.values().flatten().copied().collect();
    let on_cycle: Vec<(usize, usize)> = directed
        .iter()
        .copied()
        .filter(|&(a, b)| reaches(&directed, b, a))
        .collect();
    for (a, b) in on_cycle {
        out.insert((a.min(b), a.max(b)), None);
    }
    out
}

fn reaches(edges: &[(usize, usize)], from: usize, to: usize) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for &(a, b) in edges {
            if a == v && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: usize, l: usize) -> LaggedVariable {
        LaggedVariable::new(v, l)
    }

    #[test]
    fn contemporaneous_collider() {
        // 0 - 1 - 2 with 0, 2 separated by the empty set
        let c = BTreeSet::from([(0, 1), (1, 2)]);
        let s = Sepsets::from([((lv(0, 0), 2), vec![])]);
        let o = orient(3, &BTreeSet::new(), &c, &s);
        assert_eq!(o[&(0, 1)], Some((0, 1)));
        assert_eq!(o[&(1, 2)], Some((2, 1)));
    }

    #[test]
    fn chain_stays_unoriented() {
        let c = BTreeSet::from([(0, 1), (1, 2)]);
        let s = Sepsets::from([((lv(0, 0), 2), vec![1])]);
        let o = orient(3, &BTreeSet::new(), &c, &s);
        assert_eq!(o[&(0, 1)], None);
        assert_eq!(o[&(1, 2)], None);
    }

    #[test]
    fn lagged_source_orients_into_collider() {
        // x0_{t-1} -> x1_t - x2_t, with x0_{t-1} and x2_t separated without x1
        let lagged = BTreeSet::from([(lv(0, 1), 1)]);
        let c = BTreeSet::from([(1, 2)]);
        let s = Sepsets::from([((lv(0, 1), 2), vec![])]);
        let o = orient(3, &lagged, &c, &s);
        assert_eq!(o[&(1, 2)], Some((2, 1)));
        // same triple separated by x1_t: no collider
        let s = Sepsets::from([((lv(0, 1), 2), vec![1])]);
        assert_eq!(orient(3, &lagged, &c, &s)[&(1, 2)], None);
    }

    #[test]
    fn conflicting_votes_leave_edge_unoriented() {
        // 0 -> 1 <- 2 and 1 -> 2 <- 3 both claim edge 1-2
        let c = BTreeSet::from([(0, 1), (1, 2), (2, 3)]);
        let s = Sepsets::from([((lv(0, 0), 2), vec![]), ((lv(1, 0), 3), vec![])]);
        let o = orient(4, &BTreeSet::new(), &c, &s);
        assert_eq!(o[&(1, 2)], None);
        assert_eq!(o[&(0, 1)], Some((0, 1)));
        assert_eq!(o[&(2, 3)], Some((3, 2)));
    }

    #[test]
    fn missing_sepset_casts_no_vote() {
        let c = BTreeSet::from([(0, 1), (1, 2)]);
        let o = orient(3, &BTreeSet::new(), &c, &Sepsets::new());
        assert!(o.values().all(Option::is_none));
    }

    #[test]
    fn sepset_keys_normalise_lag_zero() {
        assert_eq!(sepset_key(lv(3, 0), 1), (lv(1, 0), 3));
        assert_eq!(sepset_key(lv(3, 2), 1), (lv(3, 2), 1));
    }

    #[test]
    fn reachability() {
        let e = [(0, 1), (1, 2)];
        assert!(reaches(&e, 0, 2));
        assert!(!reaches(&e, 2, 0));
    }
}
