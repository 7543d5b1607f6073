//! Neighbour counts for the kNN conditional-mutual-information estimator.

use super::kdtree::KdTree;
use crate::{Error, Result};

/// Per-sample quantities entering the kNN CMI estimate.
///
/// `eps[i]` is the max-norm distance from sample `i` to its `k`-th nearest
/// neighbour in the joint space. The counts give the number of samples strictly
/// closer than `eps[i]` in the `(z)`, `(x, z)` and `(y, z)` subspaces, sample `i`
/// itself included, so every count is at least 1. With an empty `z`, `k_z = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborCounts {
    pub k: usize,
    pub eps: Vec<f64>,
    pub k_z: Vec<usize>,
    pub k_xz: Vec<usize>,
    pub k_yz: Vec<usize>,
}

impl NeighborCounts {
    pub fn n(&self) -> usize {
        self.eps.len()
    }
}

fn check_partition(n_cols: usize, sets: [&[usize]; 3]) -> Result<()> {
    let mut seen = vec![false; n_cols];
    for &c in sets.iter().flat_map(|s| s.iter()) {
        if c >= n_cols || std::mem::replace(&mut seen[c], true) {
            return Err(Error::Argument(format!(
                "dimension {c} is out of range or listed twice"
            )));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Argument(
            "x, y and z dimensions must cover every column".into(),
        ));
    }
    if sets[0].is_empty() || sets[1].is_empty() {
        return Err(Error::Argument("x and y need at least one dimension".into()));
    }
    Ok(())
}

/// Computes [`NeighborCounts`] for the samples in `joint` (given as columns),
/// whose columns are split into the disjoint sets `dims_x`, `dims_y`, `dims_z`.
pub fn neighbor_counts(
    joint: &[&[f64]],
    dims_x: &[usize],
    dims_y: &[usize],
    dims_z: &[usize],
    k: usize,
) -> Result<NeighborCounts> {
    check_partition(joint.len(), [dims_x, dims_y, dims_z])?;
    let n = joint[0].len();
    if joint.iter().any(|c| c.len() != n) {
        return Err(Error::Argument("columns differ in length".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::Argument(format!("k must satisfy 1 <= k < n (k={k}, n={n})")));
    }
    let pick = |dims: &[usize]| -> Vec<&[f64]> { dims.iter().map(|&d| joint[d]).collect() };
    let x = pick(dims_x);
    let y = pick(dims_y);
    let z = pick(dims_z);
    let subspaces = Subspaces::new(&y, &z);
    Ok(subspaces.counts(&x, k))
}

/// Trees over the `(z)` and `(y, z)` subspaces, which stay fixed while `x` is
/// permuted in the shuffle test.
pub(crate) struct Subspaces<'a> {
    y: Vec<&'a [f64]>,
    z: Vec<&'a [f64]>,
    z_tree: Option<KdTree>,
    yz_tree: KdTree,
}

impl<'a> Subspaces<'a> {
    pub fn new(y: &[&'a [f64]], z: &[&'a [f64]]) -> Self {
        let yz: Vec<&[f64]> = y.iter().chain(z).copied().collect();
        Self {
            y: y.to_vec(),
            z: z.to_vec(),
            z_tree: (!z.is_empty()).then(|| KdTree::from_columns(z)),
            yz_tree: KdTree::from_columns(&yz),
        }
    }

    pub fn z_tree(&self) -> Option<&KdTree> {
        self.z_tree.as_ref()
    }

    pub fn counts(&self, x: &[&[f64]], k: usize) -> NeighborCounts {
        let n = self.yz_tree.len();
        let joint_cols: Vec<&[f64]> = x.iter().chain(&self.y).chain(&self.z).copied().collect();
        let xz_cols: Vec<&[f64]> = x.iter().chain(&self.z).copied().collect();
        let joint = KdTree::from_columns(&joint_cols);
        let xz = KdTree::from_columns(&xz_cols);
        let dx = x.len();
        let dy = self.y.len();

        let mut out = NeighborCounts {
            k,
            eps: Vec::with_capacity(n),
            k_z: Vec::with_capacity(n),
            k_xz: Vec::with_capacity(n),
            k_yz: Vec::with_capacity(n),
        };
        let mut yz_point = Vec::with_capacity(dy + self.z.len());
        for i in 0..n {
            let p = joint.point(i);
            let eps = joint.kth_neighbor_distance(i, k);
            let z_part = &p[dx + dy..];
            out.k_z.push(match &self.z_tree {
                Some(t) => t.count_within(z_part, eps).max(1),
                None => n,
            });
            out.k_xz.push(xz.count_within(xz.point(i), eps).max(1));
            yz_point.clear();
            yz_point.extend_from_slice(&p[dx..]);
            out.k_yz.push(self.yz_tree.count_within(&yz_point, eps).max(1));
            out.eps.push(eps);
        }
        out
    }
}
