//! kNN conditional mutual information and its local-permutation shuffle test.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::knn::{NeighborCounts, Subspaces};
use super::special::digamma_table;
use super::{CITestResult, TestName};
use crate::{Error, Result};

/// Relative amplitude of the tie-breaking jitter.
const JITTER_SCALE: f64 = 1e-10;
/// Seed of the jitter applied by [`cmi_knn_estimate`].
const ESTIMATE_JITTER_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmiParams {
    /// Neighbours in the joint space.
    pub k: usize,
    pub n_shuffles: usize,
    /// Size of the z-neighbourhood a sample may draw its permuted `x` from.
    pub k_perm: usize,
}

impl Default for CmiParams {
    fn default() -> Self {
        Self {
            k: 10,
            n_shuffles: 200,
            k_perm: 5,
        }
    }
}

fn check_inputs(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]], k: usize) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Argument("x and y need at least one column".into()));
    }
    let n = x[0].len();
    if x.iter().chain(y).chain(z).any(|c| c.len() != n) {
        return Err(Error::Argument("x, y and z must have equal lengths".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::Argument(format!("k must satisfy 1 <= k < n (k={k}, n={n})")));
    }
    Ok(n)
}

/// Adds uniform noise of amplitude `1e-10 · sd` to every column so that no two
/// samples are at exactly the same distance.
fn jitter(columns: &[&[f64]], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| {
            let sd = crate::stats::population_variance(c).sqrt();
            let scale = if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
            };
            let amp = JITTER_SCALE * scale;
            c.iter().map(|v| v + amp * rng.random_range(-1.0..1.0)).collect()
        })
        .collect()
}

fn as_slices(cols: &[Vec<f64>]) -> Vec<&[f64]> {
    cols.iter().map(Vec::as_slice).collect()
}

/// Î(X;Y|Z) = ψ(k) + mean over samples of ψ(k_z) − ψ(k_xz) − ψ(k_yz), in nats.
pub(crate) fn estimate_from_counts(counts: &NeighborCounts, psi: &[f64]) -> f64 {
    let n = counts.n() as f64;
    let sum: f64 = (0..counts.n())
        .map(|i| psi[counts.k_z[i]] - psi[counts.k_xz[i]] - psi[counts.k_yz[i]])
        .sum();
    psi[counts.k] + sum / n
}

/// kNN estimate of the conditional mutual information between `x` and `y`
/// given `z`, each given as a list of columns. `z` may be empty.
///
/// Distances use the max-norm. A fixed-seed jitter breaks ties, so the result
/// is deterministic.
pub fn cmi_knn_estimate(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]], k: usize) -> Result<f64> {
    let n = check_inputs(x, y, z, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ESTIMATE_JITTER_SEED);
    let (xj, yj, zj) = (jitter(x, &mut rng), jitter(y, &mut rng), jitter(z, &mut rng));
    let (ys, zs) = (as_slices(&yj), as_slices(&zj));
    let subspaces = Subspaces::new(&ys, &zs);
    let counts = subspaces.counts(&as_slices(&xj), k);
    Ok(estimate_from_counts(&counts, &digamma_table(n)))
}

/// Shuffle test of `x ⊥ y | z` with the kNN CMI estimate as statistic.
///
/// Null samples permute `x` locally: each sample takes the `x` of one of its
/// `k_perm` nearest neighbours in `z`, preferring neighbours not yet used.
/// With an empty `z` this is a plain permutation. The p-value is
/// `(1 + #{null ≥ observed}) / (1 + n_shuffles)`.
pub fn cmi_knn_test(
    x: &[&[f64]],
    y: &[&[f64]],
    z: &[&[f64]],
    params: &CmiParams,
    seed: u64,
) -> Result<CITestResult> {
    let n = check_inputs(x, y, z, params.k)?;
    if params.n_shuffles == 0 {
        return Err(Error::Argument("n_shuffles must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xj, yj, zj) = (jitter(x, &mut rng), jitter(y, &mut rng), jitter(z, &mut rng));
    let (ys, zs) = (as_slices(&yj), as_slices(&zj));
    let subspaces = Subspaces::new(&ys, &zs);
    let psi = digamma_table(n);

    let observed = estimate_from_counts(&subspaces.counts(&as_slices(&xj), params.k), &psi);

    let neighbours: Option<Vec<Vec<usize>>> = subspaces.z_tree().map(|tree| {
        let kp = params.k_perm.clamp(1, n);
        (0..n)
            .map(|i| tree.k_nearest(tree.point(i), kp, None).into_iter().map(|(_, j)| j).collect())
            .collect()
    });

    let mut exceed = 0usize;
    let mut permuted: Vec<Vec<f64>> = vec![vec![0.0; n]; xj.len()];
    for _ in 0..params.n_shuffles {
        let perm = match &neighbours {
            Some(nb) => local_permutation(nb, &mut rng),
            None => {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                p
            }
        };
        for (dst, src) in permuted.iter_mut().zip(&xj) {
            for (d, &j) in dst.iter_mut().zip(&perm) {
                *d = src[j];
            }
        }
        let null = estimate_from_counts(&subspaces.counts(&as_slices(&permuted), params.k), &psi);
        if null >= observed {
            exceed += 1;
        }
    }
    Ok(CITestResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + params.n_shuffles) as f64,
        n,
        test_name: TestName::CmiKnn,
    })
}

/// Draws a permutation-like index map in which sample `i` receives the index of
/// one of its z-neighbours. Samples are visited in random order and take the
/// first unused neighbour from a shuffled neighbour list, falling back to the
/// last candidate when all are taken.
fn local_permutation(neighbours: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = neighbours.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut used = vec![false; n];
    let mut out = vec![0; n];
    let mut candidates = Vec::new();
    for i in order {
        candidates.clear();
        candidates.extend_from_slice(&neighbours[i]);
        candidates.shuffle(rng);
        let pick = candidates
            .iter()
            .copied()
            .find(|&j| !used[j])
            .unwrap_or(candidates[candidates.len() - 1]);
        used[pick] = true;
        out[i] = pick;
    }
    out
}
