//! A k-d tree over the max-norm (Chebyshev) metric, specialised for the two
//! queries the kNN estimator needs: distance to the k-th nearest neighbour and
//! the number of points strictly inside a radius.

const LEAF_SIZE: usize = 12;
const NO_SPLIT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: u32,
    end: u32,
    /// `NO_SPLIT` marks a leaf.
    split_dim: u32,
    split: f64,
    left: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    /// Row-major `n × dim` coordinates.
    points: Vec<f64>,
    index: Vec<u32>,
    nodes: Vec<Node>,
}

#[inline]
pub(crate) fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

impl KdTree {
    /// Builds a tree from row-major coordinates. `dim` must be positive.
    pub fn new(points: Vec<f64>, dim: usize) -> Self {
        assert!(dim > 0, "k-d tree needs at least one dimension");
        assert_eq!(points.len() % dim, 0);
        let n = points.len() / dim;
        let mut tree = Self {
            dim,
            points,
            index: (0..n as u32).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    /// Gathers the given columns into a tree.
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let n = columns.first().map_or(0, |c| c.len());
        let mut points = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            points.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(points, columns.len())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn coord(&self, i: u32, d: usize) -> f64 {
        self.points[i as usize * self.dim + d]
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            split_dim: NO_SPLIT,
            split: 0.0,
            left: 0,
            right: 0,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let (mut best_dim, mut best_spread) = (0, 0.0);
        for d in 0..self.dim {
            let (lo, hi) = self.index[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let c = self.coord(i, d);
                    (lo.min(c), hi.max(c))
                },
            );
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if !(best_spread > 0.0) {
            return id;
        }
        let mid = (start + end) / 2;
        let dim = self.dim;
        let points = &self.points;
        self.index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize * dim + best_dim].total_cmp(&points[b as usize * dim + best_dim])
        });
        let split = self.coord(self.index[mid], best_dim);
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        let node = &mut self.nodes[id as usize];
        node.split_dim = best_dim as u32;
        node.split = split;
        node.left = left;
        node.right = right;
        id
    }

    /// The `k` nearest points to `query` as `(distance, index)` pairs in
    /// ascending order, ties broken by index. `exclude` removes one point
    /// (typically the query itself) from consideration.
    pub fn k_nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.knn_node(0, query, k, exclude, &mut best);
        }
        best
    }

    /// Distance from point `i` to its `k`-th nearest other point.
    pub fn kth_neighbor_distance(&self, i: usize, k: usize) -> f64 {
        let found = self.k_nearest(self.point(i), k, Some(i));
        found.last().map_or(f64::INFINITY, |&(d, _)| d)
    }

    fn knn_node(
        &self,
        node: u32,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        best: &mut Vec<(f64, usize)>,
    ) {
        let n = self.nodes[node as usize];
        if n.split_dim == NO_SPLIT {
            for &i in &self.index[n.start as usize..n.end as usize] {
                let i = i as usize;
                if Some(i) == exclude {
                    continue;
                }
                let d = max_norm(query, self.point(i));
                let full = best.len() == k;
                if full && (d, i) >= best[k - 1] {
                    continue;
                }
                let pos = best.partition_point(|e| *e < (d, i));
                best.insert(pos, (d, i));
                best.truncate(k);
            }
            return;
        }
        let diff = query[n.split_dim as usize] - n.split;
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.knn_node(near, query, k, exclude, best);
        if best.len() < k || diff.abs() <= best[k - 1].0 {
            self.knn_node(far, query, k, exclude, best);
        }
    }

    /// Number of points `p` with `max_norm(query, p) < radius` (strict). The
    /// query point itself is counted when it belongs to the tree.
    pub fn count_within(&self, query: &[f64], radius: f64) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        self.count_node(0, query, radius)
    }

    fn count_node(&self, node: u32, query: &[f64], radius: f64) -> usize {
        let n = self.nodes[node as usize];
        if n.split_dim == NO_SPLIT {
            return self.index[n.start as usize..n.end as usize]
                .iter()
                .filter(|&&i| max_norm(query, self.point(i as usize)) < radius)
                .count();
        }
        let q = query[n.split_dim as usize];
        let mut count = 0;
        // left holds coordinates <= split, right holds coordinates >= split
        if q - n.split < radius {
            count += self.count_node(n.left, query, radius);
        }
        if n.split - q < radius {
            count += self.count_node(n.right, query, radius);
        }
        count
    }
}
