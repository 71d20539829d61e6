//! Independent brute-force oracles for the acceptance suite.
//!
//! Nothing here shares code with the library: the spanning tree is Kruskal
//! with union-find (the library uses Prim), and the energy and MMD sums are
//! written as direct loops over the defining formulas.

use ndarray::ArrayView2;

/// Euclidean distance between two rows given as slices.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Joins the two sets; false if they were already one.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Kruskal minimum spanning tree over the complete Euclidean graph.
///
/// Edges are ordered by (weight, smaller endpoint, larger endpoint), the
/// same strict total order the library documents, so the tree is unique and
/// must coincide with Prim's edge for edge.
pub fn kruskal_mst(points: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((dist(&points[i], &points[j]), i, j));
        }
    }
    edges.sort_unstable_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut sets = DisjointSet::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    for (_, i, j) in edges {
        if sets.union(i, j) {
            tree.push((i, j));
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    tree
}

fn to_rows(view: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    view.outer_iter().map(|r| r.to_vec()).collect()
}

/// Friedman-Rafsky statistic from the Kruskal tree: same-sample MST edge
/// count over n+m-2.
pub fn brute_frs(sx: ArrayView2<'_, f64>, tx: ArrayView2<'_, f64>) -> f64 {
    let n = sx.nrows();
    let mut pooled = to_rows(sx);
    pooled.extend(to_rows(tx));
    let same = kruskal_mst(&pooled)
        .into_iter()
        .filter(|&(u, v)| (u < n) == (v < n))
        .count();
    same as f64 / (pooled.len() - 2) as f64
}

/// Energy distance by direct double sums: 2·mean cross distance minus both
/// mean within distances, the within means taken over all ordered pairs.
pub fn brute_energy(sx: ArrayView2<'_, f64>, tx: ArrayView2<'_, f64>) -> f64 {
    let (s, t) = (to_rows(sx), to_rows(tx));
    let (n, m) = (s.len(), t.len());
    let mut cross = 0.0;
    for a in &s {
        for b in &t {
            cross += dist(a, b);
        }
    }
    let mut within_s = 0.0;
    for a in &s {
        for b in &s {
            within_s += dist(a, b);
        }
    }
    let mut within_t = 0.0;
    for a in &t {
        for b in &t {
            within_t += dist(a, b);
        }
    }
    2.0 * cross / (n * m) as f64 - within_s / (n * n) as f64 - within_t / (m * m) as f64
}

/// Unbiased Gaussian-kernel MMD by direct double sums: within-sample kernel
/// means over ordered pairs i != j, minus twice the cross mean.
pub fn brute_mmd(sx: ArrayView2<'_, f64>, tx: ArrayView2<'_, f64>, sigma: f64) -> f64 {
    let (s, t) = (to_rows(sx), to_rows(tx));
    let (n, m) = (s.len(), t.len());
    let kernel = |a: &[f64], b: &[f64]| {
        let d = dist(a, b);
        (-d * d / (2.0 * sigma * sigma)).exp()
    };
    let mut within_s = 0.0;
    for (i, a) in s.iter().enumerate() {
        for (j, b) in s.iter().enumerate() {
            if i != j {
                within_s += kernel(a, b);
            }
        }
    }
    let mut within_t = 0.0;
    for (i, a) in t.iter().enumerate() {
        for (j, b) in t.iter().enumerate() {
            if i != j {
                within_t += kernel(a, b);
            }
        }
    }
    let mut cross = 0.0;
    for a in &s {
        for b in &t {
            cross += kernel(a, b);
        }
    }
    within_s / (n * (n - 1)) as f64 + within_t / (m * (m - 1)) as f64
        - 2.0 * cross / (n * m) as f64
}
