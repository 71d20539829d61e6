//! Dense-graph minimum spanning tree with a deterministic tie rule.
//!
//! Edges are ordered by (weight, smaller endpoint, larger endpoint). That is
//! a strict total order (no two edges compare equal), so the MST under it is
//! unique and any correct algorithm must return the same edge set. Production
//! uses Prim with a dense O(N²) scan; the test suite checks it against an
//! independently written Kruskal.

use ndarray::ArrayView2;

/// Plain Euclidean distance between two rows.
pub(crate) fn euclid(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Compares candidate edges by (weight, min endpoint, max endpoint).
fn edge_less(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    (a.0, a.1, a.2) < (b.0, b.1, b.2)
}

/// Minimum spanning tree of the complete Euclidean graph on `points`.
///
/// Returns N-1 edges as (smaller index, larger index) pairs, sorted. Expects
/// N >= 2 finite rows; the caller validates.
pub(crate) fn prim_mst(points: ArrayView2<'_, f64>) -> Vec<(usize, usize)> {
    let n = points.nrows();
    debug_assert!(n >= 2);
    // best[v] = cheapest edge (weight, min, max) joining v to the tree
    let mut in_tree = vec![false; n];
    let mut best: Vec<(f64, usize, usize)> = vec![(f64::INFINITY, usize::MAX, usize::MAX); n];
    let mut edges = Vec::with_capacity(n - 1);

    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if !in_tree[v] {
                let w = euclid(points.row(current), points.row(v));
                let cand = (w, current.min(v), current.max(v));
                if edge_less(cand, best[v]) {
                    best[v] = cand;
                }
            }
        }
        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| {
                if edge_less(best[a], best[b]) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            })
            .expect("loop runs once per remaining vertex");
        in_tree[next] = true;
        edges.push((best[next].1, best[next].2));
        current = next;
    }
    edges.sort_unstable();
    edges
}
