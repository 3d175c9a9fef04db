//! Random graph generators shared by unit, integration and acceptance tests.

use rand::Rng;

use crate::graph::AttributedGraph;

/// Random graph on exactly `n ≥ 2` nodes with every degree in `1..=max_degree`.
///
/// Each node `i > 0` first attaches to an earlier node with spare capacity,
/// then extra random edges are added while the bound allows. Features are
/// uniform in `[0, 1]`, or multiples of `2^-20` when `dyadic` is set.
pub fn random_bounded_graph<R: Rng>(rng: &mut R, n: usize, max_degree: usize, dyadic: bool) -> AttributedGraph {
    assert!(n >= 2 && max_degree >= 2);
    let mut degree = vec![0usize; n];
    let mut edges = std::collections::BTreeSet::new();
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| degree[j] < max_degree).collect();
        let j = open[rng.random_range(0..open.len())];
        edges.insert((j, i));
        degree[i] += 1;
        degree[j] += 1;
    }
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        let key = (u.min(v), u.max(v));
        if u == v || degree[u] >= max_degree || degree[v] >= max_degree || edges.contains(&key) {
            continue;
        }
        edges.insert(key);
        degree[u] += 1;
        degree[v] += 1;
    }
    let features = (0..n)
        .map(|_| {
            if dyadic {
                rng.random_range(0..=(1u32 << 20)) as f64 / (1u32 << 20) as f64
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let edges: Vec<_> = edges.into_iter().collect();
    AttributedGraph::from_indexed_edges(n, &edges, features).expect("generator keeps every node connected")
}
