//! Immutable attributed interaction network with adjacency-list query access.
//!
//! Nodes carry a scalar feature in `[0, 1]` and an optional label. Adjacency
//! lists are strictly ascending, so the `ℓ`-th neighbor of a node is well
//! defined and reproducible. Two-hop quantities follow walk semantics: every
//! walk `v → u → w` counts once, backtracking walks included.

pub mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
    Unlabeled,
}

/// Answer of a neighbor query: a node index, or the out-of-range flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborResult {
    Node(usize),
    Flag,
}

impl NeighborResult {
    pub fn node(self) -> Option<usize> {
        match self {
            NeighborResult::Node(u) => Some(u),
            NeighborResult::Flag => None,
        }
    }
}

/// Hop order of a neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    One,
    Two,
}

impl Hop {
    pub const BOTH: [Hop; 2] = [Hop::One, Hop::Two];

    /// `0` for the immediate neighborhood, `1` for the two-hop one; this is the
    /// value of the hop-control qubit in the embedding circuit.
    pub fn bit(self) -> usize {
        match self {
            Hop::One => 0,
            Hop::Two => 1,
        }
    }
}

impl TryFrom<u8> for Hop {
    type Error = Error;

    fn try_from(c: u8) -> Result<Self> {
        match c {
            1 => Ok(Hop::One),
            2 => Ok(Hop::Two),
            other => Err(Error::InvalidHop(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    ids: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    raw_features: Vec<f64>,
    features: Vec<f64>,
    labels: Vec<Label>,
    max_degree_bound: usize,
}

/// Sorts node ids numerically when every id is an integer, lexicographically
/// otherwise.
fn sort_ids(ids: &mut [String]) {
    let numeric: Option<Vec<i128>> = ids.iter().map(|s| s.parse::<i128>().ok()).collect();
    if numeric.is_some() {
        ids.sort_by_key(|s| s.parse::<i128>().unwrap());
    } else {
        ids.sort();
    }
}

/// Builds the network from raw interaction records.
///
/// Duplicate and reversed edges collapse, self-loops are dropped, nodes without
/// a feature value are removed, and nodes left isolated afterwards are removed
/// too. Indices follow ascending original-id order; features are min-max
/// normalized over the surviving nodes.
pub fn build_graph<S: AsRef<str>>(
    edges: &[(S, S)],
    raw_features: &HashMap<String, f64>,
    positives: Option<&HashSet<String>>,
) -> Result<AttributedGraph> {
    let mut undirected: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (a, b) in edges {
        let (a, b) = (a.as_ref(), b.as_ref());
        if a == b {
            continue;
        }
        if !raw_features.contains_key(a) || !raw_features.contains_key(b) {
            continue;
        }
        undirected.insert(if a < b { (a, b) } else { (b, a) });
    }

    let mut ids: Vec<String> = undirected
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    if ids.is_empty() {
        return Err(Error::NoUsableNodes);
    }
    sort_ids(&mut ids);

    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut adjacency = vec![Vec::new(); ids.len()];
    for &(a, b) in &undirected {
        let (u, v) = (index[a], index[b]);
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    let mut raw = Vec::with_capacity(ids.len());
    for id in &ids {
        let x = raw_features[id];
        if !x.is_finite() {
            return Err(Error::NonFiniteFeature { node: id.clone() });
        }
        raw.push(x);
    }
    let features = normalize_features(&raw)?;
    let labels = ids
        .iter()
        .map(|id| match positives {
            Some(p) if p.contains(id) => Label::Positive,
            _ => Label::Unlabeled,
        })
        .collect();

    AttributedGraph::assemble(ids, adjacency, raw, features, labels)
}

/// Min-max scaling into `[0, 1]`; a constant input maps to `0.5` everywhere.
pub fn normalize_features(raw: &[f64]) -> Result<Vec<f64>> {
    if let Some(pos) = raw.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteFeature {
            node: pos.to_string(),
        });
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    if max == min {
        return Ok(vec![0.5; raw.len()]);
    }
    let span = max - min;
    Ok(raw.iter().map(|&x| ((x - min) / span).clamp(0.0, 1.0)).collect())
}

impl AttributedGraph {
    /// Builds a graph over indices `0..n` with features already in `[0, 1]`.
    /// Node ids are the decimal indices; no normalization is applied. Every
    /// node must end up with at least one neighbor.
    pub fn from_indexed_edges(n: usize, edges: &[(usize, usize)], features: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoUsableNodes);
        }
        if features.len() != n {
            return Err(Error::DimensionMismatch {
                left: features.len(),
                right: n,
            });
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::NodeOutOfRange { index: w, node_count: n });
                }
            }
            if u != v {
                sets[u].insert(v);
                sets[v].insert(u);
            }
        }
        for (i, x) in features.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteFeature { node: i.to_string() });
            }
            if !(0.0..=1.0).contains(x) {
                return Err(Error::InvalidArgument(format!("feature of node {i} is {x}, expected [0, 1]")));
            }
        }
        let adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::assemble(ids, adjacency, features.clone(), features, vec![Label::Unlabeled; n])
    }

    pub(crate) fn assemble(
        ids: Vec<String>,
        adjacency: Vec<Vec<usize>>,
        raw_features: Vec<f64>,
        features: Vec<f64>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if let Some(v) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!("node {} is isolated", ids[v])));
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(1);
        Ok(Self {
            ids,
            adjacency,
            raw_features,
            features,
            labels,
            max_degree_bound: max_degree.next_power_of_two(),
        })
    }

    /// Returns a copy with node labels replaced.
    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: self.node_count(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    #[cfg(test)]
    pub(crate) fn with_features_unchecked(mut self, features: Vec<f64>) -> Self {
        self.features = features;
        self
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Degree bound `s`: the smallest power of two not below the maximum degree.
    pub fn max_degree_bound(&self) -> usize {
        self.max_degree_bound
    }

    /// `log2(s)`.
    pub fn degree_bits(&self) -> u32 {
        self.max_degree_bound.trailing_zeros()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn feature(&self, v: usize) -> f64 {
        self.features[v]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn raw_features(&self) -> &[f64] {
        &self.raw_features
    }

    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn positives(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| self.labels[v] == Label::Positive)
            .collect()
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: v,
                node_count: self.node_count(),
            })
        }
    }

    /// `r(v, ℓ)`: the `ℓ`-th neighbor of `v` in ascending order, or the flag.
    pub fn neighbor_query(&self, v: usize, slot: usize) -> Result<NeighborResult> {
        self.check(v)?;
        Ok(match self.adjacency[v].get(slot) {
            Some(&u) => NeighborResult::Node(u),
            None => NeighborResult::Flag,
        })
    }

    /// Size of the hop-`c` neighborhood: the degree for `c = 1`, the number of
    /// two-hop walks (sum of neighbor degrees) for `c = 2`.
    pub fn degree_query(&self, v: usize, c: u8) -> Result<usize> {
        let hop = Hop::try_from(c)?;
        self.check(v)?;
        Ok(self.hop_size(v, hop))
    }

    pub(crate) fn hop_size(&self, v: usize, hop: Hop) -> usize {
        match hop {
            Hop::One => self.adjacency[v].len(),
            Hop::Two => self.adjacency[v].iter().map(|&u| self.adjacency[u].len()).sum(),
        }
    }

    /// Endpoints `w` of all walks `v → u → w`, with multiplicity, in walk order.
    pub fn two_hop_walk_endpoints(&self, v: usize) -> Result<Vec<usize>> {
        self.check(v)?;
        Ok(self.adjacency[v]
            .iter()
            .flat_map(|&u| self.adjacency[u].iter().copied())
            .collect())
    }

    /// Distinct two-hop nodes (set reading of the two-hop neighborhood). Not
    /// used by the embedding, which follows walk multiplicity.
    pub fn two_hop_set(&self, v: usize) -> Result<BTreeSet<usize>> {
        Ok(self.two_hop_walk_endpoints(v)?.into_iter().collect())
    }

    /// Undirected edges as ascending index pairs `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// Raw feature map keyed by node id, as accepted by [`build_graph`].
    pub fn raw_feature_map(&self) -> HashMap<String, f64> {
        self.ids.iter().cloned().zip(self.raw_features.iter().copied()).collect()
    }

    /// Counts of nodes per label.
    pub fn label_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for l in &self.labels {
            let key = match l {
                Label::Positive => "positive",
                Label::Negative => "negative",
                Label::Unlabeled => "unlabeled",
            };
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Path `0 – 1 – 2` with features `[0.2, 0.5, 1.0]`.
    pub fn path() -> AttributedGraph {
        AttributedGraph::from_indexed_edges(3, &[(0, 1), (1, 2)], vec![0.2, 0.5, 1.0]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::path;
    use super::*;
    use proptest::prelude::*;

    fn s(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn build_dedups_and_normalizes() {
        let edges = vec![s("a", "b"), s("b", "a"), s("b", "c")];
        let feats: HashMap<String, f64> = [("a", 2.0), ("b", 4.0), ("c", 6.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let g = build_graph(&edges, &feats, None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.max_degree_bound(), 2);
        assert_eq!(g.features(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.ids(), &["a", "b", "c"]);
    }

    #[test]
    fn self_loop_only_is_unusable() {
        let feats: HashMap<String, f64> = [("a".to_string(), 1.0)].into_iter().collect();
        let err = build_graph(&[s("a", "a")], &feats, None).unwrap_err();
        assert_eq!(err.to_string(), "no usable nodes");
    }

    #[test]
    fn nodes_without_feature_are_dropped() {
        let edges = vec![s("a", "b"), s("b", "c"), s("c", "d")];
        let feats: HashMap<String, f64> = [("a", 1.0), ("b", 2.0), ("c", 3.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let g = build_graph(&edges, &feats, None).unwrap();
        assert_eq!(g.ids(), &["a", "b", "c"]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn non_finite_feature_names_node() {
        let edges = vec![s("a", "b")];
        let feats: HashMap<String, f64> = [("a", 1.0), ("b", f64::NAN)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        match build_graph(&edges, &feats, None).unwrap_err() {
            Error::NonFiniteFeature { node } => assert_eq!(node, "b"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn numeric_ids_sort_numerically() {
        let edges = vec![s("10", "9"), s("9", "100")];
        let feats: HashMap<String, f64> = [("9", 1.0), ("10", 2.0), ("100", 3.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let g = build_graph(&edges, &feats, None).unwrap();
        assert_eq!(g.ids(), &["9", "10", "100"]);
    }

    #[test]
    fn labels_from_positive_set() {
        let edges = vec![s("a", "b")];
        let feats: HashMap<String, f64> = [("a", 1.0), ("b", 2.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let pos: HashSet<String> = ["b".to_string(), "zz".to_string()].into_iter().collect();
        let g = build_graph(&edges, &feats, Some(&pos)).unwrap();
        assert_eq!(g.labels(), &[Label::Unlabeled, Label::Positive]);
        assert_eq!(g.positives(), vec![1]);
    }

    #[test]
    fn neighbor_queries_on_path() {
        let g = path();
        assert_eq!(g.neighbor_query(1, 0).unwrap(), NeighborResult::Node(0));
        assert_eq!(g.neighbor_query(1, 1).unwrap(), NeighborResult::Node(2));
        assert_eq!(g.neighbor_query(0, 1).unwrap(), NeighborResult::Flag);
        for slot in g.max_degree_bound()..g.max_degree_bound() + 4 {
            for v in 0..3 {
                assert_eq!(g.neighbor_query(v, slot).unwrap(), NeighborResult::Flag);
            }
        }
        assert!(matches!(g.neighbor_query(3, 0), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn degree_queries() {
        let g = path();
        assert_eq!(g.degree_query(1, 1).unwrap(), 2);
        assert_eq!(g.degree_query(1, 2).unwrap(), 2);
        assert!(matches!(g.degree_query(1, 3), Err(Error::InvalidHop(3))));
        assert!(matches!(g.degree_query(1, 0), Err(Error::InvalidHop(0))));

        let edge = AttributedGraph::from_indexed_edges(2, &[(0, 1)], vec![0.1, 0.2]).unwrap();
        assert_eq!(edge.degree_query(0, 2).unwrap(), 1);

        // star: hub 0 with 5 leaves
        let star_edges: Vec<_> = (1..6).map(|l| (0, l)).collect();
        let star = AttributedGraph::from_indexed_edges(6, &star_edges, vec![0.5; 6]).unwrap();
        for leaf in 1..6 {
            assert_eq!(star.degree_query(leaf, 2).unwrap(), 5);
        }
        assert_eq!(star.max_degree_bound(), 8);
    }

    #[test]
    fn walk_endpoints() {
        let g = path();
        assert_eq!(g.two_hop_walk_endpoints(1).unwrap(), vec![1, 1]);
        assert_eq!(g.two_hop_walk_endpoints(0).unwrap(), vec![0, 2]);
        let edge = AttributedGraph::from_indexed_edges(2, &[(0, 1)], vec![0.1, 0.2]).unwrap();
        assert_eq!(edge.two_hop_walk_endpoints(0).unwrap(), vec![0]);
        assert_eq!(g.two_hop_set(1).unwrap().into_iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_features(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_features(&[7.0, 7.0, 7.0]).unwrap(), vec![0.5; 3]);
        assert_eq!(normalize_features(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert!(normalize_features(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn isolated_indexed_node_rejected() {
        assert!(AttributedGraph::from_indexed_edges(3, &[(0, 1)], vec![0.0; 3]).is_err());
    }

    fn arb_edges() -> impl Strategy<Value = (Vec<(u8, u8)>, Vec<f64>)> {
        (
            prop::collection::vec((0u8..30, 0u8..30), 1..80),
            prop::collection::vec(-5.0f64..5.0, 30),
        )
    }

    proptest! {
        #[test]
        fn structural_invariants((edges, raw) in arb_edges()) {
            let edges: Vec<(String, String)> =
                edges.iter().map(|&(a, b)| (format!("g{a}"), format!("g{b}"))).collect();
            let feats: HashMap<String, f64> =
                raw.iter().enumerate().map(|(i, &x)| (format!("g{i}"), x)).collect();
            let Ok(g) = build_graph(&edges, &feats, None) else { return Ok(()); };

            let degree_sum: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
            prop_assert_eq!(degree_sum, 2 * g.edge_count());
            let max_deg = (0..g.node_count()).map(|v| g.degree(v)).max().unwrap();
            prop_assert!(g.max_degree_bound().is_power_of_two());
            prop_assert!(g.max_degree_bound() >= max_deg);
            prop_assert!(g.max_degree_bound() / 2 < max_deg);

            for v in 0..g.node_count() {
                let nb = g.neighbors(v);
                prop_assert!(!nb.is_empty());
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!nb.contains(&v));
                for &u in nb {
                    prop_assert!(g.neighbors(u).contains(&v));
                }
                prop_assert!((0.0..=1.0).contains(&g.feature(v)));
                prop_assert_eq!(
                    g.degree_query(v, 2).unwrap(),
                    g.two_hop_walk_endpoints(v).unwrap().len()
                );
            }

            // rebuilding from the emitted edge list is an identity
            let emitted: Vec<(String, String)> = g
                .edges()
                .into_iter()
                .map(|(u, v)| (g.id(u).to_string(), g.id(v).to_string()))
                .collect();
            let rebuilt = build_graph(&emitted, &g.raw_feature_map(), None).unwrap();
            prop_assert_eq!(rebuilt, g);
        }
    }
}
