//! Moment statistics over node neighborhoods and the two node embeddings
//! built from them.
//!
//! The QMME embedding of node `v` concatenates the first four raw moments of
//! the feature values over the immediate neighborhood and over the two-hop
//! walk endpoints. Its amplitude-scaled form `c ⊙ m_v` is exactly what the
//! embedding circuit leaves on the `|c, i, 0…0⟩` basis states, see
//! [`crate::qsim`]. The MoPro baseline is the node's own feature followed by
//! the four immediate-neighborhood moments.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Hop};

/// First four sample raw moments `[φ₁, φ₂, φ₃, φ₄]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector(pub [f64; 4]);

impl MomentVector {
    pub fn phi(&self) -> &[f64; 4] {
        &self.0
    }
}

/// `m_v = [m¹_v ∥ m²_v]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentFeatureEmbedding {
    pub node: usize,
    pub m: [f64; 8],
}

/// `a = c ⊙ m_v` together with the scale vector `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledEmbedding {
    pub node: usize,
    pub a: [f64; 8],
    pub scale_vector: [f64; 8],
}

impl ScaledEmbedding {
    pub fn norm(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// One-step moment propagation: `[x_v, φ₁..φ₄ over N¹_v]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoProEmbedding {
    pub node: usize,
    pub z: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qmme,
    Mopro,
}

impl Method {
    pub fn dim(self) -> usize {
        match self {
            Method::Qmme => 8,
            Method::Mopro => 5,
        }
    }

    fn column_prefix(self) -> char {
        match self {
            Method::Qmme => 'a',
            Method::Mopro => 'z',
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qmme => "qmme",
            Method::Mopro => "mopro",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qmme" => Ok(Method::Qmme),
            "mopro" => Ok(Method::Mopro),
            other => Err(Error::InvalidArgument(format!("unknown embedding method `{other}`"))),
        }
    }
}

#[derive(Default)]
struct PowerSums {
    count: usize,
    sums: [f64; 4],
}

impl PowerSums {
    fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.count += 1;
        self.sums[0] += x;
        self.sums[1] += x2;
        self.sums[2] += x2 * x;
        self.sums[3] += x2 * x2;
    }

    fn finish(self) -> Result<MomentVector> {
        if self.count == 0 {
            return Err(Error::EmptyNeighborhood);
        }
        let k = self.count as f64;
        Ok(MomentVector(self.sums.map(|s| s / k)))
    }
}

pub fn raw_moments(sample: &[f64]) -> Result<MomentVector> {
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample value".into()));
    }
    let mut acc = PowerSums::default();
    sample.iter().for_each(|&x| acc.push(x));
    acc.finish()
}

fn check_node(g: &AttributedGraph, v: usize) -> Result<()> {
    if v < g.node_count() {
        Ok(())
    } else {
        Err(Error::NodeOutOfRange {
            index: v,
            node_count: g.node_count(),
        })
    }
}

/// Moments over `N¹_v` (`Hop::One`) or over the two-hop walk endpoints with
/// walk multiplicity (`Hop::Two`).
pub fn neighborhood_moments(g: &AttributedGraph, v: usize, hop: Hop) -> Result<MomentVector> {
    check_node(g, v)?;
    let x = g.features();
    let mut acc = PowerSums::default();
    match hop {
        Hop::One => g.neighbors(v).iter().for_each(|&u| acc.push(x[u])),
        Hop::Two => {
            for &u in g.neighbors(v) {
                g.neighbors(u).iter().for_each(|&w| acc.push(x[w]));
            }
        }
    }
    acc.finish()
}

pub fn moment_feature_embedding(g: &AttributedGraph, v: usize) -> Result<MomentFeatureEmbedding> {
    let first = neighborhood_moments(g, v, Hop::One)?;
    let second = neighborhood_moments(g, v, Hop::Two)?;
    let mut m = [0.0; 8];
    m[..4].copy_from_slice(first.phi());
    m[4..].copy_from_slice(second.phi());
    Ok(MomentFeatureEmbedding { node: v, m })
}

/// `c = 2^{-3/2} [1/s ×4, 1/s² ×4]`.
pub fn scale_vector(s: usize) -> [f64; 8] {
    let s = s as f64;
    let base = 2f64.powf(-1.5);
    let mut c = [base / s; 8];
    c[4..].iter_mut().for_each(|x| *x = base / (s * s));
    c
}

pub fn scaled_embedding(g: &AttributedGraph, v: usize) -> Result<ScaledEmbedding> {
    let m = moment_feature_embedding(g, v)?;
    let scale_vector = scale_vector(g.max_degree_bound());
    let mut a = [0.0; 8];
    for j in 0..8 {
        a[j] = scale_vector[j] * m.m[j];
    }
    Ok(ScaledEmbedding { node: v, a, scale_vector })
}

pub fn mopro_embedding(g: &AttributedGraph, v: usize) -> Result<MoProEmbedding> {
    let phi = neighborhood_moments(g, v, Hop::One)?;
    let mut z = [0.0; 5];
    z[0] = g.feature(v);
    z[1..].copy_from_slice(phi.phi());
    Ok(MoProEmbedding { node: v, z })
}

/// Row-major embedding matrix, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    method: Method,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows(method: Method, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(method.dim(), Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { left: r.len(), right: dim });
            }
            data.extend(r);
        }
        Ok(Self { method, dim, data })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Every entry multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            method: self.method,
            dim: self.dim,
            data: self.data.iter().map(|x| x * lambda).collect(),
        }
    }

    /// TSV with a `node<TAB>a1..` header and 17 significant digits.
    pub fn write_tsv<W: Write>(&self, ids: &[String], mut w: W) -> std::io::Result<()> {
        let prefix = self.method.column_prefix();
        write!(w, "node")?;
        for j in 1..=self.dim {
            write!(w, "\t{prefix}{j}")?;
        }
        writeln!(w)?;
        for (id, row) in ids.iter().zip(self.rows()) {
            write!(w, "{id}")?;
            for x in row {
                write!(w, "\t{x:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads a TSV produced by [`EmbeddingMatrix::write_tsv`]; returns the ids in file order.
    pub fn read_tsv(path: impl AsRef<Path>) -> Result<(Vec<String>, Self)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty embedding file"))?;
        let cols: Vec<&str> = header.split('\t').collect();
        let method = match cols.get(1).and_then(|c| c.chars().next()) {
            Some('a') => Method::Qmme,
            Some('z') => Method::Mopro,
            _ => return Err(Error::parse(path, 1, "expected `node<TAB>a1..` or `node<TAB>z1..` header")),
        };
        let dim = cols.len() - 1;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != dim + 1 {
                return Err(Error::parse(path, i + 1, format!("expected {} columns", dim + 1)));
            }
            let row = f[1..]
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            ids.push(f[0].to_string());
            rows.push(row);
        }
        Ok((ids, Self::from_rows(method, rows)?))
    }
}

/// Embeds every node; `Method::Qmme` rows are the amplitude-scaled `c ⊙ m_v`.
pub fn embed_all(g: &AttributedGraph, method: Method) -> Result<EmbeddingMatrix> {
    let rows: Vec<Vec<f64>> = (0..g.node_count())
        .into_par_iter()
        .map(|v| -> Result<Vec<f64>> {
            Ok(match method {
                Method::Qmme => scaled_embedding(g, v)?.a.to_vec(),
                Method::Mopro => mopro_embedding(g, v)?.z.to_vec(),
            })
        })
        .collect::<Result<_>>()?;
    EmbeddingMatrix::from_rows(method, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;
    use crate::testing::random_bounded_graph;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn raw_moment_examples() {
        assert_eq!(raw_moments(&[1.0, 1.0]).unwrap().0, [1.0; 4]);
        close(&raw_moments(&[0.5, 1.0]).unwrap().0, &[0.75, 0.625, 0.5625, 0.53125]);
        assert_eq!(raw_moments(&[0.0]).unwrap().0, [0.0; 4]);
        assert_eq!(raw_moments(&[]).unwrap_err().to_string(), "empty neighborhood");
    }

    #[test]
    fn path_neighborhood_moments() {
        let g = path();
        close(&neighborhood_moments(&g, 1, Hop::One).unwrap().0, &[0.6, 0.52, 0.504, 0.5008]);
        close(&neighborhood_moments(&g, 1, Hop::Two).unwrap().0, &[0.5, 0.25, 0.125, 0.0625]);
        close(&neighborhood_moments(&g, 0, Hop::Two).unwrap().0, &[0.6, 0.52, 0.504, 0.5008]);
    }

    #[test]
    fn path_embeddings() {
        let g = path();
        close(
            &moment_feature_embedding(&g, 1).unwrap().m,
            &[0.6, 0.52, 0.504, 0.5008, 0.5, 0.25, 0.125, 0.0625],
        );
        assert_eq!(moment_feature_embedding(&g, 0).unwrap().m, moment_feature_embedding(&g, 2).unwrap().m);

        let a = scaled_embedding(&g, 1).unwrap();
        assert_abs_diff_eq!(a.a[0], 0.106066017177982, epsilon = 1e-12);
        assert_abs_diff_eq!(a.a[4], 0.0441941738241592, epsilon = 1e-12);

        close(&mopro_embedding(&g, 1).unwrap().z, &[0.5, 0.6, 0.52, 0.504, 0.5008]);
        close(&mopro_embedding(&g, 0).unwrap().z, &[0.2, 0.5, 0.25, 0.125, 0.0625]);
    }

    #[test]
    fn clique_with_constant_features() {
        let q: f64 = 0.7;
        let edges: Vec<_> = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).collect();
        let g = AttributedGraph::from_indexed_edges(5, &edges, vec![q; 5]).unwrap();
        let powers = [q, q * q, q.powi(3), q.powi(4)];
        for v in 0..5 {
            let m = moment_feature_embedding(&g, v).unwrap().m;
            close(&m[..4], &powers);
            close(&m[4..], &powers);
            close(&mopro_embedding(&g, v).unwrap().z, &[q, q, q * q, q.powi(3), q.powi(4)]);
        }
    }

    #[test]
    fn scaling_follows_degree_bound() {
        let g = AttributedGraph::from_indexed_edges(2, &[(0, 1)], vec![0.0, 0.0]).unwrap();
        assert_eq!(scaled_embedding(&g, 0).unwrap().a, [0.0; 8]);

        let small = AttributedGraph::from_indexed_edges(3, &[(0, 1), (1, 2)], vec![0.3, 0.9, 0.4]).unwrap();
        let c2 = scale_vector(2);
        let c4 = scale_vector(4);
        for j in 0..4 {
            assert_abs_diff_eq!(c4[j], c2[j] / 2.0, epsilon = 1e-15);
            assert_abs_diff_eq!(c4[j + 4], c2[j + 4] / 4.0, epsilon = 1e-15);
        }
        let a = scaled_embedding(&small, 0).unwrap();
        let m = moment_feature_embedding(&small, 0).unwrap();
        for j in 0..8 {
            assert_eq!(a.a[j], c2[j] * m.m[j]);
        }
    }

    #[test]
    fn embed_all_shapes() {
        let g = path();
        let q = embed_all(&g, Method::Qmme).unwrap();
        assert_eq!((q.len(), q.dim()), (3, 8));
        assert_eq!(q.row(0), q.row(2));
        let m = embed_all(&g, Method::Mopro).unwrap();
        assert_eq!((m.len(), m.dim()), (3, 5));
        let edge = AttributedGraph::from_indexed_edges(2, &[(0, 1)], vec![0.4, 0.4]).unwrap();
        let e = embed_all(&edge, Method::Qmme).unwrap();
        assert_eq!(e.row(0), e.row(1));
    }

    #[test]
    fn tsv_round_trip() {
        let g = path();
        let q = embed_all(&g, Method::Qmme).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.tsv");
        let mut buf = Vec::new();
        q.write_tsv(g.ids(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node\ta1\ta2\ta3\ta4\ta5\ta6\ta7\ta8\n"));
        std::fs::write(&p, text).unwrap();
        let (ids, back) = EmbeddingMatrix::read_tsv(&p).unwrap();
        assert_eq!(ids, g.ids());
        assert_eq!(back, q);
    }

    /// Independent oracle: dense adjacency matrix and its square give walk
    /// multiplicities directly.
    fn dense_oracle(g: &AttributedGraph) -> Vec<[f64; 8]> {
        let n = g.node_count();
        let mut a = vec![vec![0u64; n]; n];
        for (u, v) in g.edges() {
            a[u][v] = 1;
            a[v][u] = 1;
        }
        let mut a2 = vec![vec![0u64; n]; n];
        for i in 0..n {
            for j in 0..n {
                a2[i][j] = (0..n).map(|k| a[i][k] * a[k][j]).sum();
            }
        }
        let x = g.features();
        (0..n)
            .map(|v| {
                let mut out = [0.0; 8];
                for (block, mat) in [&a, &a2].into_iter().enumerate() {
                    let total: u64 = mat[v].iter().sum();
                    for i in 0..4 {
                        let s: f64 = (0..n).map(|w| mat[v][w] as f64 * x[w].powi(i as i32 + 1)).sum();
                        out[block * 4 + i] = s / total as f64;
                    }
                }
                out
            })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_dense_oracle_and_invariants(seed in any::<u64>(), n in 2usize..=12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_bounded_graph(&mut rng, n, 5, false);
            let oracle = dense_oracle(&g);
            let c = scale_vector(g.max_degree_bound());
            for v in 0..g.node_count() {
                let m = moment_feature_embedding(&g, v).unwrap().m;
                for j in 0..8 {
                    prop_assert!((m[j] - oracle[v][j]).abs() < 1e-12);
                }
                for block in [&m[..4], &m[4..]] {
                    prop_assert!(block.windows(2).all(|w| w[0] >= w[1]));
                    prop_assert!(block.iter().all(|x| (0.0..=1.0).contains(x)));
                }
                let a = scaled_embedding(&g, v).unwrap();
                for j in 0..8 {
                    prop_assert_eq!(a.a[j], c[j] * m[j]);
                }
                prop_assert!(a.norm() <= 1.0);
            }
        }

        #[test]
        fn permutation_equivariance(seed in any::<u64>(), n in 2usize..=10) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_bounded_graph(&mut rng, n, 4, false);
            let n = g.node_count();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let edges: Vec<_> = g.edges().into_iter().map(|(u, v)| (perm[u], perm[v])).collect();
            let mut feats = vec![0.0; n];
            for v in 0..n {
                feats[perm[v]] = g.feature(v);
            }
            let h = AttributedGraph::from_indexed_edges(n, &edges, feats).unwrap();
            let eg = embed_all(&g, Method::Qmme).unwrap();
            let eh = embed_all(&h, Method::Qmme).unwrap();
            for v in 0..n {
                for (x, y) in eg.row(v).iter().zip(eh.row(perm[v])) {
                    prop_assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }
}
