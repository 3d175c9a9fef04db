//! Swap-test kernel classifier: fidelity kernel, expectation of the
//! two-qubit `σ_z σ_z` observable, sign-rule labels and shot-based estimates.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingMatrix, Method};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::qsim::{EmbeddingCircuit, PureState};

/// Labeled reference nodes `V_l` with their classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSet {
    nodes: Vec<usize>,
    labels: Vec<u8>,
}

impl LabeledSet {
    pub fn new(nodes: Vec<usize>, labels: Vec<u8>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyLabeledSet);
        }
        if nodes.len() != labels.len() {
            return Err(Error::DimensionMismatch { left: nodes.len(), right: labels.len() });
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate node in labeled set".into()));
        }
        Ok(Self { nodes, labels })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter().filter(|&(_, y)| y == 1).map(|(v, _)| v)
    }

    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter().filter(|&(_, y)| y == 0).map(|(v, _)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.nodes.iter().copied().zip(self.labels.iter().copied())
    }

    /// Same nodes with every label flipped.
    pub fn flipped(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            labels: self.labels.iter().map(|y| 1 - y).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Squared inner product of the embedding vectors as given (`c ⊙ m_v` for QMME).
    #[default]
    MomentScaled,
    /// Squared inner product after scaling both vectors to unit norm.
    MomentNormalized,
    /// Squared overlap of full `𝔪`-qubit simulator states.
    FullState,
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelMode::MomentScaled => "moment-scaled",
            KernelMode::MomentNormalized => "moment-normalized",
            KernelMode::FullState => "full-state",
        })
    }
}

impl FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moment-scaled" => Ok(KernelMode::MomentScaled),
            "moment-normalized" => Ok(KernelMode::MomentNormalized),
            "full-state" => Ok(KernelMode::FullState),
            other => Err(Error::InvalidArgument(format!("unknown kernel mode `{other}`"))),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fidelity `|⟨e_t, e_l⟩|²` under the given mode.
///
/// Moment-scaled values are the plain squared product, bounded by
/// `(‖e_t‖‖e_l‖)²`; the unit-norm modes are clamped to `1` against rounding.
pub fn kernel(e_t: &[f64], e_l: &[f64], mode: KernelMode) -> Result<f64> {
    if e_t.len() != e_l.len() {
        return Err(Error::DimensionMismatch { left: e_t.len(), right: e_l.len() });
    }
    Ok(match mode {
        KernelMode::MomentScaled => dot(e_t, e_l).powi(2),
        KernelMode::FullState => dot(e_t, e_l).powi(2).min(1.0),
        KernelMode::MomentNormalized => {
            let (nt, nl) = (dot(e_t, e_t).sqrt(), dot(e_l, e_l).sqrt());
            if nt == 0.0 || nl == 0.0 {
                0.0
            } else {
                (dot(e_t, e_l) / (nt * nl)).powi(2).min(1.0)
            }
        }
    })
}

/// Kernel rows for a list of test nodes against `V_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub mode: KernelMode,
    pub tests: Vec<usize>,
    pub references: Vec<usize>,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn compute(
        tests: &[usize],
        labeled: &LabeledSet,
        embeddings: &EmbeddingMatrix,
        mode: KernelMode,
    ) -> Result<Self> {
        let refs = labeled.nodes();
        let rows: Vec<Vec<f64>> = tests
            .par_iter()
            .map(|&t| {
                refs.iter()
                    .map(|&l| kernel(embeddings.row(t), embeddings.row(l), mode))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            mode,
            tests: tests.to_vec(),
            references: refs.to_vec(),
            data: rows.concat(),
        })
    }

    /// Builds a matrix from explicit rows (one per test node).
    pub fn from_rows(mode: KernelMode, tests: Vec<usize>, references: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != tests.len() {
            return Err(Error::DimensionMismatch { left: rows.len(), right: tests.len() });
        }
        for r in &rows {
            if r.len() != references.len() {
                return Err(Error::DimensionMismatch { left: r.len(), right: references.len() });
            }
            if r.iter().any(|k| !(0.0..=1.0).contains(k)) {
                return Err(Error::InvalidArgument("kernel entries must lie in [0, 1]".into()));
            }
        }
        Ok(Self { mode, tests, references, data: rows.concat() })
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.references.len();
        &self.data[t * w..(t + 1) * w]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

/// `(1/|V_l|) Σ (−1)^{y_l} K(t, l)` for one kernel row aligned with `labeled`.
pub fn expectation_value(row: &[f64], labeled: &LabeledSet) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    if row.len() != labeled.len() {
        return Err(Error::DimensionMismatch { left: row.len(), right: labeled.len() });
    }
    let sum: f64 = row
        .iter()
        .zip(labeled.labels())
        .map(|(k, &y)| if y == 1 { -k } else { *k })
        .sum();
    Ok(sum / labeled.len() as f64)
}

/// Sign rule: `0` for a positive expectation, `1` for a negative one, `0` on a tie.
pub fn predict(expectation: f64) -> Result<u8> {
    if !expectation.is_finite() {
        return Err(Error::NonFiniteExpectation);
    }
    Ok(u8::from(expectation < 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutcome {
    pub node: usize,
    pub expectation: f64,
    /// `−expectation`; higher means more positive-like.
    pub score: f64,
    pub label: u8,
    pub shots_used: Option<u64>,
}

impl PredictionOutcome {
    pub fn exact(node: usize, expectation: f64) -> Result<Self> {
        Ok(Self {
            node,
            expectation,
            score: -expectation,
            label: predict(expectation)?,
            shots_used: None,
        })
    }
}

/// Per-task seed from a global seed and a node id (SplitMix64 finalizer).
pub fn derive_seed(global: u64, stream: u64) -> u64 {
    let mut z = global ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exact `P(a, l)` implied by a kernel row: each labeled branch has weight
/// `1/|V_l|` and swap-test probabilities `(1 ± K)/2`.
pub fn outcome_distribution(row: &[f64], labeled: &LabeledSet) -> Result<[[f64; 2]; 2]> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    if row.len() != labeled.len() {
        return Err(Error::DimensionMismatch { left: row.len(), right: labeled.len() });
    }
    let w = 1.0 / labeled.len() as f64;
    let mut p = [[0.0; 2]; 2];
    for (k, &y) in row.iter().zip(labeled.labels()) {
        p[0][y as usize] += w * (1.0 + k) / 2.0;
        p[1][y as usize] += w * (1.0 - k) / 2.0;
    }
    Ok(p)
}

/// Estimates the expectation from `shots` sampled `(a, l)` measurements:
/// `(c₀₀ − c₀₁ − c₁₀ + c₁₁) / r`.
pub fn shot_estimate(node: usize, row: &[f64], labeled: &LabeledSet, shots: u64, seed: u64) -> Result<PredictionOutcome> {
    if shots < 1 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    let p = outcome_distribution(row, labeled)?;
    let buckets = [(p[0][0], 1i64), (p[0][1], -1), (p[1][0], -1), (p[1][1], 1)];
    let fallback = buckets.iter().rposition(|(q, _)| *q > 0.0).unwrap_or(0);
    let mut cumulative = [0.0; 4];
    let mut acc = 0.0;
    for (c, (q, _)) in cumulative.iter_mut().zip(&buckets) {
        acc += q;
        *c = acc;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signed: i64 = 0;
    for _ in 0..shots {
        let u: f64 = rng.random();
        let b = cumulative
            .iter()
            .zip(&buckets)
            .position(|(c, (q, _))| *q > 0.0 && u < *c)
            .unwrap_or(fallback);
        signed += buckets[b].1;
    }
    let expectation = signed as f64 / shots as f64;
    Ok(PredictionOutcome {
        node,
        expectation,
        score: -expectation,
        label: predict(expectation)?,
        shots_used: Some(shots),
    })
}

/// Shot sampling parameters for [`classify_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots: u64,
    pub seed: u64,
}

/// Classifies every test node against `V_l`. With `shots`, each node's
/// estimate uses its own RNG stream seeded from `(seed, node)`.
pub fn classify_all(
    tests: &[usize],
    labeled: &LabeledSet,
    embeddings: &EmbeddingMatrix,
    mode: KernelMode,
    shots: Option<ShotConfig>,
) -> Result<Vec<PredictionOutcome>> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    tests
        .par_iter()
        .map(|&t| {
            let row = labeled
                .nodes()
                .iter()
                .map(|&l| kernel(embeddings.row(t), embeddings.row(l), mode))
                .collect::<Result<Vec<_>>>()?;
            match shots {
                None => PredictionOutcome::exact(t, expectation_value(&row, labeled)?),
                Some(cfg) => shot_estimate(t, &row, labeled, cfg.shots, derive_seed(cfg.seed, t as u64)),
            }
        })
        .collect()
}

/// Full `𝔪`-qubit embedded states of every node, one row each.
pub fn full_state_embeddings(g: &AttributedGraph, dprime: Option<u32>) -> Result<EmbeddingMatrix> {
    let circuit = EmbeddingCircuit::new(g, dprime)?;
    let rows = (0..g.node_count())
        .into_par_iter()
        .map(|v| Ok(circuit.apply_u_g(v)?.data_state().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    EmbeddingMatrix::from_rows(Method::Qmme, rows)
}

/// Split of a full-state overlap into the moment subspace `|c, i, 0…0⟩` and
/// its orthogonal complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapBreakdown {
    pub moment_overlap: f64,
    pub perp_overlap: f64,
    pub moment_kernel: f64,
    pub full_kernel: f64,
}

impl OverlapBreakdown {
    /// `full_kernel − moment_kernel`: what the junk component adds.
    pub fn perp_contribution(&self) -> f64 {
        self.full_kernel - self.moment_kernel
    }
}

pub fn overlap_breakdown(t: &PureState, l: &PureState) -> Result<OverlapBreakdown> {
    if t.layout() != l.layout() {
        return Err(Error::InvalidArgument("states use different layouts".into()));
    }
    let layout = t.layout();
    let moment: Vec<usize> = (0..2)
        .flat_map(|c| (0..4).map(move |i| (c, i)))
        .map(|(c, i)| layout.moment_index(c, i))
        .collect();
    let (a, b) = (t.data_state(), l.data_state());
    let moment_overlap: f64 = moment.iter().map(|&j| a[j] * b[j]).sum();
    let full = dot(a, b);
    Ok(OverlapBreakdown {
        moment_overlap,
        perp_overlap: full - moment_overlap,
        moment_kernel: moment_overlap * moment_overlap,
        full_kernel: (full * full).min(1.0),
    })
}

/// Writes `gene<TAB>expectation<TAB>score<TAB>label`.
pub fn write_predictions<W: Write>(g: &AttributedGraph, outcomes: &[PredictionOutcome], mut w: W) -> std::io::Result<()> {
    writeln!(w, "gene\texpectation\tscore\tlabel")?;
    for o in outcomes {
        writeln!(w, "{}\t{:.16e}\t{:.16e}\t{}", g.id(o.node), o.expectation, o.score, o.label)?;
    }
    Ok(())
}
