//! Experiment harness: balanced splits, metrics, paired t-tests, a
//! planted-signal generator and JSON reports.

use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::classify::{classify_all, derive_seed, full_state_embeddings, KernelMode, LabeledSet, PredictionOutcome, ShotConfig};
use crate::embed::{embed_all, EmbeddingMatrix, Method};
use crate::error::{Error, Result};
use crate::graph::{build_graph, AttributedGraph, Label};

pub const MIN_POSITIVES: usize = 5;
pub const METRICS: [&str; 5] = ["accuracy", "precision", "recall", "f1", "auprc"];

/// A graph with its positive nodes; every other node is unlabeled.
#[derive(Debug, Clone)]
pub struct Dataset {
    graph: AttributedGraph,
    positives: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl Dataset {
    /// Positives are the nodes labeled [`Label::Positive`].
    pub fn from_graph(graph: AttributedGraph) -> Self {
        let positives = graph.positives();
        let unlabeled = (0..graph.node_count())
            .filter(|&v| graph.label(v) != Label::Positive)
            .collect();
        Self { graph, positives, unlabeled }
    }

    pub fn graph(&self) -> &AttributedGraph {
        &self.graph
    }

    pub fn positives(&self) -> &[usize] {
        &self.positives
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn prevalence(&self) -> f64 {
        self.positives.len() as f64 / self.graph.node_count() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub id: usize,
    pub seed: u64,
    pub train_positives: Vec<usize>,
    pub train_negatives: Vec<usize>,
    /// Every node outside the training set, ascending.
    pub test: Vec<usize>,
    /// Held-out positives are 1, everything else 0.
    pub test_labels: Vec<u8>,
}

impl SplitPlan {
    pub fn labeled_set(&self) -> Result<LabeledSet> {
        let nodes = self.train_positives.iter().chain(&self.train_negatives).copied().collect();
        let labels = std::iter::repeat_n(1, self.train_positives.len())
            .chain(std::iter::repeat_n(0, self.train_negatives.len()))
            .collect();
        LabeledSet::new(nodes, labels)
    }

    pub fn train_size(&self) -> usize {
        self.train_positives.len() + self.train_negatives.len()
    }
}

/// Draws `⌊0.8·|P|⌋` training positives and as many negatives from the
/// unlabeled pool, both without replacement.
pub fn make_split(d: &Dataset, seed: u64) -> Result<SplitPlan> {
    let p = d.positives.len();
    if p < MIN_POSITIVES {
        return Err(Error::TooFewPositives { needed: MIN_POSITIVES, found: p });
    }
    let k = p * 4 / 5;
    if d.unlabeled.len() < k {
        return Err(Error::InsufficientUnlabeled { needed: k, available: d.unlabeled.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_positives: Vec<usize> = d.positives.choose_multiple(&mut rng, k).copied().collect();
    let mut train_negatives: Vec<usize> = d.unlabeled.choose_multiple(&mut rng, k).copied().collect();
    train_positives.sort_unstable();
    train_negatives.sort_unstable();

    let train: HashSet<usize> = train_positives.iter().chain(&train_negatives).copied().collect();
    let positive: HashSet<usize> = d.positives.iter().copied().collect();
    let test: Vec<usize> = (0..d.graph.node_count()).filter(|v| !train.contains(v)).collect();
    let test_labels = test.iter().map(|v| u8::from(positive.contains(v))).collect();
    Ok(SplitPlan { id: 0, seed, train_positives, train_negatives, test, test_labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(predicted: &[u8], truth: &[u8]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch { left: predicted.len(), right: truth.len() });
        }
        let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// One method's metrics on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auprc: f64,
    /// Set when nothing was predicted positive and precision was defined as 0.
    pub precision_undefined: bool,
}

impl MetricsRow {
    pub fn compute(method: Method, predicted: &[u8], scores: &[f64], truth: &[u8]) -> Result<Self> {
        let c = Confusion::from_labels(predicted, truth)?;
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Ok(Self {
            method,
            confusion: c,
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
            f1,
            auprc: auprc(scores, truth)?,
            precision_undefined: c.tp + c.fp == 0,
        })
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f1" => Some(self.f1),
            "auprc" => Some(self.auprc),
            _ => None,
        }
    }
}

/// Step-wise average precision. Nodes are visited in descending score order
/// and tied scores enter together as one block.
pub fn auprc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { left: scores.len(), right: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let total = labels.iter().filter(|&&y| y == 1).count();
    if total == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    for block in order.chunk_by(|&a, &b| scores[a] == scores[b]) {
        let hits = block.iter().filter(|&&i| labels[i] == 1).count();
        tp += hits;
        seen += block.len();
        if hits > 0 {
            ap += hits as f64 / total as f64 * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub metric: String,
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub mean_difference: f64,
}

/// Paired t-test on `a − b` with a two-sided p-value.
pub fn paired_t_test(metric: &str, a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument("paired t-test needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, sd) = mean_sd(&d);
    if sd.is_nan() || sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::DegenerateTTest);
    }
    let t = mean / (sd / (n as f64).sqrt());
    let df = n - 1;
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Internal(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTestResult { metric: metric.to_string(), t, p, df, mean_difference: mean })
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_splits: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub kernel_mode: KernelMode,
    pub shots: Option<u64>,
    pub dprime: Option<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_splits: 50,
            seed: 0,
            methods: vec![Method::Qmme, Method::Mopro],
            kernel_mode: KernelMode::MomentScaled,
            shots: None,
            dprime: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub split: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub test_positives: usize,
    pub metrics: Vec<MetricsRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub nodes: usize,
    pub edges: usize,
    pub positives: usize,
    pub degree_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub per_split: Vec<SplitRecord>,
    /// method → metric → mean/std over splits.
    pub aggregate: BTreeMap<String, BTreeMap<String, Summary>>,
    /// First method minus second method, per metric.
    pub t_tests: Vec<TTestResult>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn values(&self, method: Method, metric: &str) -> Vec<f64> {
        self.per_split
            .iter()
            .flat_map(|s| s.metrics.iter().filter(|m| m.method == method))
            .filter_map(|m| m.metric(metric))
            .collect()
    }

    pub fn mean(&self, method: Method, metric: &str) -> Option<f64> {
        self.aggregate.get(&method.to_string())?.get(metric).map(|s| s.mean)
    }

    /// Flat CSV: one line per (split, method).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,seed,method,accuracy,precision,recall,f1,auprc\n");
        for s in &self.per_split {
            for m in &s.metrics {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    s.split, s.seed, m.method, m.accuracy, m.precision, m.recall, m.f1, m.auprc
                ));
            }
        }
        out
    }
}

pub fn method_embeddings(g: &AttributedGraph, method: Method, mode: KernelMode, dprime: Option<u32>) -> Result<EmbeddingMatrix> {
    match (method, mode) {
        (Method::Qmme, KernelMode::FullState) => full_state_embeddings(g, dprime),
        (Method::Mopro, KernelMode::FullState) => Err(Error::InvalidArgument(
            "full-state kernels exist only for the qmme method".into(),
        )),
        _ => embed_all(g, method),
    }
}

/// Classifies one split's test set and scores it.
pub fn evaluate_split(
    d: &Dataset,
    split: &SplitPlan,
    embeddings: &EmbeddingMatrix,
    mode: KernelMode,
    shots: Option<u64>,
) -> Result<MetricsRow> {
    if embeddings.len() != d.graph.node_count() {
        return Err(Error::DimensionMismatch { left: embeddings.len(), right: d.graph.node_count() });
    }
    let labeled = split.labeled_set()?;
    let shots = shots.map(|r| ShotConfig { shots: r, seed: split.seed });
    let out: Vec<PredictionOutcome> = classify_all(&split.test, &labeled, embeddings, mode, shots)?;
    let predicted: Vec<u8> = out.iter().map(|o| o.label).collect();
    let scores: Vec<f64> = out.iter().map(|o| o.score).collect();
    MetricsRow::compute(embeddings.method(), &predicted, &scores, &split.test_labels)
}

/// Runs every method on the same `n_splits` split plans.
pub fn run_experiment(d: &Dataset, config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.n_splits == 0 {
        return Err(Error::InvalidArgument("n_splits must be at least 1".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }
    let embeddings = config
        .methods
        .iter()
        .map(|&m| method_embeddings(&d.graph, m, config.kernel_mode, config.dprime))
        .collect::<Result<Vec<_>>>()?;

    let per_split = (0..config.n_splits)
        .into_par_iter()
        .map(|id| {
            let mut plan = make_split(d, derive_seed(config.seed, id as u64))?;
            plan.id = id;
            let metrics = embeddings
                .iter()
                .map(|e| evaluate_split(d, &plan, e, config.kernel_mode, config.shots))
                .collect::<Result<Vec<_>>>()?;
            Ok(SplitRecord {
                split: id,
                seed: plan.seed,
                train_size: plan.train_size(),
                test_size: plan.test.len(),
                test_positives: plan.test_labels.iter().filter(|&&y| y == 1).count(),
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    for s in &per_split {
        for m in s.metrics.iter().filter(|m| m.precision_undefined) {
            warnings.push(format!("split {} {}: no predicted positives, precision set to 0", s.split, m.method));
        }
    }

    let mut report = ExperimentReport {
        config: config.clone(),
        dataset: DatasetSummary {
            nodes: d.graph.node_count(),
            edges: d.graph.edge_count(),
            positives: d.positives.len(),
            degree_bound: d.graph.max_degree_bound(),
        },
        per_split,
        aggregate: BTreeMap::new(),
        t_tests: Vec::new(),
        warnings,
    };
    for &m in &config.methods {
        let row = METRICS
            .iter()
            .map(|&name| {
                let (mean, std) = mean_sd(&report.values(m, name));
                (name.to_string(), Summary { mean, std })
            })
            .collect();
        report.aggregate.insert(m.to_string(), row);
    }

    if config.n_splits < 2 {
        report.warnings.push("fewer than 2 splits: paired t-tests skipped".into());
    } else if let [a, b, ..] = config.methods[..] {
        for name in METRICS {
            match paired_t_test(name, &report.values(a, name), &report.values(b, name)) {
                Ok(t) => report.t_tests.push(t),
                Err(e) => report.warnings.push(format!("t-test on {name} ({a} vs {b}): {e}")),
            }
        }
    }
    for w in &report.warnings {
        warn!("{w}");
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub mean_degree: f64,
    /// Mean shift, in background standard deviations, for positives and their neighbors.
    pub delta: f64,
    pub positive_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 2000, mean_degree: 4.0, delta: 2.0, positive_fraction: 0.05, seed: 0 }
    }
}

const SYNTH_RETRIES: usize = 16;

fn degree_sequence<R: Rng>(rng: &mut R, n: usize, mean_degree: f64) -> Result<Vec<usize>> {
    let poisson = Poisson::new(mean_degree).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for _ in 0..SYNTH_RETRIES {
        let mut deg: Vec<usize> = (0..n).map(|_| (poisson.sample(rng) as usize).max(1)).collect();
        if deg.iter().sum::<usize>() % 2 == 1 {
            deg[rng.random_range(0..n)] += 1;
        }
        if deg.iter().all(|&k| k < n) {
            return Ok(deg);
        }
    }
    Err(Error::InfeasibleDegreeSequence(SYNTH_RETRIES))
}

/// Planted-signal dataset: configuration-model graph with self-loops and
/// multi-edges erased, `N(δ, 1)` raw features on positives and their
/// neighbors and `N(0, 1)` elsewhere.
pub fn synth_generate(config: &SynthConfig) -> Result<Dataset> {
    let n = config.n;
    let valid_fraction = config.positive_fraction > 0.0 && config.positive_fraction < 1.0;
    if n < 2 || config.mean_degree.is_nan() || config.mean_degree <= 0.0 || !valid_fraction {
        return Err(Error::InvalidArgument(
            "synthetic data needs n ≥ 2, mean degree > 0 and a positive fraction in (0, 1)".into(),
        ));
    }
    if !config.delta.is_finite() {
        return Err(Error::InvalidArgument("delta must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let degrees = degree_sequence(&mut rng, n, config.mean_degree)?;

    let mut stubs: Vec<usize> = degrees.iter().enumerate().flat_map(|(v, &k)| std::iter::repeat_n(v, k)).collect();
    stubs.shuffle(&mut rng);
    let mut edges: HashSet<(usize, usize)> = stubs
        .chunks_exact(2)
        .filter(|p| p[0] != p[1])
        .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
        .collect();
    let mut touched = vec![false; n];
    for &(u, v) in &edges {
        touched[u] = true;
        touched[v] = true;
    }
    for v in 0..n {
        if !touched[v] {
            let mut u = rng.random_range(0..n - 1);
            if u >= v {
                u += 1;
            }
            edges.insert((u.min(v), u.max(v)));
            touched[u] = true;
            touched[v] = true;
        }
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort_unstable();

    let n_pos = ((config.positive_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    let positives: HashSet<usize> = nodes[..n_pos].iter().copied().collect();

    let mut shifted = vec![false; n];
    for &(u, v) in &edges {
        if positives.contains(&u) {
            shifted[v] = true;
        }
        if positives.contains(&v) {
            shifted[u] = true;
        }
    }
    for &p in &positives {
        shifted[p] = true;
    }
    let background = Normal::new(0.0, 1.0).expect("unit normal");
    let raw: HashMap<String, f64> = (0..n)
        .map(|v| {
            let x = background.sample(&mut rng) + if shifted[v] { config.delta } else { 0.0 };
            (v.to_string(), x)
        })
        .collect();
    let id_edges: Vec<(String, String)> = edges.iter().map(|(u, v)| (u.to_string(), v.to_string())).collect();
    let pos_ids: HashSet<String> = positives.iter().map(|v| v.to_string()).collect();
    Ok(Dataset::from_graph(build_graph(&id_edges, &raw, Some(&pos_ids))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn small_dataset(n_pos: usize) -> Dataset {
        let cfg = SynthConfig { n: 200, positive_fraction: n_pos as f64 / 200.0, seed: 3, ..Default::default() };
        let d = synth_generate(&cfg).unwrap();
        assert_eq!(d.positives().len(), n_pos);
        d
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = small_dataset(10);
        let a = make_split(&d, 17).unwrap();
        assert_eq!(a.train_positives.len(), 8);
        assert_eq!(a.train_negatives.len(), 8);
        assert_eq!(a, make_split(&d, 17).unwrap());
        assert_eq!(a.test.len() + a.train_size(), d.graph().node_count());
        assert_eq!(a.test_labels.iter().filter(|&&y| y == 1).count(), 2);
        let b = make_split(&d, 18).unwrap();
        assert_ne!(a.train_negatives, b.train_negatives);
    }

    #[test]
    fn split_of_590_positives_uses_944_training_nodes() {
        // 590 positives among 6850 nodes
        let cfg = SynthConfig { n: 6850, positive_fraction: 590.0 / 6850.0, seed: 1, ..Default::default() };
        let d = synth_generate(&cfg).unwrap();
        assert_eq!(d.positives().len(), 590);
        let s = make_split(&d, 0).unwrap();
        assert_eq!((s.train_positives.len(), s.train_negatives.len()), (472, 472));
        assert_eq!(s.train_size(), 944);
    }

    #[test]
    fn split_errors() {
        let d = small_dataset(4);
        assert!(matches!(make_split(&d, 0), Err(Error::TooFewPositives { .. })));
        let g = AttributedGraph::from_indexed_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)], vec![0.5; 7])
            .unwrap()
            .with_labels(vec![Label::Positive, Label::Positive, Label::Positive, Label::Positive, Label::Positive, Label::Positive, Label::Unlabeled])
            .unwrap();
        assert!(matches!(
            make_split(&Dataset::from_graph(g), 0),
            Err(Error::InsufficientUnlabeled { needed: 4, available: 1 })
        ));
    }

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&[4.0, 3.0, 2.0, 1.0], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auprc(&[3.0, 2.0, 1.0], &[0, 1, 0]).unwrap(), 0.5);
        // one tied block of everything: precision = prevalence
        assert_abs_diff_eq!(auprc(&[0.0; 4], &[1, 0, 0, 0]).unwrap(), 0.25, epsilon = 1e-15);
        // 1 at rank 1, 1 at rank 3: (1 + 2/3)/2
        assert_abs_diff_eq!(auprc(&[0.9, 0.8, 0.7, 0.1], &[1, 0, 1, 0]).unwrap(), 5.0 / 6.0, epsilon = 1e-15);
        assert!(matches!(auprc(&[1.0, 2.0], &[0, 0]), Err(Error::NoPositives)));
    }

    /// Mean average precision of a uniformly random ranking with `p` positives among `n`.
    fn random_ranking_ap(n: usize, p: usize) -> f64 {
        let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        let (n, p) = (n as f64, p as f64);
        (p - 1.0) / (n - 1.0) * (n - h) / n + h / n
    }

    #[test]
    fn auprc_permutation_null() {
        let (n, p) = (2000, 200);
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 10 == 0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let draws: Vec<f64> = (0..1000)
            .map(|_| {
                scores.shuffle(&mut rng);
                auprc(&scores, &labels).unwrap()
            })
            .collect();
        let (mean, sd) = mean_sd(&draws);
        assert!((mean - 0.1).abs() <= 0.02, "{mean}");
        assert!((mean - random_ranking_ap(n, p)).abs() <= 3.0 * sd / (draws.len() as f64).sqrt());
    }

    #[test]
    fn random_ranking_ap_small_case() {
        // n = 3, one positive: AP = 1/rank averaged over ranks
        assert_abs_diff_eq!(random_ranking_ap(3, 1), (1.0 + 0.5 + 1.0 / 3.0) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn metric_closed_forms() {
        // everything predicted positive, prevalence 0.25
        let truth = [1, 0, 0, 0, 1, 0, 0, 0];
        let m = MetricsRow::compute(Method::Qmme, &[1; 8], &[1.0; 8], &truth).unwrap();
        assert_eq!((m.recall, m.precision), (1.0, 0.25));
        // tie rule: everything predicted 0
        let m = MetricsRow::compute(Method::Qmme, &[0; 8], &[0.0; 8], &truth).unwrap();
        assert_eq!((m.recall, m.accuracy, m.precision), (0.0, 0.75, 0.0));
        assert!(m.precision_undefined);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn six_node_confusion() {
        // TP=2, FP=1, FN=1, TN=2
        let truth = [1, 1, 1, 0, 0, 0];
        let pred = [1, 1, 0, 1, 0, 0];
        let scores = [0.9, 0.8, 0.1, 0.7, 0.2, 0.3];
        let m = MetricsRow::compute(Method::Mopro, &pred, &scores, &truth).unwrap();
        assert_eq!(m.confusion, Confusion { tp: 2, fp: 1, tn: 2, fn_: 1 });
        assert_eq!(m.accuracy, 4.0 / 6.0);
        assert_eq!(m.precision, 2.0 / 3.0);
        assert_eq!(m.recall, 2.0 / 3.0);
        assert_abs_diff_eq!(m.f1, 2.0 / 3.0, epsilon = 1e-15);
        // ranks: 1(+) 1, 2(+) 1, 3(−), 4(−), 5(−), 6(+) 3/6
        assert_abs_diff_eq!(m.auprc, (1.0 + 1.0 + 0.5) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn t_test_examples() {
        let t = paired_t_test("x", &[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert_abs_diff_eq!(t.t, 3.873, epsilon = 1e-3);
        assert_eq!(t.df, 3);
        assert!(t.p > 0.0 && t.p < 0.05);
        let b = [0.1, 0.2, 0.35];
        let a: Vec<f64> = b.iter().map(|x| x + 1.0).collect();
        assert!(matches!(paired_t_test("x", &a, &b), Err(Error::DegenerateTTest)));
        assert!(matches!(paired_t_test("x", &b, &b), Err(Error::DegenerateTTest)));
        let neg = paired_t_test("x", &[0.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(neg.t, -t.t);
        assert_eq!(neg.p, t.p);
    }

    #[test]
    fn synth_is_deterministic() {
        let cfg = SynthConfig { n: 300, seed: 11, ..Default::default() };
        let a = synth_generate(&cfg).unwrap();
        let b = synth_generate(&cfg).unwrap();
        assert_eq!(a.graph().edges(), b.graph().edges());
        assert_eq!(a.graph().raw_features(), b.graph().raw_features());
        assert_eq!(a.positives(), b.positives());
        assert_eq!(a.graph().node_count(), 300);
        assert_eq!(a.positives().len(), 15);
    }

    #[test]
    fn single_split_report() {
        let d = small_dataset(10);
        let cfg = ExperimentConfig { n_splits: 1, ..Default::default() };
        let r = run_experiment(&d, &cfg).unwrap();
        assert!(r.t_tests.is_empty());
        assert!(r.warnings.iter().any(|w| w.contains("t-tests skipped")));
        assert_eq!(r.per_split.len(), 1);
        assert_eq!(r.per_split[0].metrics.len(), 2);
    }

    #[test]
    fn reports_are_reproducible_and_paired() {
        let d = small_dataset(20);
        let cfg = ExperimentConfig { n_splits: 4, seed: 5, ..Default::default() };
        let a = serde_json::to_string(&run_experiment(&d, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&d, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let r: ExperimentReport = serde_json::from_str(&a).unwrap();
        assert_eq!(r.config, cfg);
        for s in &r.per_split {
            assert_eq!(s.train_size, 32);
            assert_eq!(s.metrics[0].method, Method::Qmme);
            assert_eq!(s.metrics[1].method, Method::Mopro);
        }
        assert_eq!(r.values(Method::Qmme, "recall").len(), 4);
    }

    proptest! {
        #[test]
        fn metric_consistency(entries in prop::collection::vec((0u8..2, 0u8..2, -5.0f64..5.0), 2..60)) {
            prop_assume!(entries.iter().any(|e| e.1 == 1));
            let pred: Vec<u8> = entries.iter().map(|e| e.0).collect();
            let truth: Vec<u8> = entries.iter().map(|e| e.1).collect();
            let scores: Vec<f64> = entries.iter().map(|e| e.2).collect();
            let m = MetricsRow::compute(Method::Qmme, &pred, &scores, &truth).unwrap();
            let c = m.confusion;
            prop_assert_eq!(c.total(), entries.len());
            prop_assert_eq!((m.accuracy * entries.len() as f64).round() as usize, c.tp + c.tn);
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-15);
            }
            for v in [m.accuracy, m.precision, m.recall, m.f1, m.auprc] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let warped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(auprc(&warped, &truth).unwrap(), m.auprc);
        }

        #[test]
        fn splits_are_balanced_partitions(seed in any::<u64>()) {
            let d = small_dataset(12);
            let s = make_split(&d, seed).unwrap();
            prop_assert_eq!(s.train_positives.len(), s.train_negatives.len());
            let mut all: Vec<usize> = s.train_positives.iter().chain(&s.train_negatives).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d.graph().node_count()).collect::<Vec<_>>());
            let l = s.labeled_set().unwrap();
            prop_assert_eq!(l.len() % 2, 0);
            prop_assert_eq!(l.positives().count(), l.negatives().count());
        }
    }
}
