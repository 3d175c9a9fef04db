//! `qmme` command-line frontend.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::bench::{run_experiment, synth_generate, Dataset, ExperimentConfig, SynthConfig};
use crate::classify::{classify_all, write_predictions, KernelMode, LabeledSet, ShotConfig};
use crate::embed::{embed_all, scaled_embedding, EmbeddingMatrix, Method};
use crate::error::{Error, Result};
use crate::graph::io::{load_graph, read_edge_list, read_feature_file, read_label_file, save_graph};
use crate::graph::{build_graph, AttributedGraph};
use crate::qsim::{extract_moment_amplitudes, resource_estimate, EmbeddingCircuit, DEFAULT_QUBIT_LIMIT};

/// Precision assumed by `resources` when `--dprime` is not given.
pub const DEFAULT_RESOURCE_DPRIME: u32 = 53;

#[derive(Debug, Parser)]
#[command(name = "qmme", version, about = "Moment embeddings and swap-test kernel classification on attributed networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Root seed; every other seed is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file for the command's main artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = KernelMode::MomentScaled)]
    pub kernel_mode: KernelMode,
    /// Fixed-point bits for features inside the circuit (exact when omitted).
    #[arg(long, global = true)]
    pub dprime: Option<u32>,
    /// Estimate expectations from this many sampled measurements.
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build a canonical graph file from an edge list, features and labels.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Write per-node embeddings as TSV.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = Method::Qmme)]
        method: Method,
    },
    /// Classify every node outside a labeled reference set.
    Classify {
        #[arg(long)]
        graph: PathBuf,
        /// TSV `gene<TAB>label` with labels 0/1.
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long, default_value_t = Method::Qmme)]
        method: Method,
    },
    /// Repeated balanced-split evaluation of one or more methods.
    Experiment {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 50)]
        splits: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![Method::Qmme, Method::Mopro])]
        methods: Vec<Method>,
        /// Also write per-split metrics as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare simulated circuit amplitudes with the algebraic embedding.
    SimulateVerify {
        #[arg(long)]
        graph: PathBuf,
        /// QMME embedding TSV to check instead of recomputing it.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_QUBIT_LIMIT)]
        max_qubits: usize,
    },
    /// Qubit counts, oracle calls and shot budget.
    Resources {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        degree_bound: usize,
        #[arg(long, default_value_t = 2)]
        labeled: usize,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Generate a planted-signal graph file.
    Synth {
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        #[arg(long, default_value_t = 4.0)]
        mean_degree: f64,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.05)]
        positive_fraction: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Embed { .. } => "embed",
            Command::Classify { .. } => "classify",
            Command::Experiment { .. } => "experiment",
            Command::SimulateVerify { .. } => "simulate-verify",
            Command::Resources { .. } => "resources",
            Command::Synth { .. } => "synth",
        }
    }
}

/// Everything needed to rerun a command; echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub n_splits: Option<usize>,
    pub kernel_mode: KernelMode,
    pub methods: Vec<Method>,
    pub dprime: Option<u32>,
    pub shots: Option<u64>,
    pub out: Option<String>,
    pub verbosity: u8,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Self {
        let g = &cli.global;
        let mut inputs = BTreeMap::new();
        let mut parameters = BTreeMap::new();
        let mut methods = Vec::new();
        let mut n_splits = None;
        match &cli.command {
            Command::Ingest { edges, features, labels } => {
                inputs.insert("edges".into(), path_str(edges));
                inputs.insert("features".into(), path_str(features));
                if let Some(l) = labels {
                    inputs.insert("labels".into(), path_str(l));
                }
            }
            Command::Embed { graph, method } => {
                inputs.insert("graph".into(), path_str(graph));
                methods.push(*method);
            }
            Command::Classify { graph, labeled, method } => {
                inputs.insert("graph".into(), path_str(graph));
                inputs.insert("labeled".into(), path_str(labeled));
                methods.push(*method);
            }
            Command::Experiment { graph, splits, methods: m, csv } => {
                inputs.insert("graph".into(), path_str(graph));
                n_splits = Some(*splits);
                methods = m.clone();
                if let Some(c) = csv {
                    parameters.insert("csv".into(), path_str(c).into());
                }
            }
            Command::SimulateVerify { graph, embeddings, tolerance, max_qubits } => {
                inputs.insert("graph".into(), path_str(graph));
                if let Some(e) = embeddings {
                    inputs.insert("embeddings".into(), path_str(e));
                }
                parameters.insert("tolerance".into(), (*tolerance).into());
                parameters.insert("max_qubits".into(), (*max_qubits).into());
            }
            Command::Resources { nodes, degree_bound, labeled, epsilon } => {
                parameters.insert("nodes".into(), (*nodes).into());
                parameters.insert("degree_bound".into(), (*degree_bound).into());
                parameters.insert("labeled".into(), (*labeled).into());
                if let Some(e) = epsilon {
                    parameters.insert("epsilon".into(), (*e).into());
                }
            }
            Command::Synth { nodes, mean_degree, delta, positive_fraction } => {
                parameters.insert("nodes".into(), (*nodes).into());
                parameters.insert("mean_degree".into(), (*mean_degree).into());
                parameters.insert("delta".into(), (*delta).into());
                parameters.insert("positive_fraction".into(), (*positive_fraction).into());
            }
        }
        Self {
            command: cli.command.name().into(),
            inputs,
            seed: g.seed,
            n_splits,
            kernel_mode: g.kernel_mode,
            methods,
            dprime: g.dprime,
            shots: g.shots,
            out: g.out.as_deref().map(path_str),
            verbosity: g.verbose,
            parameters,
        }
    }
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    run_config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn emit_json<T: Serialize>(config: &RunConfig, body: T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&Echo { run_config: config, body })?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Writes a tabular artifact to `--out` (then the JSON summary to stdout) or,
/// without `--out`, the artifact to stdout and the summary to stderr.
fn emit_table<T: Serialize>(
    config: &RunConfig,
    out: Option<&Path>,
    summary: T,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    let text = serde_json::to_string_pretty(&Echo { run_config: config, body: summary })?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))?;
            println!("{text}");
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| Error::io("<stdout>", e))?;
            eprintln!("{text}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GraphSummary {
    nodes: usize,
    edges: usize,
    positives: usize,
    degree_bound: usize,
}

fn summarize(g: &AttributedGraph) -> GraphSummary {
    GraphSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        positives: g.positives().len(),
        degree_bound: g.max_degree_bound(),
    }
}

fn read_labeled(g: &AttributedGraph, path: &Path) -> Result<LabeledSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let index = g.id_index();
    let (mut nodes, mut labels) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(y)) = (fields.next(), fields.next()) else {
            return Err(Error::parse(path, i + 1, "expected gene<TAB>label"));
        };
        let y = match y.trim() {
            "0" => 0,
            "1" => 1,
            _ if i == 0 => continue,
            other => return Err(Error::parse(path, i + 1, format!("label `{other}` is not 0 or 1"))),
        };
        match index.get(id.trim()) {
            Some(&v) => {
                nodes.push(v);
                labels.push(y);
            }
            None => warn!("labeled gene `{id}` is not in the graph; skipped"),
        }
    }
    LabeledSet::new(nodes, labels)
}

#[derive(Serialize)]
struct AmplitudeCheck {
    node: String,
    c: usize,
    i: usize,
    simulated: f64,
    expected: f64,
    abs_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    tolerance: f64,
    simulated_qubits: usize,
    checks: usize,
    failures: usize,
    max_abs_error: f64,
    max_norm_deviation: f64,
    rows: Vec<AmplitudeCheck>,
}

fn simulate_verify(g: &AttributedGraph, embeddings: Option<&Path>, tolerance: f64, max_qubits: usize, dprime: Option<u32>) -> Result<VerifyReport> {
    let circuit = EmbeddingCircuit::with_limit(g, dprime, max_qubits)?;
    let expected: Vec<Vec<f64>> = match embeddings {
        Some(p) => {
            let (ids, m) = EmbeddingMatrix::read_tsv(p)?;
            if m.method() != Method::Qmme {
                return Err(Error::InvalidArgument("simulate-verify needs qmme embeddings".into()));
            }
            let by_id: HashMap<&str, usize> = ids.iter().enumerate().map(|(r, id)| (id.as_str(), r)).collect();
            (0..g.node_count())
                .map(|v| {
                    by_id
                        .get(g.id(v))
                        .map(|&r| m.row(r).to_vec())
                        .ok_or_else(|| Error::InvalidArgument(format!("embedding file lacks node `{}`", g.id(v))))
                })
                .collect::<Result<_>>()?
        }
        None => (0..g.node_count())
            .map(|v| scaled_embedding(g, v).map(|e| e.a.to_vec()))
            .collect::<Result<_>>()?,
    };
    let mut rows = Vec::new();
    let mut max_norm_deviation: f64 = 0.0;
    for v in 0..g.node_count() {
        let state = circuit.apply_u_g(v)?;
        max_norm_deviation = max_norm_deviation.max((state.norm() - 1.0).abs());
        let amps = extract_moment_amplitudes(&state);
        for c in 0..2 {
            for i in 0..4 {
                let (s, e) = (amps[4 * c + i], expected[v][4 * c + i]);
                let err = (s - e).abs();
                rows.push(AmplitudeCheck {
                    node: g.id(v).to_string(),
                    c,
                    i,
                    simulated: s,
                    expected: e,
                    abs_error: err,
                    pass: err <= tolerance,
                });
            }
        }
    }
    Ok(VerifyReport {
        tolerance,
        simulated_qubits: circuit.layout().simulated_qubits(),
        checks: rows.len(),
        failures: rows.iter().filter(|r| !r.pass).count(),
        max_abs_error: rows.iter().map(|r| r.abs_error).fold(0.0, f64::max),
        max_norm_deviation,
        rows,
    })
}

fn run_command(cli: &Cli, config: &RunConfig) -> Result<()> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match &cli.command {
        Command::Ingest { edges, features, labels } => {
            let edge_list = read_edge_list(edges)?;
            let raw = read_feature_file(features)?;
            let positives = labels.as_ref().map(read_label_file).transpose()?;
            let graph = build_graph(&edge_list, &raw, positives.as_ref())?;
            let summary = summarize(&graph);
            if summary.positives == 0 {
                warn!("no positive nodes in the graph");
            }
            info!("{} nodes, {} edges, {} positives", summary.nodes, summary.edges, summary.positives);
            if let Some(p) = out {
                save_graph(&graph, p)?;
            }
            emit_json(config, summary, None)
        }
        Command::Embed { graph, method } => {
            let graph = load_graph(graph)?;
            let m = embed_all(&graph, *method)?;
            let summary = serde_json::json!({ "nodes": m.len(), "dim": m.dim(), "method": method });
            emit_table(config, out, summary, |w| m.write_tsv(graph.ids(), w))
        }
        Command::Classify { graph, labeled, method } => {
            let graph = load_graph(graph)?;
            let labeled = read_labeled(&graph, labeled)?;
            let emb = crate::bench::method_embeddings(&graph, *method, g.kernel_mode, g.dprime)?;
            let mut in_set = vec![false; graph.node_count()];
            for &v in labeled.nodes() {
                in_set[v] = true;
            }
            let tests: Vec<usize> = (0..graph.node_count()).filter(|&v| !in_set[v]).collect();
            let shots = g.shots.map(|r| ShotConfig { shots: r, seed: g.seed });
            let outcomes = classify_all(&tests, &labeled, &emb, g.kernel_mode, shots)?;
            let summary = serde_json::json!({
                "test_nodes": outcomes.len(),
                "labeled": labeled.len(),
                "predicted_positive": outcomes.iter().filter(|o| o.label == 1).count(),
            });
            emit_table(config, out, summary, |w| write_predictions(&graph, &outcomes, w))
        }
        Command::Experiment { graph, splits, methods, csv } => {
            let d = Dataset::from_graph(load_graph(graph)?);
            let exp = ExperimentConfig {
                n_splits: *splits,
                seed: g.seed,
                methods: methods.clone(),
                kernel_mode: g.kernel_mode,
                shots: g.shots,
                dprime: g.dprime,
            };
            let report = run_experiment(&d, &exp)?;
            if let Some(p) = csv {
                std::fs::write(p, report.to_csv()).map_err(|e| Error::io(p, e))?;
            }
            emit_json(config, report, out)
        }
        Command::SimulateVerify { graph, embeddings, tolerance, max_qubits } => {
            let graph = load_graph(graph)?;
            let report = simulate_verify(&graph, embeddings.as_deref(), *tolerance, *max_qubits, g.dprime)?;
            println!("node\tc\ti\tsimulated\texpected\tabs_error\tstatus");
            for r in &report.rows {
                let status = if r.pass { "pass" } else { "FAIL" };
                println!("{}\t{}\t{}\t{:.12e}\t{:.12e}\t{:.3e}\t{status}", r.node, r.c, r.i, r.simulated, r.expected, r.abs_error);
            }
            let (failures, checks) = (report.failures, report.checks);
            if let Some(p) = out {
                emit_json(config, report, Some(p))?;
            }
            if failures > 0 {
                return Err(Error::InvalidArgument(format!(
                    "simulate-verify: {failures} of {checks} amplitude checks exceed tolerance"
                )));
            }
            println!("all {checks} amplitude checks pass");
            Ok(())
        }
        Command::Resources { nodes, degree_bound, labeled, epsilon } => {
            if *nodes == 0 {
                return Err(Error::InvalidArgument("--nodes must be positive".into()));
            }
            let dprime = g.dprime.unwrap_or(DEFAULT_RESOURCE_DPRIME);
            emit_json(config, resource_estimate(*nodes, *degree_bound, dprime, *labeled, *epsilon), out)
        }
        Command::Synth { nodes, mean_degree, delta, positive_fraction } => {
            let d = synth_generate(&SynthConfig {
                n: *nodes,
                mean_degree: *mean_degree,
                delta: *delta,
                positive_fraction: *positive_fraction,
                seed: g.seed,
            })?;
            if let Some(p) = out {
                save_graph(d.graph(), p)?;
            }
            emit_json(config, summarize(d.graph()), None)
        }
    }
}

/// Runs a parsed command, honoring `--threads`.
pub fn run(cli: &Cli) -> Result<()> {
    let config = RunConfig::from_cli(cli);
    match cli.global.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?;
            pool.install(|| run_command(cli, &config))
        }
        None => run_command(cli, &config),
    }
}
