//! TSV ingestion and canonical re-emission of attributed graphs.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AttributedGraph, Label};
use crate::error::{Error, Result};

const HEADER_WORDS: &[&str] = &[
    "source", "target", "from", "to", "gene", "genes", "node", "nodes", "id", "src", "dst", "symbol",
    "source_genesymbol", "target_genesymbol", "gene_a", "gene_b", "value", "pvalue", "p", "score",
];

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

fn is_header_word(field: &str) -> bool {
    HEADER_WORDS.contains(&field.trim().to_ascii_lowercase().as_str())
}

/// Reads a `source<TAB>target` interaction list. Extra columns are ignored.
///
/// A first row is treated as a header when its fields are non-numeric and
/// either the following rows are numeric or the fields are recognizable
/// column names; symbol-keyed files therefore keep their first interaction.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let rows: Vec<(usize, Vec<&str>)> = data_lines(&text).map(|(n, l)| (n, l.split('\t').collect())).collect();
    for (n, fields) in &rows {
        if fields.len() < 2 || fields[0].trim().is_empty() || fields[1].trim().is_empty() {
            return Err(Error::parse(path, *n, "expected `source<TAB>target`"));
        }
    }
    let skip_header = match rows.first() {
        Some((_, first)) if !is_numeric(first[0]) || !is_numeric(first[1]) => {
            let rest_numeric = rows.len() > 1
                && rows[1..].iter().all(|(_, f)| is_numeric(f[0]) && is_numeric(f[1]));
            rest_numeric || (is_header_word(first[0]) && is_header_word(first[1]))
        }
        _ => false,
    };
    Ok(rows
        .into_iter()
        .skip(usize::from(skip_header))
        .map(|(_, f)| (f[0].trim().to_string(), f[1].trim().to_string()))
        .collect())
}

/// Reads `gene<TAB>value` rows; a first row whose value does not parse is a header.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut out = HashMap::new();
    for (i, (n, line)) in data_lines(&text).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields[0].trim().is_empty() {
            return Err(Error::parse(path, n, "expected `gene<TAB>value`"));
        }
        match fields[1].trim().parse::<f64>() {
            Ok(x) => {
                out.insert(fields[0].trim().to_string(), x);
            }
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::parse(path, n, format!("invalid feature value `{}`", fields[1].trim())));
            }
        }
    }
    Ok(out)
}

/// Reads one positive id per line (first column).
pub fn read_label_file(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    Ok(data_lines(&text)
        .filter_map(|(_, l)| l.split('\t').next())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect())
}

fn label_code(l: Label) -> &'static str {
    match l {
        Label::Positive => "1",
        Label::Negative => "0",
        Label::Unlabeled => ".",
    }
}

/// Writes the canonical graph file: one `N` row per node in index order, then
/// one `E` row per undirected edge in ascending index order.
pub fn write_graph<W: Write>(g: &AttributedGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# qmme-graph\tnodes={}\tedges={}", g.node_count(), g.edge_count())?;
    for v in 0..g.node_count() {
        writeln!(
            w,
            "N\t{}\t{}\t{}\t{}",
            g.id(v),
            g.raw_features()[v],
            g.feature(v),
            label_code(g.label(v))
        )?;
    }
    for (u, v) in g.edges() {
        writeln!(w, "E\t{}\t{}", g.id(u), g.id(v))?;
    }
    Ok(())
}

pub fn save_graph(g: &AttributedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_graph(g, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Plain `source<TAB>target` re-emission with ascending edges.
pub fn write_edge_list<W: Write>(g: &AttributedGraph, mut w: W) -> std::io::Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{}\t{}", g.id(u), g.id(v))?;
    }
    Ok(())
}

/// Reads a canonical graph file written by [`write_graph`].
pub fn load_graph(path: impl AsRef<Path>) -> Result<AttributedGraph> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut ids = Vec::new();
    let mut raw = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    for (n, line) in data_lines(&text) {
        let f: Vec<&str> = line.split('\t').collect();
        match f.as_slice() {
            ["N", id, r, x, l] => {
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(path, n, format!("invalid number `{s}`")))
                };
                let label = match *l {
                    "1" => Label::Positive,
                    "0" => Label::Negative,
                    "." => Label::Unlabeled,
                    other => return Err(Error::parse(path, n, format!("invalid label `{other}`"))),
                };
                let x = parse(x)?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::parse(path, n, format!("feature {x} outside [0, 1]")));
                }
                if index.insert(id.to_string(), ids.len()).is_some() {
                    return Err(Error::parse(path, n, format!("duplicate node `{id}`")));
                }
                ids.push(id.to_string());
                raw.push(parse(r)?);
                features.push(x);
                labels.push(label);
            }
            ["E", a, b] => {
                let lookup = |s: &str| {
                    index
                        .get(s)
                        .copied()
                        .ok_or_else(|| Error::parse(path, n, format!("unknown node `{s}`")))
                };
                let (u, v) = (lookup(a)?, lookup(b)?);
                if u == v {
                    return Err(Error::parse(path, n, "self-loop"));
                }
                edges.push((u, v));
            }
            _ => return Err(Error::parse(path, n, "expected an `N` or `E` record")),
        }
    }
    if ids.is_empty() {
        return Err(Error::NoUsableNodes);
    }
    let mut sets = vec![BTreeSet::new(); ids.len()];
    for (u, v) in edges {
        sets[u].insert(v);
        sets[v].insert(u);
    }
    let adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    AttributedGraph::assemble(ids, adjacency, raw, features, labels)
}
