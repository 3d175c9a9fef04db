use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::node_index_bits;

/// Oracle applications inside one `U_G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCalls {
    /// `O_L`, `c-O_L`, `c-O_L^T`, `O_L^T`.
    pub neighbor: u32,
    /// Hop-1 and hop-2 feature oracles.
    pub feature: u32,
    pub inverse_degree: u32,
    /// Embedding circuits per pipeline run (test and labeled register).
    pub embeddings_per_pipeline: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub m_qubits: usize,
    pub total_qubits: usize,
    pub oracle_calls: OracleCalls,
    pub asymptotics: BTreeMap<String, String>,
    pub shots_for_epsilon: Option<u64>,
}

/// `r = ⌈1/ε²⌉`, robust to the rounding of `1/ε²` for decimal `ε`.
pub fn shots_for_epsilon(epsilon: f64) -> Option<u64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return None;
    }
    let r = 1.0 / (epsilon * epsilon);
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        Some(nearest as u64)
    } else {
        Some(r.ceil() as u64)
    }
}

/// Qubit counts, oracle calls per embedding and the asymptotic classes of the
/// full prediction pipeline for a graph of `N` nodes, degree bound `s`,
/// precision `d′` and `|V_l|` labeled nodes.
pub fn resource_estimate(
    node_count: usize,
    degree_bound: usize,
    dprime: u32,
    labeled_count: usize,
    epsilon: Option<f64>,
) -> ResourceReport {
    let n = node_index_bits(node_count.max(1));
    let n = if node_count <= 1 { 0 } else { n };
    let m = 2 * n + 8;
    let log_s = degree_bound.max(1).next_power_of_two().trailing_zeros() as usize;
    let log_vl = labeled_count.max(1).next_power_of_two().trailing_zeros() as usize;
    let asymptotics: BTreeMap<String, String> = [
        ("gate_complexity", "O(polylog N + d')".to_string()),
        ("qubit_count", "O(log N + d')".to_string()),
        ("circuit_depth", "O(log N)".to_string()),
        ("query_complexity", format!("O(log^2 s), log^2 s = {}", log_s * log_s)),
        ("hadamards_per_embedding", format!("O(log s), log s = {log_s}")),
        ("swap_test_gates", format!("O(log |V_l|), log |V_l| = {log_vl}")),
        ("precision_bits", format!("d' = {dprime}")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    ResourceReport {
        m_qubits: m,
        total_qubits: 2 * m + 2 * n + 2,
        oracle_calls: OracleCalls {
            neighbor: 4,
            feature: 2,
            inverse_degree: 1,
            embeddings_per_pipeline: 2,
        },
        asymptotics,
        shots_for_epsilon: epsilon.and_then(shots_for_epsilon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_formula() {
        assert_eq!(resource_estimate(1024, 8, 16, 944, None).m_qubits, 28);
        let r = resource_estimate(2, 1, 8, 2, None);
        assert_eq!(r.m_qubits, 10);
        assert_eq!(r.total_qubits, 24);
        assert_eq!(resource_estimate(6850, 512, 16, 944, None).m_qubits, 2 * 13 + 8);
    }

    #[test]
    fn shot_counts() {
        assert_eq!(shots_for_epsilon(0.01), Some(10_000));
        assert_eq!(shots_for_epsilon(0.1), Some(100));
        assert_eq!(shots_for_epsilon(0.3), Some(12));
        assert_eq!(shots_for_epsilon(0.0), None);
    }

    #[test]
    fn json_keys() {
        let r = resource_estimate(16, 4, 8, 4, Some(0.05));
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["asymptotics", "m_qubits", "oracle_calls", "shots_for_epsilon", "total_qubits"]);
        assert_eq!(r.oracle_calls.neighbor, 4);
        assert_eq!(r.shots_for_epsilon, Some(400));
    }
}
