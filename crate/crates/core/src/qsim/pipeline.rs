//! Swap-test classification pipeline on exact statevectors.
//!
//! Register order (least significant first): ancilla `a`, test data `d_t`,
//! test index `v_t`, label `y`, labeled data `d_l`, labeled index `v_l`.
//!
//! The `𝔪`-qubit embedded states are first produced by [`EmbeddingCircuit`].
//! The data registers are then carried in an orthonormal frame `W` of the
//! span of the embedded states: `c-SWAP` commutes with `W ⊗ W` and every other
//! pipeline gate acts only on `a`, `y` and the index registers, so the joint
//! ancilla/label statistics are identical to the uncompressed circuit.

use std::f64::consts::FRAC_1_SQRT_2;

use super::circuit::EmbeddingCircuit;
use super::{node_index_bits, norm, Register};
use crate::classify::LabeledSet;
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

const DEPENDENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    /// Data registers span only the embedded states (Gram–Schmidt frame).
    Compressed,
    /// Data registers hold the given vectors verbatim (length must be a power of two).
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineLayout {
    pub data_bits: usize,
    pub node_bits: usize,
    pub index_bits: usize,
}

impl PipelineLayout {
    pub fn ancilla(&self) -> Register {
        Register { name: "a", offset: 0, width: 1 }
    }

    pub fn test_data(&self) -> Register {
        Register { name: "d_t", offset: 1, width: self.data_bits }
    }

    pub fn test_index(&self) -> Register {
        Register { name: "v_t", offset: 1 + self.data_bits, width: self.node_bits }
    }

    pub fn label(&self) -> Register {
        Register { name: "y", offset: 1 + self.data_bits + self.node_bits, width: 1 }
    }

    pub fn labeled_data(&self) -> Register {
        Register { name: "d_l", offset: 2 + self.data_bits + self.node_bits, width: self.data_bits }
    }

    pub fn labeled_index(&self) -> Register {
        Register {
            name: "v_l",
            offset: 2 + 2 * self.data_bits + self.node_bits,
            width: self.index_bits,
        }
    }

    pub fn total_qubits(&self) -> usize {
        2 + 2 * self.data_bits + self.node_bits + self.index_bits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineState {
    pub layout: PipelineLayout,
    /// Dimension of the data-register frame actually spanned.
    pub frame_dim: usize,
    amps: Vec<f64>,
}

impl PipelineState {
    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }
}

/// Exact marginal `P(a, l)` over ancilla and label qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution {
    pub p: [[f64; 2]; 2],
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// `⟨σ_z^(a) σ_z^(l)⟩ = P(0,0) − P(0,1) − P(1,0) + P(1,1)`.
    pub fn expectation(&self) -> f64 {
        self.p[0][0] - self.p[0][1] - self.p[1][0] + self.p[1][1]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal frame of the span of `vectors` (modified Gram–Schmidt, two passes).
fn orthonormal_frame(vectors: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for e in &frame {
                let p = dot(e, &r);
                r.iter_mut().zip(e).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&r);
        if n > DEPENDENCE_TOLERANCE * norm(v).max(1.0) {
            r.iter_mut().for_each(|x| *x /= n);
            frame.push(r);
        }
    }
    frame
}

fn hadamard(amps: &mut [f64], qubit: usize) {
    let bit = 1usize << qubit;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a, b) = (amps[i], amps[i | bit]);
            amps[i] = (a + b) * FRAC_1_SQRT_2;
            amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
        }
    }
}

fn permute(amps: &mut Vec<f64>, f: impl Fn(usize) -> usize) {
    let mut new = vec![0.0; amps.len()];
    for (i, &a) in amps.iter().enumerate() {
        if a != 0.0 {
            new[f(i)] = a;
        }
    }
    *amps = new;
}

/// Maps `|0⟩` of `reg` to the per-branch coordinate vector `coords(i)`.
/// This is the action of the embedding unitary on its `|0…0⟩` input column.
fn load_register<'a>(amps: &mut Vec<f64>, reg: Register, coords: impl Fn(usize) -> &'a [f64]) -> Result<()> {
    let mut new = vec![0.0; amps.len()];
    for (i, &a) in amps.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        if reg.read(i) != 0 {
            return Err(Error::Internal(format!("register {} not in |0⟩ before state load", reg.name)));
        }
        for (j, &c) in coords(i).iter().enumerate() {
            new[reg.write(i, j)] += a * c;
        }
    }
    *amps = new;
    Ok(())
}

fn check_norm(amps: &[f64], step: &str) -> Result<()> {
    let n = norm(amps);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::Internal(format!("pipeline norm {n} after {step}")));
    }
    Ok(())
}

/// Runs the swap-test pipeline on given data states.
///
/// `labeled_states[j]` and `labels[j]` belong to the `j`-th labeled node; the
/// labeled count must be a power of two so that `H^{⊗k}` prepares the uniform
/// index superposition.
pub fn swap_test_pipeline(
    test_state: &[f64],
    test_node: usize,
    node_bits: usize,
    labeled_states: &[&[f64]],
    labels: &[u8],
    frame: FrameMode,
) -> Result<PipelineState> {
    let count = labeled_states.len();
    if count == 0 {
        return Err(Error::EmptyLabeledSet);
    }
    if !count.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(count));
    }
    if labels.len() != count {
        return Err(Error::DimensionMismatch { left: labels.len(), right: count });
    }
    if test_node >= 1 << node_bits {
        return Err(Error::InvalidArgument(format!("test node {test_node} needs more than {node_bits} bits")));
    }
    for s in labeled_states {
        if s.len() != test_state.len() {
            return Err(Error::DimensionMismatch { left: s.len(), right: test_state.len() });
        }
    }

    let (test_coords, labeled_coords, frame_dim): (Vec<f64>, Vec<Vec<f64>>, usize) = match frame {
        FrameMode::Identity => {
            if !test_state.len().is_power_of_two() {
                return Err(Error::InvalidArgument("state length must be a power of two".into()));
            }
            (
                test_state.to_vec(),
                labeled_states.iter().map(|s| s.to_vec()).collect(),
                test_state.len(),
            )
        }
        FrameMode::Compressed => {
            let mut all: Vec<&[f64]> = vec![test_state];
            all.extend_from_slice(labeled_states);
            let basis = orthonormal_frame(&all);
            let project = |s: &[f64]| basis.iter().map(|e| dot(e, s)).collect::<Vec<_>>();
            (
                project(test_state),
                labeled_states.iter().map(|s| project(s)).collect(),
                basis.len(),
            )
        }
    };

    let layout = PipelineLayout {
        data_bits: frame_dim.next_power_of_two().trailing_zeros().max(1) as usize,
        node_bits,
        index_bits: count.trailing_zeros() as usize,
    };
    let (anc, dt, vt, y, dl, vl) = (
        layout.ancilla(),
        layout.test_data(),
        layout.test_index(),
        layout.label(),
        layout.labeled_data(),
        layout.labeled_index(),
    );

    let mut amps = vec![0.0; 1 << layout.total_qubits()];
    amps[vt.write(0, test_node)] = 1.0;

    for q in vl.qubits() {
        hadamard(&mut amps, q);
    }
    check_norm(&amps, "index superposition")?;

    load_register(&mut amps, dt, |_| &test_coords)?;
    check_norm(&amps, "test embedding")?;
    load_register(&mut amps, dl, |i| &labeled_coords[vl.read(i)])?;
    check_norm(&amps, "labeled embedding")?;

    permute(&mut amps, |i| if labels[vl.read(i)] == 1 { i ^ y.mask() } else { i });

    hadamard(&mut amps, anc.offset);
    permute(&mut amps, |i| {
        if anc.read(i) == 1 {
            let (t, l) = (dt.read(i), dl.read(i));
            dl.write(dt.write(i, l), t)
        } else {
            i
        }
    });
    hadamard(&mut amps, anc.offset);
    check_norm(&amps, "swap test")?;

    Ok(PipelineState { layout, frame_dim, amps })
}

/// Full pipeline for test node `v_t` against a labeled set of power-of-two size.
pub fn run_pipeline(
    g: &AttributedGraph,
    test_node: usize,
    labeled: &LabeledSet,
    dprime: Option<u32>,
) -> Result<PipelineState> {
    if !labeled.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(labeled.len()));
    }
    let circuit = EmbeddingCircuit::new(g, dprime)?;
    let test = circuit.apply_u_g(test_node)?;
    let labeled_states = labeled
        .nodes()
        .iter()
        .map(|&v| circuit.apply_u_g(v))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = labeled_states.iter().map(|s| s.data_state()).collect();
    swap_test_pipeline(
        test.data_state(),
        test_node,
        node_index_bits(g.node_count()),
        &refs,
        labeled.labels(),
        FrameMode::Compressed,
    )
}

pub fn joint_measurement_distribution(p: &PipelineState) -> JointDistribution {
    let (anc, y) = (p.layout.ancilla(), p.layout.label());
    let mut out = [[0.0; 2]; 2];
    for (i, a) in p.amps.iter().enumerate() {
        out[anc.read(i)][y.read(i)] += a * a;
    }
    JointDistribution { p: out }
}
