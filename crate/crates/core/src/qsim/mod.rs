//! Exact statevector simulation of the moment-embedding circuit `U_G` and of
//! the swap-test classification pipeline, for small graphs.
//!
//! Every gate used here is a real orthogonal matrix (Hadamards, basis
//! permutations, `R_y` rotations), so amplitudes are stored as `f64`.

mod circuit;
mod pipeline;
mod resources;

use std::io::Write;

pub use circuit::{Control, EmbeddingCircuit, NodeSource, DEFAULT_QUBIT_LIMIT};
pub use pipeline::{
    joint_measurement_distribution, run_pipeline, swap_test_pipeline, FrameMode, JointDistribution, PipelineLayout,
    PipelineState,
};
pub use resources::{resource_estimate, shots_for_epsilon, OracleCalls, ResourceReport};

use crate::error::{Error, Result};

/// A contiguous block of qubits inside the amplitude index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    pub name: &'static str,
    pub offset: usize,
    pub width: usize,
}

impl Register {
    pub fn mask(&self) -> usize {
        ((1usize << self.width) - 1) << self.offset
    }

    pub fn read(&self, index: usize) -> usize {
        (index >> self.offset) & ((1usize << self.width) - 1)
    }

    pub fn write(&self, index: usize, value: usize) -> usize {
        (index & !self.mask()) | (value << self.offset)
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.width
    }
}

/// Register layout of the embedding circuit for a graph with `N` nodes and
/// degree bound `s = 2^𝔰`.
///
/// The data register holds `𝔪 = 2n + 8` qubits: `ℓ₁ (n)`, `ℓ₂ (n)`, `c (1)`,
/// `i (2)` and the ancilla block `a (5)`. Two flag work qubits sit above it.
/// The node register `v (n)` stays in a computational basis state throughout
/// `U_G`, so it is carried as a classical label instead of amplitude bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub node_bits: usize,
    pub degree_bits: usize,
    pub dprime: Option<u32>,
}

impl RegisterLayout {
    pub fn new(node_count: usize, degree_bound: usize, dprime: Option<u32>) -> Self {
        Self {
            node_bits: node_index_bits(node_count),
            degree_bits: degree_bound.next_power_of_two().trailing_zeros() as usize,
            dprime,
        }
    }

    pub fn ell1(&self) -> Register {
        Register { name: "l1", offset: 0, width: self.node_bits }
    }

    pub fn ell2(&self) -> Register {
        Register { name: "l2", offset: self.node_bits, width: self.node_bits }
    }

    pub fn hop(&self) -> Register {
        Register { name: "c", offset: 2 * self.node_bits, width: 1 }
    }

    pub fn moment(&self) -> Register {
        Register { name: "i", offset: 2 * self.node_bits + 1, width: 2 }
    }

    pub fn ancilla(&self) -> Register {
        Register { name: "a", offset: 2 * self.node_bits + 3, width: 5 }
    }

    pub fn flag1(&self) -> usize {
        2 * self.node_bits + 8
    }

    pub fn flag2(&self) -> usize {
        2 * self.node_bits + 9
    }

    /// Classical node register (not part of the amplitude index).
    pub fn node(&self) -> Register {
        Register { name: "v", offset: 0, width: self.node_bits }
    }

    /// `𝔪 = 2n + 8`.
    pub fn data_qubits(&self) -> usize {
        2 * self.node_bits + 8
    }

    /// Qubits held in the amplitude array: data register plus both flags.
    pub fn simulated_qubits(&self) -> usize {
        self.data_qubits() + 2
    }

    /// Logical qubit count including the node register.
    pub fn total_qubits(&self) -> usize {
        self.simulated_qubits() + self.node_bits
    }

    pub fn data_registers(&self) -> [Register; 5] {
        [self.ell1(), self.ell2(), self.hop(), self.moment(), self.ancilla()]
    }

    /// Amplitude index of `|c, i, 0…0⟩` for hop bit `c` and moment slot `i` (0-based).
    pub fn moment_index(&self, c: usize, i: usize) -> usize {
        self.moment().write(self.hop().write(0, c), i)
    }
}

/// `⌈log₂ N⌉`, at least one qubit.
pub fn node_index_bits(node_count: usize) -> usize {
    (node_count.max(2).next_power_of_two().trailing_zeros()) as usize
}

/// Normalized real amplitude vector over the embedding-circuit layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: RegisterLayout,
    node: usize,
    amps: Vec<f64>,
}

impl PureState {
    /// `|v⟩|0^𝔪⟩` with both flags clear.
    pub fn zero(layout: RegisterLayout, node: usize) -> Self {
        let mut amps = vec![0.0; 1 << layout.simulated_qubits()];
        amps[0] = 1.0;
        Self { layout, node, amps }
    }

    /// Basis state `|v⟩|index⟩`.
    pub fn basis(layout: RegisterLayout, node: usize, index: usize) -> Self {
        let mut amps = vec![0.0; 1 << layout.simulated_qubits()];
        amps[index] = 1.0;
        Self { layout, node, amps }
    }

    pub fn from_amplitudes(layout: RegisterLayout, node: usize, amps: Vec<f64>) -> Result<Self> {
        let expected = 1usize << layout.simulated_qubits();
        if amps.len() != expected {
            return Err(Error::DimensionMismatch { left: amps.len(), right: expected });
        }
        Ok(Self { layout, node, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// Squared norm of the component with any flag qubit set.
    pub fn flag_weight(&self) -> f64 {
        self.amps[1 << self.layout.data_qubits()..].iter().map(|a| a * a).sum()
    }

    /// The `𝔪`-qubit data-register state. Flags sit above the data bits, so
    /// this is the leading `2^𝔪` block of the amplitude array.
    pub fn data_state(&self) -> &[f64] {
        &self.amps[..1 << self.layout.data_qubits()]
    }

    pub(crate) fn amps_mut(&mut self) -> &mut Vec<f64> {
        &mut self.amps
    }

    /// Writes `basis-index<TAB>amplitude` for every nonzero amplitude.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "basis-index\tamplitude")?;
        for (i, a) in self.amps.iter().enumerate().filter(|(_, a)| **a != 0.0) {
            writeln!(w, "{i}\t{a:.16e}")?;
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Amplitudes on `|c, i, 0…0⟩`, hop-1 block first, moment order ascending.
pub fn extract_moment_amplitudes(state: &PureState) -> [f64; 8] {
    let mut out = [0.0; 8];
    for c in 0..2 {
        for i in 0..4 {
            out[c * 4 + i] = state.amps[state.layout.moment_index(c, i)];
        }
    }
    out
}

/// Rounds `x ∈ [0, 1]` to the nearest multiple of `2^-d′`, ties to even.
pub fn quantize(x: f64, dprime: u32) -> Result<f64> {
    if dprime < 1 {
        return Err(Error::InvalidArgument("d' must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("cannot quantize {x}: outside [0, 1]")));
    }
    let scale = 2f64.powi(dprime.min(1000) as i32);
    Ok((x * scale).round_ties_even() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.3, 2).unwrap(), 0.25);
        for d in 1..60 {
            assert_eq!(quantize(0.5, d).unwrap(), 0.5);
        }
        // ties go to the even multiple
        assert_eq!(quantize(0.375, 2).unwrap(), 0.5);
        assert_eq!(quantize(0.125, 2).unwrap(), 0.0);
        for x in [0.0, 1.0, 0.75, 0.5078125, 0.999, 0.6180339887498949] {
            assert_eq!(quantize(x, 53).unwrap(), x);
        }
        assert!(quantize(0.3, 0).is_err());
        assert!(quantize(1.5, 4).is_err());
    }

    #[test]
    fn layout_widths() {
        let l = RegisterLayout::new(3, 2, None);
        assert_eq!(l.node_bits, 2);
        assert_eq!(l.degree_bits, 1);
        assert_eq!(l.data_qubits(), 12);
        assert_eq!(l.simulated_qubits(), 14);
        let regs = l.data_registers();
        let total: usize = regs.iter().map(|r| r.width).sum();
        assert_eq!(total, l.data_qubits());
        for w in regs.windows(2) {
            assert_eq!(w[0].offset + w[0].width, w[1].offset);
        }
        assert_eq!(node_index_bits(1024), 10);
        assert_eq!(node_index_bits(1025), 11);
        assert_eq!(node_index_bits(2), 1);
    }

    #[test]
    fn register_read_write() {
        let r = Register { name: "x", offset: 3, width: 2 };
        let idx = r.write(0b1_00_111, 0b10);
        assert_eq!(idx, 0b1_10_111);
        assert_eq!(r.read(idx), 0b10);
    }
}
