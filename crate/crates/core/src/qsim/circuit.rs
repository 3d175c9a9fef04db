use std::f64::consts::FRAC_1_SQRT_2;

use super::{norm, quantize, PureState, Register, RegisterLayout};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Hop};

/// Default cap on qubits held in one amplitude array.
pub const DEFAULT_QUBIT_LIMIT: usize = 26;

const NORM_TOLERANCE: f64 = 1e-12;

/// Control condition on a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub on: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Self { qubit, on: true }
    }

    pub fn off(qubit: usize) -> Self {
        Self { qubit, on: false }
    }

    fn holds(&self, index: usize) -> bool {
        ((index >> self.qubit) & 1 == 1) == self.on
    }
}

/// Where a neighbor lookup reads its source node from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSource {
    /// The classical node register.
    Classical,
    /// A quantum register holding a node index.
    Register(Register),
}

/// Neighbor oracle `O_L` for one source node, as a permutation of the
/// `(target, flag)` subspace.
///
/// Slots below the degree map to the neighbor with the flag clear; slots past
/// the degree keep their value and raise the flag. The remaining inputs (flag
/// already raised) fill the unused outputs in ascending index order.
#[derive(Debug, Clone)]
struct NeighborPermutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl NeighborPermutation {
    fn build(neighbors: &[usize], width: usize) -> Result<Self> {
        let dim = 1usize << (width + 1);
        let flag = 1usize << width;
        let mut forward = vec![u32::MAX; dim];
        let mut hit = vec![false; dim];
        for slot in 0..flag {
            let out = match neighbors.get(slot) {
                Some(&u) => u,
                None => slot | flag,
            };
            if out >= dim || hit[out] {
                return Err(Error::Internal(format!("neighbor oracle collides at slot {slot}")));
            }
            forward[slot] = out as u32;
            hit[out] = true;
        }
        let free_outputs: Vec<usize> = (0..dim).filter(|&o| !hit[o]).collect();
        for (input, out) in (flag..dim).zip(free_outputs) {
            forward[input] = out as u32;
            hit[out] = true;
        }
        if forward.contains(&u32::MAX) || hit.iter().any(|h| !h) {
            return Err(Error::Internal("neighbor oracle is not a permutation".into()));
        }
        let mut inverse = vec![0u32; dim];
        for (i, &o) in forward.iter().enumerate() {
            inverse[o as usize] = i as u32;
        }
        Ok(Self { forward, inverse })
    }

    fn map(&self, local: usize, inverse: bool) -> usize {
        if inverse {
            self.inverse[local] as usize
        } else {
            self.forward[local] as usize
        }
    }
}

/// Statevector implementation of the embedding circuit for one graph.
pub struct EmbeddingCircuit<'g> {
    graph: &'g AttributedGraph,
    layout: RegisterLayout,
    features: Vec<f64>,
    oracles: Vec<NeighborPermutation>,
}

impl<'g> EmbeddingCircuit<'g> {
    pub fn new(graph: &'g AttributedGraph, dprime: Option<u32>) -> Result<Self> {
        Self::with_limit(graph, dprime, DEFAULT_QUBIT_LIMIT)
    }

    pub fn with_limit(graph: &'g AttributedGraph, dprime: Option<u32>, qubit_limit: usize) -> Result<Self> {
        let layout = RegisterLayout::new(graph.node_count(), graph.max_degree_bound(), dprime);
        if layout.simulated_qubits() > qubit_limit {
            return Err(Error::SizeLimitExceeded {
                required: layout.simulated_qubits(),
                limit: qubit_limit,
            });
        }
        let features = graph
            .features()
            .iter()
            .map(|&x| {
                if !(-1.0..=1.0).contains(&x) {
                    return Err(Error::FeatureOutOfDomain(x));
                }
                match dprime {
                    Some(d) => quantize(x, d),
                    None => Ok(x),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let width = layout.node_bits;
        let oracles = (0..1usize << width)
            .map(|src| {
                let nb: &[usize] = if src < graph.node_count() { graph.neighbors(src) } else { &[] };
                NeighborPermutation::build(nb, width)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            graph,
            layout,
            features,
            oracles,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn graph(&self) -> &AttributedGraph {
        self.graph
    }

    fn check_norm(state: &PureState, gate: &str) -> Result<()> {
        let n = norm(state.amplitudes());
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Internal(format!("norm {n} after {gate}")));
        }
        Ok(())
    }

    /// Hadamard on each listed qubit, optionally controlled.
    pub fn apply_hadamards(&self, state: &mut PureState, qubits: &[usize], control: Option<Control>) -> Result<()> {
        let amps = state.amps_mut();
        for &q in qubits {
            let bit = 1usize << q;
            for i in 0..amps.len() {
                if i & bit != 0 || !control.is_none_or(|c| c.holds(i)) {
                    continue;
                }
                let (a, b) = (amps[i], amps[i | bit]);
                amps[i] = (a + b) * FRAC_1_SQRT_2;
                amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Self::check_norm(state, "hadamard")
    }

    /// Applies a basis permutation: the amplitude of `i` moves to `f(i)`.
    fn permute(state: &mut PureState, f: impl Fn(usize) -> usize) -> Result<()> {
        let old = state.amps_mut();
        let mut new = vec![0.0; old.len()];
        for (i, &a) in old.iter().enumerate() {
            if a != 0.0 {
                new[f(i)] = a;
            }
        }
        *old = new;
        Self::check_norm(state, "permutation")
    }

    /// Single-qubit `R_y` on `target`, with the `|0⟩ → x|0⟩ + √(1−x²)|1⟩` amplitude
    /// `x` chosen per branch by `amplitude` (evaluated with the target bit clear);
    /// `None` leaves the branch untouched.
    fn rotate(state: &mut PureState, target: usize, amplitude: impl Fn(usize) -> Option<f64>) -> Result<()> {
        let bit = 1usize << target;
        let amps = state.amps_mut();
        for i in 0..amps.len() {
            if i & bit != 0 {
                continue;
            }
            if let Some(x) = amplitude(i) {
                let y = (1.0 - x * x).max(0.0).sqrt();
                let (a0, a1) = (amps[i], amps[i | bit]);
                amps[i] = x * a0 - y * a1;
                amps[i | bit] = y * a0 + x * a1;
            }
        }
        Self::check_norm(state, "rotation")
    }

    /// Neighbor oracle `O_L : |u⟩|ℓ⟩|0⟩ ↦ |u⟩|r(u, ℓ)⟩|0⟩` (flag raised when
    /// `ℓ ≥ k_u`). `inverse` applies the transpose.
    pub fn apply_o_l(
        &self,
        state: &mut PureState,
        source: NodeSource,
        target: Register,
        flag: usize,
        control: Option<Control>,
        inverse: bool,
    ) -> Result<()> {
        debug_assert_eq!(target.width, self.layout.node_bits);
        let width = target.width;
        let node = state.node();
        let f = |i: usize| {
            if !control.is_none_or(|c| c.holds(i)) {
                return i;
            }
            let src = match source {
                NodeSource::Classical => node,
                NodeSource::Register(r) => r.read(i),
            };
            let local = target.read(i) | (((i >> flag) & 1) << width);
            let out = self.oracles[src].map(local, inverse);
            let i = target.write(i, out & ((1 << width) - 1));
            (i & !(1 << flag)) | ((out >> width) << flag)
        };
        Self::permute(state, f)
    }

    fn branch_feature(&self, node: usize, flagged: bool) -> f64 {
        if flagged || node >= self.features.len() {
            0.0
        } else {
            self.features[node]
        }
    }

    /// Feature oracle `O_X` for one hop: in branches with the hop bit equal to
    /// `hop.bit()`, the first `i + 1` feature ancillas rotate by the feature
    /// of the node held in the hop's index register. Flagged branches use 0.
    pub fn apply_o_x(&self, state: &mut PureState, hop: Hop) -> Result<()> {
        let l = self.layout;
        let (source, flags) = match hop {
            Hop::One => (l.ell1(), vec![l.flag1()]),
            Hop::Two => (l.ell2(), vec![l.flag1(), l.flag2()]),
        };
        let control = Control {
            qubit: l.hop().offset,
            on: hop == Hop::Two,
        };
        let moment = l.moment();
        for j in 0..4 {
            let target = l.ancilla().offset + j;
            Self::rotate(state, target, |i| {
                if !control.holds(i) || moment.read(i) < j {
                    return None;
                }
                let flagged = flags.iter().any(|&f| (i >> f) & 1 == 1);
                Some(self.branch_feature(source.read(i), flagged))
            })?;
        }
        Ok(())
    }

    /// Inverse-degree oracle `O_{K⁻¹}`: the degree ancilla's `|0⟩` amplitude
    /// becomes `1/k_v^c`, hop read from the `c` qubit.
    pub fn apply_o_kinv(&self, state: &mut PureState) -> Result<()> {
        let l = self.layout;
        let v = state.node();
        let k1 = self.graph.hop_size(v, Hop::One) as f64;
        let k2 = self.graph.hop_size(v, Hop::Two) as f64;
        let hop = l.hop();
        let target = l.ancilla().offset + 4;
        Self::rotate(state, target, |i| Some(if hop.read(i) == 0 { 1.0 / k1 } else { 1.0 / k2 }))
    }

    fn low_qubits(&self, r: Register) -> Vec<usize> {
        (r.offset..r.offset + self.layout.degree_bits).collect()
    }

    /// Runs the full embedding circuit on `|v⟩|0^𝔪⟩`.
    pub fn apply_u_g(&self, v: usize) -> Result<PureState> {
        if v >= self.graph.node_count() {
            return Err(Error::NodeOutOfRange {
                index: v,
                node_count: self.graph.node_count(),
            });
        }
        let l = self.layout;
        let (ell1, ell2) = (l.ell1(), l.ell2());
        let c_on = Control::on(l.hop().offset);
        let h1 = self.low_qubits(ell1);
        let h2 = self.low_qubits(ell2);
        let mut st = PureState::zero(l, v);

        self.apply_hadamards(&mut st, &h1, None)?;
        self.apply_o_l(&mut st, NodeSource::Classical, ell1, l.flag1(), None, false)?;
        self.apply_hadamards(&mut st, &[l.hop().offset], None)?;
        self.apply_hadamards(&mut st, &h2, Some(c_on))?;
        self.apply_o_l(&mut st, NodeSource::Register(ell1), ell2, l.flag2(), Some(c_on), false)?;
        self.apply_hadamards(&mut st, &l.moment().qubits().collect::<Vec<_>>(), None)?;
        self.apply_o_x(&mut st, Hop::One)?;
        self.apply_o_x(&mut st, Hop::Two)?;
        self.apply_o_l(&mut st, NodeSource::Register(ell1), ell2, l.flag2(), Some(c_on), true)?;
        self.apply_hadamards(&mut st, &h2, Some(c_on))?;
        self.apply_o_l(&mut st, NodeSource::Classical, ell1, l.flag1(), None, true)?;
        self.apply_hadamards(&mut st, &h1, None)?;
        self.apply_o_kinv(&mut st)?;

        let leaked = st.flag_weight();
        if leaked > NORM_TOLERANCE {
            return Err(Error::Internal(format!("flag qubits not uncomputed (weight {leaked})")));
        }
        Ok(st)
    }
}
