//! Reference simulator for layered controlled-`R_y` circuits.
//!
//! Starting from the empty prefix with amplitude 1, layer `k` splits every
//! prefix `b` with amplitude `α` into `b0 ↦ α·cos(θ/2)` and `b1 ↦ α·sin(θ/2)`,
//! where `θ` is the angle of the gate covering `b` (0 if none). Covering gates
//! are found by a plain scan of the layer, independent of the optimizers'
//! region index, so the simulator can serve as their test oracle.

use std::collections::BTreeMap;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::state::SparseState;

/// Amplitudes below this are dropped after each layer.
pub const DROP_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone)]
enum Amplitudes {
    /// Sorted by prefix.
    Sparse(Vec<(u64, f64)>),
    Dense(Vec<f64>),
}

/// The running coarse state entering a layer.
#[derive(Debug, Clone)]
pub struct PrefixState {
    depth: usize,
    amplitudes: Amplitudes,
}

impl PrefixState {
    pub fn root() -> Self {
        PrefixState {
            depth: 0,
            amplitudes: Amplitudes::Sparse(vec![(0, 1.0)]),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Nonzero `(prefix, amplitude)` pairs in increasing prefix order.
    pub fn entries(&self) -> Vec<(u64, f64)> {
        match &self.amplitudes {
            Amplitudes::Sparse(v) => v.clone(),
            Amplitudes::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, a)| a.abs() > DROP_THRESHOLD)
                .map(|(i, &a)| (i as u64, a))
                .collect(),
        }
    }

    pub fn amplitude(&self, prefix: u64) -> f64 {
        match &self.amplitudes {
            Amplitudes::Sparse(v) => v.binary_search_by_key(&prefix, |e| e.0).map(|i| v[i].1).unwrap_or(0.0),
            Amplitudes::Dense(v) => v.get(prefix as usize).copied().unwrap_or(0.0),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        match &self.amplitudes {
            Amplitudes::Sparse(v) => v.iter().map(|(_, a)| a * a).sum(),
            Amplitudes::Dense(v) => v.iter().map(|a| a * a).sum(),
        }
    }

    pub fn support_size(&self) -> usize {
        match &self.amplitudes {
            Amplitudes::Sparse(v) => v.len(),
            Amplitudes::Dense(v) => v.iter().filter(|a| a.abs() > DROP_THRESHOLD).count(),
        }
    }

    /// Applies layer `self.depth` of `circuit`. Switches to a dense array once
    /// the sparse form grows past `2^(n-2)` entries.
    fn step(&mut self, circuit: &Circuit) {
        let k = self.depth;
        let layer = circuit.layer(k);
        let angle = |b: u64| layer.covering_angle(b);
        let split = |a: f64, theta: f64| {
            let (s, c) = (theta / 2.0).sin_cos();
            (a * c, a * s)
        };
        let next = match &self.amplitudes {
            Amplitudes::Sparse(v) => {
                let mut out = Vec::with_capacity(v.len() * 2);
                for &(b, a) in v {
                    let (a0, a1) = split(a, angle(b));
                    if a0.abs() > DROP_THRESHOLD {
                        out.push((b << 1, a0));
                    }
                    if a1.abs() > DROP_THRESHOLD {
                        out.push((b << 1 | 1, a1));
                    }
                }
                let n = circuit.n();
                if n >= 2 && out.len() > 1usize << (n - 2) {
                    let mut dense = vec![0.0; 1usize << (k + 1)];
                    for (b, a) in out {
                        dense[b as usize] = a;
                    }
                    Amplitudes::Dense(dense)
                } else {
                    Amplitudes::Sparse(out)
                }
            }
            Amplitudes::Dense(v) => {
                let mut out = vec![0.0; v.len() * 2];
                for (b, &a) in v.iter().enumerate() {
                    if a.abs() <= DROP_THRESHOLD {
                        continue;
                    }
                    let (a0, a1) = split(a, angle(b as u64));
                    out[2 * b] = if a0.abs() > DROP_THRESHOLD { a0 } else { 0.0 };
                    out[2 * b + 1] = if a1.abs() > DROP_THRESHOLD { a1 } else { 0.0 };
                }
                Amplitudes::Dense(out)
            }
        };
        self.amplitudes = next;
        self.depth += 1;
    }
}

/// The coarse state entering layer `depth` (after layers `0..depth`).
pub fn simulate_to(circuit: &Circuit, depth: usize) -> PrefixState {
    assert!(depth <= circuit.n(), "depth {depth} exceeds {} qubits", circuit.n());
    let mut state = PrefixState::root();
    while state.depth < depth {
        state.step(circuit);
    }
    state
}

/// Applies every layer to `|0…0⟩` and returns the prepared state.
pub fn simulate(circuit: &Circuit) -> SparseState {
    let state = simulate_to(circuit, circuit.n());
    let entries: BTreeMap<u64, f64> = state.entries().into_iter().filter(|(_, a)| *a > 0.0).collect();
    SparseState::from_normalized(circuit.n(), entries)
}

/// `⟨a|b⟩` for real states.
pub fn overlap(a: &SparseState, b: &SparseState) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(a.n(), b.n()));
    }
    let (small, large) = if a.support_size() <= b.support_size() {
        (a, b)
    } else {
        (b, a)
    };
    Ok(small.entries().iter().map(|(&i, &x)| x * large.amplitude(i)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::ControlPattern;
    use crate::state::PreparationTree;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn example() -> SparseState {
        SparseState::from_entries(3, [(0b001, 1.0), (0b011, 1.0), (0b100, 1.0)]).unwrap()
    }

    #[test]
    fn baseline_round_trip_of_example() {
        let psi = example();
        let circuit = PreparationTree::build(&psi).baseline_angles().to_circuit();
        let out = simulate(&circuit);
        assert_eq!(out.support_size(), 3);
        for (&i, &a) in psi.entries() {
            assert!((out.amplitude(i) - a).abs() < 1e-12, "index {i}");
        }
    }

    #[test]
    fn empty_circuit_prepares_zero_state() {
        let out = simulate(&Circuit::new(2));
        assert_eq!(out.entries().len(), 1);
        assert_eq!(out.amplitude(0), 1.0);
    }

    #[test]
    fn single_pi_rotation_flips() {
        let mut c = Circuit::new(1);
        c.layer_mut(0).insert(ControlPattern::uncontrolled(0), PI).unwrap();
        let out = simulate(&c);
        assert_eq!(out.entries().len(), 1);
        assert!((out.amplitude(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlap_basics() {
        let psi = example();
        assert!((overlap(&psi, &psi).unwrap() - 1.0).abs() < 1e-15);
        let other = SparseState::from_entries(3, [(0, 1.0)]).unwrap();
        assert_eq!(overlap(&psi, &other).unwrap(), 0.0);
        let small = SparseState::from_entries(2, [(0, 1.0)]).unwrap();
        assert!(matches!(overlap(&psi, &small), Err(Error::DimensionMismatch(3, 2))));
    }

    #[test]
    fn perturbed_layer_one_overlap() {
        // Changing the layer-1 angle on prefix 0 from π/2 to π/3: brute-force inner product.
        let psi = example();
        let mut c = PreparationTree::build(&psi).baseline_angles().to_circuit();
        c.layer_mut(1).gates.insert("0".parse().unwrap(), FRAC_PI_3);
        let f = overlap(&psi, &simulate(&c)).unwrap();
        // Prefix 0 carries weight 2/3; the branch factor is cos((π/2 − π/3)/2) = cos(π/12).
        let expect = 1.0 - (2.0 / 3.0) * (1.0 - (PI / 12.0).cos());
        assert!((f - expect).abs() < 1e-12);
        assert!((f - 0.977_283_884_192_712_2).abs() < 1e-12, "{f}");
    }

    #[test]
    fn dense_fallback_matches_sparse() {
        let n = 6;
        let psi = SparseState::from_entries(n, (0..64u64).map(|i| (i, 1.0 + i as f64))).unwrap();
        let circuit = PreparationTree::build(&psi).baseline_angles().to_circuit();
        let out = simulate(&circuit);
        assert!((overlap(&psi, &out).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(out.support_size(), 64);
    }
}
