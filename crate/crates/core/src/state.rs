//! Sparse target states, the preparation tree of coarse-grained amplitudes,
//! and the baseline rotation angles derived from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, StateError};
use crate::pattern::{bit_string, ControlPattern, MAX_PATTERN_LEN};
use crate::ZERO_ANGLE;

/// A normalized real state with strictly positive amplitudes on its support.
///
/// Basis index `i` encodes the bit string `i_1 … i_n` with `i_1` as the most
/// significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    n: usize,
    entries: BTreeMap<u64, f64>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    n: usize,
    entries: Vec<(u64, f64)>,
}

impl SparseState {
    /// Validates raw `(index, amplitude)` pairs, drops zeros and normalizes.
    pub fn from_entries(n: usize, raw: impl IntoIterator<Item = (u64, f64)>) -> Result<Self, StateError> {
        if n == 0 || n > MAX_PATTERN_LEN {
            return Err(StateError::InvalidQubitCount {
                n,
                max: MAX_PATTERN_LEN,
            });
        }
        let mut entries = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for (index, value) in raw {
            if index >> n != 0 {
                return Err(StateError::IndexOutOfRange { index, n });
            }
            if !value.is_finite() {
                return Err(StateError::NonFiniteAmplitude { index });
            }
            if value < 0.0 {
                return Err(StateError::NegativeAmplitude { index, value });
            }
            if !seen.insert(index) {
                return Err(StateError::DuplicateIndex { index });
            }
            if value > 0.0 {
                entries.insert(index, value);
            }
        }
        if entries.is_empty() {
            return Err(StateError::EmptySupport);
        }
        // Scale before squaring so tiny or huge inputs do not under/overflow.
        let max = entries.values().fold(0.0f64, |m, &v| m.max(v));
        let norm = max * entries.values().map(|v| (v / max).powi(2)).sum::<f64>().sqrt();
        for v in entries.values_mut() {
            *v /= norm;
        }
        Ok(SparseState { n, entries })
    }

    /// Wraps amplitudes that are already normalized and positive (simulator output).
    pub(crate) fn from_normalized(n: usize, entries: BTreeMap<u64, f64>) -> Self {
        debug_assert!(entries.values().all(|&v| v > 0.0));
        SparseState { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Support size `d`.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// `d / 2^n`.
    pub fn sparsity(&self) -> f64 {
        self.entries.len() as f64 / (self.n as f64).exp2()
    }

    pub fn entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn amplitude(&self, index: u64) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Parses the text format: a `n=<int>` header followed by `<bits> <amplitude>` lines.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self, StateError> {
        let mut n = None;
        let mut raw = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| StateError::Parse { line: line_no, message };
            let Some(qubits) = n else {
                let value = line
                    .strip_prefix("n=")
                    .ok_or_else(|| parse_err("expected header `n=<int>`".into()))?;
                n = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad qubit count: {e}")))?,
                );
                continue;
            };
            let mut parts = line.split_whitespace();
            let (Some(bits), Some(amp), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err("expected `<bit string> <amplitude>`".into()));
            };
            if bits.len() != qubits {
                return Err(parse_err(format!("bit string {bits:?} does not have {qubits} bits")));
            }
            let mut index = 0u64;
            for c in bits.chars() {
                index = match c {
                    '0' => index << 1,
                    '1' => index << 1 | 1,
                    other => return Err(parse_err(format!("invalid bit {other:?}"))),
                };
            }
            let amp: f64 = amp
                .parse()
                .map_err(|e| parse_err(format!("bad amplitude {amp:?}: {e}")))?;
            raw.push((index, amp));
        }
        let n = n.ok_or(StateError::Parse {
            line: 0,
            message: "missing header `n=<int>`".into(),
        })?;
        Self::from_entries(n, raw)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (&index, &amp) in &self.entries {
            writeln!(out, "{} {}", bit_string(index, self.n), amp).unwrap();
        }
        out
    }

    pub fn parse_json(text: &str) -> Result<Self, StateError> {
        let raw: StateJson = serde_json::from_str(text).map_err(|e| StateError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_entries(raw.n, raw.entries)
    }

    pub fn to_json(&self) -> String {
        let raw = StateJson {
            n: self.n,
            entries: self.entries.iter().map(|(&i, &a)| (i, a)).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("state serializes")
    }

    /// Accepts either format, choosing JSON when the input starts with `{`.
    pub fn parse(text: &str) -> Result<Self, StateError> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_text(text)
        }
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?)
    }
}

/// Coarse-grained amplitudes `ψ^(k)` for every depth `k = 0..=n`.
///
/// Level `k` maps each supported `k`-bit prefix to its amplitude, so its keys
/// are the support set `S_k`. Level 0 holds the single value 1.
#[derive(Debug, Clone)]
pub struct PreparationTree {
    n: usize,
    levels: Vec<BTreeMap<u64, f64>>,
}

impl PreparationTree {
    /// Builds the levels bottom-up from the leaves: each parent amplitude is
    /// the root of the summed squares of its (at most two) children.
    pub fn build(state: &SparseState) -> Self {
        let n = state.n();
        let mut levels = vec![BTreeMap::new(); n + 1];
        levels[n] = state.entries().clone();
        for k in (1..=n).rev() {
            let mut parents: BTreeMap<u64, f64> = BTreeMap::new();
            for (&prefix, &amp) in &levels[k] {
                *parents.entry(prefix >> 1).or_insert(0.0) += amp * amp;
            }
            for v in parents.values_mut() {
                *v = v.sqrt();
            }
            levels[k - 1] = parents;
        }
        // The root is exactly 1 for a normalized state; pin it to absorb rounding.
        levels[0].insert(0, 1.0);
        PreparationTree { n, levels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self, k: usize) -> &BTreeMap<u64, f64> {
        &self.levels[k]
    }

    /// Coarse amplitude of a concrete `k`-bit prefix (0 off the support).
    pub fn amplitude(&self, k: usize, prefix: u64) -> f64 {
        self.levels[k].get(&prefix).copied().unwrap_or(0.0)
    }

    pub fn is_supported(&self, k: usize, prefix: u64) -> bool {
        self.levels[k].contains_key(&prefix)
    }

    /// `P_x = Σ_{b ∈ B(x) ∩ S_k} (ψ^(k)_b)²` for a pattern of length `k ≤ n`.
    pub fn prefix_probability(&self, pattern: &ControlPattern) -> f64 {
        let k = pattern.len();
        assert!(k <= self.n, "pattern of length {k} is deeper than the tree");
        if pattern.is_concrete() {
            let a = self.amplitude(k, pattern.value());
            return a * a;
        }
        self.levels[k]
            .iter()
            .filter(|(&b, _)| pattern.covers(b))
            .map(|(_, a)| a * a)
            .sum()
    }

    /// Computes the baseline rotation angle for every supported prefix.
    ///
    /// `θ_s = 2·acos(ψ^(k+1)_{s0} / ψ^(k)_s)`, with an absent child read as 0
    /// and the ratio clamped to `[0, 1]`.
    pub fn baseline_angles(&self) -> BaselineCircuit {
        let layers = (0..self.n)
            .map(|k| {
                self.levels[k]
                    .iter()
                    .map(|(&prefix, &amp)| {
                        let child = self.amplitude(k + 1, prefix << 1);
                        let ratio = (child / amp).clamp(0.0, 1.0);
                        (prefix, 2.0 * ratio.acos())
                    })
                    .collect()
            })
            .collect();
        BaselineCircuit { n: self.n, layers }
    }
}

/// The unoptimized Grover–Rudolph angles, one entry per supported prefix.
///
/// Zero-angle entries are kept: they are inactive as gates but the
/// approximate optimizer needs their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCircuit {
    n: usize,
    layers: Vec<BTreeMap<u64, f64>>,
}

impl BaselineCircuit {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Prefix → angle for layer `k` (rotations on qubit `k + 1`).
    pub fn layer(&self, k: usize) -> &BTreeMap<u64, f64> {
        &self.layers[k]
    }

    pub fn angle(&self, k: usize, prefix: u64) -> Option<f64> {
        self.layers[k].get(&prefix).copied()
    }

    /// Entries whose angle is nonzero and therefore applied as gates.
    pub fn active(&self, k: usize) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.layers[k]
            .iter()
            .filter(|(_, &t)| t > ZERO_ANGLE)
            .map(|(&p, &t)| (p, t))
    }

    /// The baseline as a layered circuit of fully controlled gates.
    pub fn to_circuit(&self) -> crate::circuit::Circuit {
        let mut circuit = crate::circuit::Circuit::new(self.n);
        for k in 0..self.n {
            for (prefix, theta) in self.active(k) {
                circuit.layers[k]
                    .gates
                    .insert(ControlPattern::concrete(prefix, k), theta);
            }
        }
        circuit
    }
}
