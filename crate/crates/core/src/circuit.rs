//! Layered controlled-rotation circuits.
//!
//! Layer `k` holds rotations acting on qubit `k + 1`, each controlled by a
//! pattern over qubits `1..=k`. Regions of gates within a layer are pairwise
//! disjoint, so every basis prefix sees at most one rotation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Error};
use crate::pattern::{ControlPattern, MAX_PATTERN_LEN};
use crate::region::RegionIndex;
use crate::ZERO_ANGLE;

/// Angles slightly above π from arithmetic drift are accepted and clamped.
const ANGLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GateLayer {
    k: usize,
    pub(crate) gates: BTreeMap<ControlPattern, f64>,
}

impl GateLayer {
    pub fn new(k: usize) -> Self {
        GateLayer {
            k,
            gates: BTreeMap::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gates(&self) -> &BTreeMap<ControlPattern, f64> {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Adds a gate after checking length, angle range, duplicates and region overlap.
    /// Angles at or below the zero threshold are not materialized.
    pub fn insert(&mut self, pattern: ControlPattern, theta: f64) -> Result<(), CircuitError> {
        let k = self.k;
        if pattern.len() != k {
            return Err(CircuitError::PatternLength {
                k,
                pattern: pattern.to_string(),
                len: pattern.len(),
            });
        }
        if !theta.is_finite() || !(0.0..=PI + ANGLE_SLACK).contains(&theta) {
            return Err(CircuitError::InvalidAngle {
                k,
                pattern: pattern.to_string(),
                theta,
            });
        }
        if theta <= ZERO_ANGLE {
            return Ok(());
        }
        if self.gates.contains_key(&pattern) {
            return Err(CircuitError::DuplicatePattern {
                k,
                pattern: pattern.to_string(),
            });
        }
        if let Some(other) = self.gates.keys().find(|g| g.overlaps(&pattern)) {
            return Err(CircuitError::RegionOverlap {
                k,
                first: other.to_string(),
                second: pattern.to_string(),
            });
        }
        self.gates.insert(pattern, theta.min(PI));
        Ok(())
    }

    /// Angle of the gate whose region contains the concrete prefix, or 0.
    ///
    /// Panics if two gates cover the prefix, which means the layer invariant was broken.
    pub fn covering_angle(&self, prefix: u64) -> f64 {
        let mut hits = self.gates.iter().filter(|(g, _)| g.covers(prefix));
        let first = hits.next().map(|(_, &t)| t);
        assert!(
            hits.next().is_none(),
            "layer {}: prefix {prefix} is covered twice",
            self.k
        );
        first.unwrap_or(0.0)
    }

    /// Index over the gate regions, for repeated covering queries.
    pub fn region_index(&self) -> RegionIndex {
        RegionIndex::from_patterns(self.k, self.gates.keys())
    }

    pub fn check_disjoint(&self) -> Result<(), CircuitError> {
        let index = self.region_index();
        for g in self.gates.keys() {
            if let Some(other) = index.overlapping(g).into_iter().find(|o| o != g) {
                return Err(CircuitError::RegionOverlap {
                    k: self.k,
                    first: other.to_string(),
                    second: g.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn control_count(&self) -> usize {
        self.gates.keys().map(|g| g.control_count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    pub(crate) layers: Vec<GateLayer>,
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    pattern: String,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    k: usize,
    gates: Vec<GateJson>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    n: usize,
    layers: Vec<LayerJson>,
}

impl Circuit {
    /// A circuit with `n` empty layers; it prepares `|0…0⟩`.
    pub fn new(n: usize) -> Self {
        Circuit {
            n,
            layers: (0..n).map(GateLayer::new).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[GateLayer] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> &GateLayer {
        &self.layers[k]
    }

    pub fn layer_mut(&mut self, k: usize) -> &mut GateLayer {
        &mut self.layers[k]
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(GateLayer::len).sum()
    }

    pub fn control_count(&self) -> usize {
        self.layers.iter().map(GateLayer::control_count).sum()
    }

    pub fn check_disjoint(&self) -> Result<(), CircuitError> {
        self.layers.iter().try_for_each(GateLayer::check_disjoint)
    }

    /// JSON with layers in order and gates sorted by trit string.
    pub fn to_json(&self) -> String {
        let raw = CircuitJson {
            n: self.n,
            layers: self
                .layers
                .iter()
                .map(|l| LayerJson {
                    k: l.k,
                    gates: l
                        .gates
                        .iter()
                        .map(|(p, &theta)| GateJson {
                            pattern: p.to_string(),
                            theta,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("circuit serializes")
    }

    /// Parses circuit JSON. Layers may be omitted (they are empty) but not repeated.
    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let raw: CircuitJson = serde_json::from_str(text).map_err(|e| CircuitError::Json(e.to_string()))?;
        if raw.n == 0 || raw.n > MAX_PATTERN_LEN {
            return Err(CircuitError::Json(format!("qubit count {} out of range", raw.n)));
        }
        let mut circuit = Circuit::new(raw.n);
        let mut seen = vec![false; raw.n];
        for layer in raw.layers {
            if layer.k >= raw.n {
                return Err(CircuitError::LayerOutOfRange { k: layer.k, n: raw.n });
            }
            if std::mem::replace(&mut seen[layer.k], true) {
                return Err(CircuitError::DuplicateLayer { k: layer.k });
            }
            for gate in layer.gates {
                let pattern: ControlPattern = gate.pattern.parse()?;
                circuit.layers[layer.k].insert(pattern, gate.theta)?;
            }
        }
        Ok(circuit)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }
}
