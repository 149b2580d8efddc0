//! Exact optimization of a Grover–Rudolph circuit, layer by layer:
//!
//! 1. strip controls one at a time while the flipped sibling region holds no
//!    supported prefix (the gate then merges with a virtual zero-angle gate);
//! 2. merge equal-angle gates whose patterns differ in one concrete trit,
//!    until no such pair remains;
//! 3. cost each layer as singles or as a uniformly controlled rotation.
//!
//! Neither move changes the prepared state. Merging never opens a new strip,
//! so step 1 does not have to be repeated after step 2.

use serde::Serialize;

use crate::circuit::{Circuit, GateLayer};
use crate::cost::CostReport;
use crate::pattern::ControlPattern;
use crate::region::RegionIndex;
use crate::state::{BaselineCircuit, PreparationTree};

/// Two angles closer than this count as equal for an exact neighbor merge.
pub const EXACT_ANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeKind {
    Strip,
    Neighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeRecord {
    pub layer: usize,
    pub kind: MergeKind,
    pub before: Vec<ControlPattern>,
    pub after: ControlPattern,
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub optimized: Circuit,
    pub cost: CostReport,
    pub merge_log: Vec<MergeRecord>,
}

/// Index of the supported prefixes `S_k` of layer `k`.
pub fn support_index(tree: &PreparationTree, k: usize) -> RegionIndex {
    let mut index = RegionIndex::new(k);
    for &prefix in tree.level(k).keys() {
        index.insert(&ControlPattern::concrete(prefix, k));
    }
    index
}

/// Strips controls left to right while `admissible(sibling)` holds, where
/// `sibling` is the current pattern with the candidate control flipped.
/// Returns the final pattern and each `(before, after)` step.
///
/// Growing the region only enlarges every remaining sibling region, so a
/// position that was rejected stays rejected. One left-to-right sweep thus
/// gives the same result as restarting the scan after each accepted strip.
pub(crate) fn strip_sequential(
    pattern: ControlPattern,
    mut admissible: impl FnMut(&ControlPattern) -> bool,
) -> (ControlPattern, Vec<(ControlPattern, ControlPattern)>) {
    let mut current = pattern;
    let mut steps = Vec::new();
    for t in 0..pattern.len() {
        let Ok(sibling) = current.flip(t) else { continue };
        if admissible(&sibling) {
            let next = current.strip(t).expect("position is controlled");
            steps.push((current, next));
            current = next;
        }
    }
    (current, steps)
}

/// Sequential stripping against the support alone: a control is removed when
/// `S_k ∩ B(sibling) = ∅`. The angle is unchanged.
pub fn strip_controls_sequential(pattern: ControlPattern, support: &RegionIndex) -> ControlPattern {
    strip_sequential(pattern, |sibling| !support.any_overlap(sibling)).0
}

/// Merges equal-angle neighbors to a fixpoint.
pub fn merge_neighbors(layer: &GateLayer) -> GateLayer {
    let mut out = layer.clone();
    merge_neighbors_logged(&mut out, &mut Vec::new());
    out
}

fn merge_neighbors_logged(layer: &mut GateLayer, log: &mut Vec<MergeRecord>) {
    loop {
        let mut changed = false;
        let keys: Vec<ControlPattern> = layer.gates.keys().copied().collect();
        for x in keys {
            let Some(&theta_x) = layer.gates.get(&x) else { continue };
            let positions: Vec<usize> = x.controlled_positions().collect();
            for t in positions {
                let y = x.flip(t).expect("position is controlled");
                let Some(&theta_y) = layer.gates.get(&y) else { continue };
                if (theta_x - theta_y).abs() > EXACT_ANGLE_TOLERANCE {
                    continue;
                }
                let z = x.strip(t).expect("position is controlled");
                layer.gates.remove(&x);
                layer.gates.remove(&y);
                layer.gates.insert(z, theta_x);
                log.push(MergeRecord {
                    layer: layer.k(),
                    kind: MergeKind::Neighbor,
                    before: vec![x, y],
                    after: z,
                });
                changed = true;
                break;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Strips every gate of one layer in pattern order, then merges neighbors.
///
/// Besides an empty support, a strip also requires that the sibling region
/// is not already claimed by another gate of the layer, so regions stay
/// pairwise disjoint.
fn optimize_layer(layer: &mut GateLayer, support: &RegionIndex, log: &mut Vec<MergeRecord>) {
    let k = layer.k();
    let mut occupied = layer.region_index();
    let gates: Vec<(ControlPattern, f64)> = layer.gates.iter().map(|(&p, &t)| (p, t)).collect();
    for (pattern, theta) in gates {
        occupied.remove(&pattern);
        let (stripped, steps) = strip_sequential(pattern, |sibling| {
            !support.any_overlap(sibling) && !occupied.any_overlap(sibling)
        });
        occupied.insert(&stripped);
        if stripped != pattern {
            layer.gates.remove(&pattern);
            layer.gates.insert(stripped, theta);
            log.extend(steps.into_iter().map(|(before, after)| MergeRecord {
                layer: k,
                kind: MergeKind::Strip,
                before: vec![before],
                after,
            }));
        }
    }
    merge_neighbors_logged(layer, log);
}

/// Runs the exact optimization on an arbitrary active circuit for the state
/// described by `tree`. Applied to an already optimized circuit it does nothing.
pub fn optimize_circuit(circuit: &Circuit, tree: &PreparationTree) -> ExactResult {
    assert_eq!(circuit.n(), tree.n(), "circuit and tree disagree on qubit count");
    let mut optimized = circuit.clone();
    let mut merge_log = Vec::new();
    for k in 0..optimized.n() {
        let support = support_index(tree, k);
        optimize_layer(&mut optimized.layers[k], &support, &mut merge_log);
    }
    let cost = CostReport::of(&optimized);
    ExactResult {
        optimized,
        cost,
        merge_log,
    }
}

pub fn optimize_exact(baseline: &BaselineCircuit, tree: &PreparationTree) -> ExactResult {
    optimize_circuit(&baseline.to_circuit(), tree)
}
