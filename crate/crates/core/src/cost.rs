//! CNOT cost model.
//!
//! A single multi-controlled rotation with `N` controls costs 0, 2 or
//! `16N − 24` CNOTs for `N = 0`, `N = 1` and `N > 1`. A uniformly controlled
//! rotation on `k` controls costs `2^k`. Each layer uses whichever is cheaper,
//! picking the singles only when they are strictly cheaper.

use serde::Serialize;

use crate::circuit::{Circuit, GateLayer};

pub fn single_rotation_cnots(n_ctrl: usize) -> u64 {
    match n_ctrl {
        0 => 0,
        1 => 2,
        n => 16 * n as u64 - 24,
    }
}

/// `2^k` for `k ≥ 1`; an uncontrolled layer needs no CNOT.
pub fn ucr_cnots(k: usize) -> u64 {
    if k == 0 {
        0
    } else {
        1u64 << k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerMode {
    Singles,
    Ucr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub k: usize,
    pub mode: LayerMode,
    pub cnots: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub layers: Vec<LayerCost>,
    pub total: u64,
}

/// Sum of single-rotation costs over the gates of a layer.
pub fn singles_cost(layer: &GateLayer) -> u64 {
    layer
        .gates()
        .keys()
        .map(|g| single_rotation_cnots(g.control_count()))
        .sum()
}

pub fn layer_cost_decision(layer: &GateLayer) -> (LayerMode, u64) {
    let singles = singles_cost(layer);
    if layer.k() == 0 || layer.is_empty() {
        return (LayerMode::Singles, singles);
    }
    let ucr = ucr_cnots(layer.k());
    if singles < ucr {
        (LayerMode::Singles, singles)
    } else {
        (LayerMode::Ucr, ucr)
    }
}

impl CostReport {
    pub fn of(circuit: &Circuit) -> Self {
        let layers: Vec<LayerCost> = circuit
            .layers()
            .iter()
            .map(|l| {
                let (mode, cnots) = layer_cost_decision(l);
                LayerCost { k: l.k(), mode, cnots }
            })
            .collect();
        let total = layers.iter().map(|l| l.cnots).sum();
        CostReport { layers, total }
    }
}

/// Total cost when every gate is decomposed on its own.
pub fn singles_total(circuit: &Circuit) -> u64 {
    circuit.layers().iter().map(singles_cost).sum()
}

/// Total cost when every nonempty layer is a uniformly controlled rotation.
pub fn ucr_total(circuit: &Circuit) -> u64 {
    circuit
        .layers()
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| ucr_cnots(l.k()))
        .sum()
}
