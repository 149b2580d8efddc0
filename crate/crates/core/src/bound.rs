//! Closed-form overlap formulas.
//!
//! [`single_merge_overlap`] is the overlap between the states before and
//! after one merge, given the probabilities entering the merging layer.
//! [`lower_bound`] is a rigorous bound on the final overlap built from the
//! final clusters and the amplification factors
//! `R_x^(k) = Π_l g(θ̃, i_l) / g(θ, i_l)`, with `g(θ, 0) = cos(θ/2)` and
//! `g(θ, 1) = sin(θ/2)`.

use std::collections::BTreeMap;

use crate::approx::{angle_loss, Cluster};
use crate::circuit::Circuit;
use crate::pattern::ControlPattern;
use crate::state::{BaselineCircuit, PreparationTree};

/// `1 − Σ_{w∈{x,y}} (1 − cos((θ_w − θ_C)/2)) · P_w`.
pub fn single_merge_overlap(theta_x: f64, theta_y: f64, theta_c: f64, p_x: f64, p_y: f64) -> f64 {
    1.0 - angle_loss(theta_x, theta_c) * p_x - angle_loss(theta_y, theta_c) * p_y
}

/// `g(θ, bit)`: the branch factor of a rotation.
pub fn branch_factor(theta: f64, bit: u64) -> f64 {
    let (s, c) = (theta / 2.0).sin_cos();
    if bit == 0 {
        c
    } else {
        s
    }
}

/// Amplification factors of every supported prefix at every depth `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationTable {
    levels: Vec<BTreeMap<u64, f64>>,
}

impl AmplificationTable {
    /// Walks the supported prefixes depth by depth. The final angle on a
    /// prefix is that of the unique covering gate, or 0 when none covers it.
    pub fn build(tree: &PreparationTree, baseline: &BaselineCircuit, final_circuit: &Circuit) -> Self {
        let n = tree.n();
        assert_eq!(final_circuit.n(), n, "circuit and tree disagree on qubit count");
        let mut levels = Vec::with_capacity(n + 1);
        levels.push(BTreeMap::from([(0u64, 1.0)]));
        for k in 0..n {
            let regions = final_circuit.layer(k).region_index();
            let gates = final_circuit.layer(k).gates();
            let parent = &levels[k];
            let mut next = BTreeMap::new();
            for &child in tree.level(k + 1).keys() {
                let prefix = child >> 1;
                let bit = child & 1;
                let theta = baseline.angle(k, prefix).unwrap_or(0.0);
                let final_theta = regions.covering(prefix).map_or(0.0, |g| gates[&g]);
                let ratio = branch_factor(final_theta, bit) / branch_factor(theta, bit);
                next.insert(child, parent[&prefix] * ratio);
            }
            levels.push(next);
        }
        AmplificationTable { levels }
    }

    /// `R_x^(k)`; `None` for an unsupported prefix.
    pub fn factor(&self, k: usize, prefix: u64) -> Option<f64> {
        self.levels.get(k)?.get(&prefix).copied()
    }

    pub fn level(&self, k: usize) -> &BTreeMap<u64, f64> {
        &self.levels[k]
    }

    /// `R_C`: the largest factor over the cluster's weighted sources.
    pub fn cluster_factor(&self, cluster: &Cluster) -> f64 {
        cluster
            .sources()
            .iter()
            .filter(|s| s.prob > 0.0)
            .map(|s| {
                self.factor(cluster.layer(), s.prefix)
                    .expect("source prefix is supported")
            })
            .fold(0.0, f64::max)
    }
}

/// `F_LB = 1 − Σ_C R_C · L_C`.
pub fn lower_bound<'a>(clusters: impl IntoIterator<Item = &'a Cluster>, table: &AmplificationTable) -> f64 {
    1.0 - clusters
        .into_iter()
        .filter(|c| c.loss() > 0.0)
        .map(|c| table.cluster_factor(c) * c.loss())
        .sum::<f64>()
}

/// Convenience wrapper over per-layer `(pattern, cluster)` lists.
pub fn lower_bound_of(
    clusters: &[Vec<(ControlPattern, Cluster)>],
    tree: &PreparationTree,
    baseline: &BaselineCircuit,
    final_circuit: &Circuit,
) -> f64 {
    let table = AmplificationTable::build(tree, baseline, final_circuit);
    lower_bound(clusters.iter().flatten().map(|(_, c)| c), &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{overlap, simulate, simulate_to};
    use crate::state::SparseState;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn example() -> SparseState {
        SparseState::from_entries(3, [(0b001, 1.0), (0b011, 1.0), (0b100, 1.0)]).unwrap()
    }

    #[test]
    fn single_merge_examples() {
        assert_eq!(single_merge_overlap(0.7, 0.7, 0.7, 0.3, 0.2), 1.0);
        assert_eq!(single_merge_overlap(1.3, 0.0, 1.3, 0.4, 0.0), 1.0);
        let f = single_merge_overlap(FRAC_PI_2, 0.0, FRAC_PI_4, 0.25, 0.25);
        assert!((f - 0.961_939_766_255_643_4).abs() < 1e-12);
    }

    #[test]
    fn single_merge_matches_simulation_on_two_gate_layer() {
        // Layer 1 of a uniform 2-qubit state carries π/2 on both prefixes; set
        // the angles to π/2 and 0 and merge them at π/4.
        let mut before = Circuit::new(2);
        before
            .layer_mut(0)
            .insert(ControlPattern::uncontrolled(0), FRAC_PI_2)
            .unwrap();
        before.layer_mut(1).insert("0".parse().unwrap(), FRAC_PI_2).unwrap();
        let mut after = Circuit::new(2);
        after
            .layer_mut(0)
            .insert(ControlPattern::uncontrolled(0), FRAC_PI_2)
            .unwrap();
        after.layer_mut(1).insert("e".parse().unwrap(), FRAC_PI_4).unwrap();
        let p = simulate_to(&before, 1);
        let f = overlap(&simulate(&before), &simulate(&after)).unwrap();
        let formula = single_merge_overlap(
            FRAC_PI_2,
            0.0,
            FRAC_PI_4,
            p.amplitude(0).powi(2),
            p.amplitude(1).powi(2),
        );
        assert!((f - formula).abs() < 1e-12);
        // Both prefixes carry weight 1/2, so the overlap is cos(π/8).
        assert!((f - (std::f64::consts::PI / 8.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn baseline_has_unit_factors() {
        let psi = example();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let table = AmplificationTable::build(&tree, &baseline, &baseline.to_circuit());
        for k in 0..=3 {
            for &r in table.level(k).values() {
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn changed_angle_enters_from_next_depth() {
        let psi = example();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let mut c = baseline.to_circuit();
        c.layer_mut(1).gates.insert("0".parse().unwrap(), FRAC_PI_3);
        let table = AmplificationTable::build(&tree, &baseline, &c);
        let expect = FRAC_PI_6.cos() / FRAC_PI_4.cos();
        assert!((expect - 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(table.factor(1, 0), Some(1.0));
        assert!((table.factor(2, 0b00).unwrap() - expect).abs() < 1e-12);
        assert!((table.factor(3, 0b001).unwrap() - expect).abs() < 1e-12);
        // The 1-branch of the changed gate and the untouched subtree.
        assert!((table.factor(2, 0b01).unwrap() - FRAC_PI_6.sin() / FRAC_PI_4.sin()).abs() < 1e-12);
        assert_eq!(table.factor(3, 0b100), Some(1.0));
    }

    #[test]
    fn bound_collapses_to_estimator_with_unit_factors() {
        let psi = example();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let table = AmplificationTable::build(&tree, &baseline, &baseline.to_circuit());
        let c = Cluster::singleton(1, 0, FRAC_PI_3, 2.0 / 3.0);
        let c = Cluster::with_angle(1, c.sources().to_vec(), FRAC_PI_2);
        let lb = lower_bound([&c], &table);
        assert!((lb - (1.0 - c.loss())).abs() < 1e-15);
        let exact = Cluster::singleton(2, 0, 1.0, 0.5);
        assert_eq!(lower_bound([&exact], &table), 1.0);
    }
}
