//! Fidelity-budgeted greedy merging.
//!
//! Starting from the exactly optimized circuit, every active gate carries a
//! [`Cluster`] of baseline prefixes. Two moves are considered: merging two
//! gates whose patterns differ in one concrete trit (any angles), and
//! stripping a control when the sibling region holds no active gate. The
//! merged gate takes the loss-minimizing angle, and the overlap estimate
//! `f_est = 1 − Σ_C L_C` is updated incrementally.
//!
//! The interval `[f_min, 1]` is cut into `M` equal steps. For each threshold
//! the candidates are generated once, sorted by their estimated post-merge
//! overlap and accepted greedily while the estimate stays above the
//! threshold. Passes at `f_min` then repeat until nothing is accepted.

mod cluster;

pub use cluster::{angle_loss, cluster_angle, cluster_loss, estimator_update, Cluster, Source};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::circuit::Circuit;
use crate::cost::CostReport;
use crate::error::{ConfigError, Result};
use crate::exact::{optimize_exact, support_index, ExactResult, MergeKind};
use crate::pattern::ControlPattern;
use crate::region::RegionIndex;
use crate::state::{BaselineCircuit, PreparationTree};
use crate::ZERO_ANGLE;

use cluster::{merged_angle_and_loss, stripped_angle_and_loss};

/// Number of threshold intervals used when none is given.
pub const DEFAULT_INTERVALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    /// Minimum allowed overlap estimate, in `(0, 1]`.
    pub f_min: f64,
    /// Number of threshold steps `M`.
    pub intervals: usize,
    /// Restrict lossy moves to one layer.
    pub only_layer: Option<usize>,
}

impl ApproxOptions {
    pub fn new(f_min: f64, intervals: usize) -> Self {
        ApproxOptions {
            f_min,
            intervals,
            only_layer: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.f_min > 0.0 && self.f_min <= 1.0) {
            return Err(ConfigError::FMinOutOfRange(self.f_min));
        }
        if self.intervals == 0 {
            return Err(ConfigError::NoIntervals);
        }
        Ok(())
    }
}

/// `F^(s) = 1 − s·(1 − f_min)/M` for `s = 1..=M`; the last one is `f_min` exactly.
pub fn thresholds(f_min: f64, intervals: usize) -> Vec<f64> {
    let step = (1.0 - f_min) / intervals as f64;
    (1..=intervals)
        .map(|s| if s == intervals { f_min } else { 1.0 - s as f64 * step })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub layer: usize,
    pub kind: MergeKind,
    /// The merged gates, or the stripped gate alone.
    pub sources: Vec<ControlPattern>,
    pub result: ControlPattern,
    pub theta: f64,
    /// Overlap estimate after this move, given the state at generation time.
    pub estimate: f64,
    #[serde(skip)]
    cluster_ids: Vec<usize>,
    #[serde(skip)]
    absorbed: Vec<Source>,
    #[serde(skip)]
    new_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptedMerge {
    pub layer: usize,
    pub kind: MergeKind,
    pub before: Vec<ControlPattern>,
    pub after: ControlPattern,
    pub theta: f64,
    pub threshold: f64,
    pub f_est: f64,
}

#[derive(Debug, Clone)]
struct ActiveLayer {
    gates: BTreeMap<ControlPattern, usize>,
    regions: RegionIndex,
}

/// The circuit being optimized, with its clusters and overlap estimate.
#[derive(Debug, Clone)]
pub struct ActiveCircuit<'a> {
    tree: &'a PreparationTree,
    baseline: &'a BaselineCircuit,
    support: Vec<RegionIndex>,
    layers: Vec<ActiveLayer>,
    clusters: Vec<Option<Cluster>>,
    f_est: f64,
    only_layer: Option<usize>,
    log: Vec<AcceptedMerge>,
}

impl<'a> ActiveCircuit<'a> {
    /// Wraps `circuit`; each gate's cluster holds the supported prefixes in its
    /// region with their baseline angles and probabilities.
    pub fn new(baseline: &'a BaselineCircuit, tree: &'a PreparationTree, circuit: &Circuit) -> Self {
        let n = tree.n();
        assert_eq!(circuit.n(), n, "circuit and tree disagree on qubit count");
        let support: Vec<RegionIndex> = (0..n).map(|k| support_index(tree, k)).collect();
        let mut clusters = Vec::new();
        let mut layers = Vec::with_capacity(n);
        for (k, layer) in circuit.layers().iter().enumerate() {
            let mut gates = BTreeMap::new();
            for (&pattern, &theta) in layer.gates() {
                let sources = support[k]
                    .overlapping(&pattern)
                    .into_iter()
                    .map(|p| {
                        let prefix = p.value();
                        let amp = tree.amplitude(k, prefix);
                        Source {
                            prefix,
                            theta: baseline.angle(k, prefix).unwrap_or(0.0),
                            prob: amp * amp,
                        }
                    })
                    .collect();
                gates.insert(pattern, clusters.len());
                clusters.push(Some(Cluster::with_angle(k, sources, theta)));
            }
            layers.push(ActiveLayer {
                gates,
                regions: layer.region_index(),
            });
        }
        let f_est = 1.0 - clusters.iter().flatten().map(Cluster::loss).sum::<f64>();
        ActiveCircuit {
            tree,
            baseline,
            support,
            layers,
            clusters,
            f_est,
            only_layer: None,
            log: Vec::new(),
        }
    }

    /// Confines candidate generation to one layer.
    pub fn restrict_to_layer(&mut self, layer: Option<usize>) {
        self.only_layer = layer;
    }

    pub fn f_est(&self) -> f64 {
        self.f_est
    }

    /// `1 − Σ L_C` recomputed from every cluster's sources.
    pub fn recomputed_f_est(&self) -> f64 {
        1.0 - self.clusters.iter().flatten().map(Cluster::recompute_loss).sum::<f64>()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    /// `Σ (1 + controls)` over active gates; every accepted move lowers it.
    pub fn work(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.gates.keys())
            .map(|g| 1 + g.control_count())
            .sum()
    }

    pub fn accepted(&self) -> &[AcceptedMerge] {
        &self.log
    }

    /// Final clusters per layer, keyed by gate pattern.
    pub fn clusters(&self) -> Vec<Vec<(ControlPattern, Cluster)>> {
        self.layers
            .iter()
            .map(|l| {
                l.gates
                    .iter()
                    .map(|(&p, &id)| (p, self.clusters[id].clone().expect("active cluster")))
                    .collect()
            })
            .collect()
    }

    pub fn to_circuit(&self) -> Circuit {
        let mut circuit = Circuit::new(self.tree.n());
        for (k, layer) in self.layers.iter().enumerate() {
            for (&pattern, &id) in &layer.gates {
                let theta = self.cluster(id).theta();
                if theta > ZERO_ANGLE {
                    circuit.layers[k].gates.insert(pattern, theta);
                }
            }
        }
        circuit
    }

    fn cluster(&self, id: usize) -> &Cluster {
        self.clusters[id].as_ref().expect("active cluster")
    }

    fn layer_range(&self) -> std::ops::Range<usize> {
        match self.only_layer {
            Some(k) => k..k + 1,
            None => 0..self.layers.len(),
        }
    }

    /// Supported prefixes of layer `k` inside `B(region)`, with positive weight.
    fn absorbed(&self, k: usize, region: &ControlPattern) -> Vec<Source> {
        self.support[k]
            .overlapping(region)
            .into_iter()
            .filter_map(|p| {
                let prefix = p.value();
                let amp = self.tree.amplitude(k, prefix);
                let prob = amp * amp;
                (prob > 0.0).then(|| Source {
                    prefix,
                    theta: self.baseline.angle(k, prefix).unwrap_or(0.0),
                    prob,
                })
            })
            .collect()
    }

    /// All admissible moves in the current circuit.
    ///
    /// Neighbor: two active gates whose patterns differ in exactly one
    /// concrete trit. Strip: a control whose flipped sibling region meets no
    /// active gate; the supported prefixes there all have zero baseline angle
    /// and are absorbed with their weights.
    pub fn generate_candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for k in self.layer_range() {
            let layer = &self.layers[k];
            for (&x, &id_x) in &layer.gates {
                let a = self.cluster(id_x);
                for t in x.controlled_positions() {
                    let y = x.flip(t).expect("controlled");
                    let z = x.strip(t).expect("controlled");
                    if let Some(&id_y) = layer.gates.get(&y) {
                        if x > y {
                            continue;
                        }
                        let b = self.cluster(id_y);
                        let (theta, new_loss) = merged_angle_and_loss(a, b);
                        out.push(Candidate {
                            layer: k,
                            kind: MergeKind::Neighbor,
                            sources: vec![x, y],
                            result: z,
                            theta,
                            estimate: estimator_update(self.f_est, a.loss(), b.loss(), new_loss),
                            cluster_ids: vec![id_x, id_y],
                            absorbed: Vec::new(),
                            new_loss,
                        });
                    } else if !layer.regions.any_overlap(&y) {
                        let absorbed = self.absorbed(k, &y);
                        debug_assert!(absorbed.iter().all(|s| s.theta <= ZERO_ANGLE));
                        let (theta, new_loss) = stripped_angle_and_loss(a, &absorbed);
                        out.push(Candidate {
                            layer: k,
                            kind: MergeKind::Strip,
                            sources: vec![x],
                            result: z,
                            theta,
                            estimate: estimator_update(self.f_est, a.loss(), 0.0, new_loss),
                            cluster_ids: vec![id_x],
                            absorbed,
                            new_loss,
                        });
                    }
                }
            }
        }
        out
    }

    fn is_live(&self, c: &Candidate) -> bool {
        let layer = &self.layers[c.layer];
        let sources_live = c
            .sources
            .iter()
            .zip(&c.cluster_ids)
            .all(|(p, id)| layer.gates.get(p) == Some(id));
        if !sources_live {
            return false;
        }
        match c.kind {
            MergeKind::Neighbor => true,
            MergeKind::Strip => {
                let t = c.sources[0]
                    .controlled_positions()
                    .find(|&t| c.sources[0].strip(t).ok() == Some(c.result))
                    .expect("strip position");
                !layer.regions.any_overlap(&c.sources[0].flip(t).expect("controlled"))
            }
        }
    }

    /// Applies `c` if it is still live and the updated estimate stays at or
    /// above `threshold`. Returns whether it was applied.
    pub fn try_accept(&mut self, c: &Candidate, threshold: f64) -> bool {
        if !self.is_live(c) {
            return false;
        }
        let a = self.cluster(c.cluster_ids[0]);
        let (l_b, merged) = match c.kind {
            MergeKind::Neighbor => {
                let b = self.cluster(c.cluster_ids[1]);
                (b.loss(), a.merge(b).expect("same layer"))
            }
            MergeKind::Strip => (0.0, a.strip_extend(&c.absorbed)),
        };
        debug_assert!((merged.loss() - c.new_loss).abs() <= 1e-15);
        let f_new = estimator_update(self.f_est, a.loss(), l_b, merged.loss());
        if f_new < threshold {
            return false;
        }
        let layer = &mut self.layers[c.layer];
        for (p, &id) in c.sources.iter().zip(&c.cluster_ids) {
            layer.gates.remove(p);
            layer.regions.remove(p);
            self.clusters[id] = None;
        }
        let theta = merged.theta();
        layer.gates.insert(c.result, self.clusters.len());
        layer.regions.insert(&c.result);
        self.clusters.push(Some(merged));
        self.f_est = f_new;
        self.log.push(AcceptedMerge {
            layer: c.layer,
            kind: c.kind,
            before: c.sources.clone(),
            after: c.result,
            theta,
            threshold,
            f_est: f_new,
        });
        true
    }

    /// One greedy sweep at `threshold`: generate, sort by decreasing estimate
    /// (ties by layer, then result pattern), and accept what still fits.
    /// Returns the number of accepted moves.
    pub fn greedy_pass(&mut self, threshold: f64) -> usize {
        let mut candidates = self.generate_candidates();
        sort_candidates(&mut candidates);
        candidates.iter().filter(|c| self.try_accept(c, threshold)).count()
    }
}

pub fn sort_candidates(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| {
        b.estimate
            .total_cmp(&a.estimate)
            .then(a.layer.cmp(&b.layer))
            .then(a.result.cmp(&b.result))
    });
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    /// The exact optimization the greedy stage started from.
    pub exact: ExactResult,
    pub optimized: Circuit,
    /// Final clusters per layer, keyed by gate pattern.
    pub clusters: Vec<Vec<(ControlPattern, Cluster)>>,
    pub f_est: f64,
    pub cost: CostReport,
    pub accepted_merges: Vec<AcceptedMerge>,
    /// Greedy passes run, threshold steps included.
    pub passes: usize,
}

/// Exact optimization followed by the threshold schedule and saturation passes.
pub fn optimize_approx(
    baseline: &BaselineCircuit,
    tree: &PreparationTree,
    options: &ApproxOptions,
) -> Result<ApproxResult> {
    options.validate()?;
    if let Some(layer) = options.only_layer {
        if layer >= tree.n() {
            return Err(ConfigError::LayerOutOfRange { layer, n: tree.n() }.into());
        }
    }
    let exact = optimize_exact(baseline, tree);
    let mut active = ActiveCircuit::new(baseline, tree, &exact.optimized);
    active.restrict_to_layer(options.only_layer);
    let mut passes = 0;
    for threshold in thresholds(options.f_min, options.intervals) {
        active.greedy_pass(threshold);
        passes += 1;
    }
    loop {
        passes += 1;
        if active.greedy_pass(options.f_min) == 0 {
            break;
        }
    }
    let optimized = active.to_circuit();
    let cost = CostReport::of(&optimized);
    Ok(ApproxResult {
        clusters: active.clusters(),
        f_est: active.f_est(),
        accepted_merges: active.log,
        exact,
        optimized,
        cost,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{overlap, simulate};
    use crate::state::SparseState;

    fn p(s: &str) -> ControlPattern {
        s.parse().unwrap()
    }

    #[test]
    fn threshold_schedule() {
        let t = thresholds(0.9, 5);
        let expect = [0.98, 0.96, 0.94, 0.92, 0.90];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(*t.last().unwrap(), 0.9);
    }

    #[test]
    fn options_are_validated() {
        assert!(ApproxOptions::new(0.0, 5).validate().is_err());
        assert!(ApproxOptions::new(1.1, 5).validate().is_err());
        assert!(ApproxOptions::new(0.9, 0).validate().is_err());
        assert!(ApproxOptions::new(1.0, 1).validate().is_ok());
    }

    /// Layer 3 holds `0e0` (θ_A) and `110` (θ_B); the rest of the state is a
    /// simple prefix chain so the pattern layout is fully controlled.
    fn not_allowed_fixture() -> (PreparationTree, BaselineCircuit, Circuit) {
        let psi = SparseState::from_entries(4, [(0b0000, 0.5), (0b0001, 0.3), (0b0100, 0.4), (0b1101, 0.6)]).unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let mut circuit = baseline.to_circuit();
        let l3 = &mut circuit.layers[3].gates;
        let t000 = l3.remove(&p("000")).unwrap();
        l3.remove(&p("010"));
        l3.insert(p("0e0"), t000);
        (tree, baseline, circuit)
    }

    #[test]
    fn strip_into_active_region_is_not_generated() {
        let (tree, baseline, circuit) = not_allowed_fixture();
        assert!(circuit.layer(3).gates().contains_key(&p("110")));
        let active = ActiveCircuit::new(&baseline, &tree, &circuit);
        let candidates = active.generate_candidates();
        assert!(!candidates
            .iter()
            .any(|c| c.layer == 3 && c.sources == vec![p("0e0")] && c.result == p("ee0")));
    }

    #[test]
    fn cascade_needs_a_second_pass() {
        // One supported prefix at layer 2: 11 → 1e is available at once,
        // 1e → ee only after the first move is applied.
        let psi = SparseState::from_entries(3, [(0b110, 0.6), (0b111, 0.8)]).unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let circuit = baseline.to_circuit();
        let mut active = ActiveCircuit::new(&baseline, &tree, &circuit);
        let first = active.generate_candidates();
        assert!(first
            .iter()
            .any(|c| c.layer == 2 && c.kind == MergeKind::Strip && c.result == p("1e")));
        assert!(!first.iter().any(|c| c.layer == 2 && c.result == p("ee")));
        assert!(active.greedy_pass(1.0) > 0);
        let second = active.generate_candidates();
        assert!(second
            .iter()
            .any(|c| c.layer == 2 && c.kind == MergeKind::Strip && c.result == p("ee")));
    }

    #[test]
    fn lossless_moves_pass_at_threshold_one() {
        let psi = SparseState::from_entries(3, [(0b110, 0.6), (0b111, 0.8)]).unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let mut active = ActiveCircuit::new(&baseline, &tree, &baseline.to_circuit());
        let candidates = active.generate_candidates();
        assert!(candidates.iter().all(|c| c.estimate == 1.0));
        let mut sorted = candidates.clone();
        sort_candidates(&mut sorted);
        let accepted = sorted.iter().filter(|c| active.try_accept(c, 1.0)).count();
        assert!(accepted > 0);
        assert_eq!(active.f_est(), 1.0);
    }

    #[test]
    fn neighbor_candidate_for_different_angles() {
        let psi = SparseState::from_entries(3, [(0b000, 0.5), (0b001, 0.2), (0b010, 0.3), (0b011, 0.6)]).unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let active = ActiveCircuit::new(&baseline, &tree, &baseline.to_circuit());
        let c = active
            .generate_candidates()
            .into_iter()
            .find(|c| c.layer == 2 && c.kind == MergeKind::Neighbor && c.result == p("0e"))
            .expect("00 + 01 candidate");
        let a = Cluster::singleton(2, 0, baseline.angle(2, 0).unwrap(), tree.amplitude(2, 0).powi(2));
        let b = Cluster::singleton(2, 1, baseline.angle(2, 1).unwrap(), tree.amplitude(2, 1).powi(2));
        assert!((c.theta - cluster_angle(a.x() + b.x(), a.y() + b.y())).abs() < 1e-15);
        assert!(c.estimate < 1.0);
    }

    #[test]
    fn stale_candidates_are_skipped() {
        let psi = SparseState::from_entries(3, [(0b000, 0.5), (0b001, 0.2), (0b010, 0.3), (0b011, 0.6)]).unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let mut active = ActiveCircuit::new(&baseline, &tree, &baseline.to_circuit());
        let candidates = active.generate_candidates();
        let shared: Vec<&Candidate> = candidates
            .iter()
            .filter(|c| c.layer == 2 && c.sources.contains(&p("00")))
            .collect();
        assert!(shared.len() >= 2);
        assert!(active.try_accept(shared[0], 0.0));
        assert!(!active.try_accept(shared[1], 0.0));
    }

    #[test]
    fn rejected_when_estimate_drops_below_threshold() {
        let psi = SparseState::from_entries(3, [(0b000, 0.5), (0b001, 0.2), (0b010, 0.3), (0b011, 0.6)]).unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let mut active = ActiveCircuit::new(&baseline, &tree, &baseline.to_circuit());
        let c = active
            .generate_candidates()
            .into_iter()
            .find(|c| c.estimate < 1.0)
            .unwrap();
        assert!(!active.try_accept(&c, c.estimate + 1e-9));
        assert!(active.try_accept(&c, c.estimate));
    }

    #[test]
    fn fmin_one_matches_exact() {
        let psi = SparseState::from_entries(
            6,
            [
                (3, 0.2),
                (17, 0.5),
                (18, 0.45),
                (40, 0.1),
                (41, 0.7),
                (63, 0.3),
                (62, 0.35),
            ],
        )
        .unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        for m in [1, 3, 20] {
            let r = optimize_approx(&baseline, &tree, &ApproxOptions::new(1.0, m)).unwrap();
            assert_eq!(r.optimized, r.exact.optimized);
            assert!(r.accepted_merges.is_empty());
            assert_eq!(r.f_est, 1.0);
        }
    }

    #[test]
    fn budget_and_consistency() {
        let psi = SparseState::from_entries(
            7,
            [
                (3, 0.2),
                (17, 0.5),
                (18, 0.45),
                (40, 0.1),
                (41, 0.7),
                (63, 0.3),
                (62, 0.35),
                (100, 0.05),
                (127, 0.4),
            ],
        )
        .unwrap();
        let tree = PreparationTree::build(&psi);
        let baseline = tree.baseline_angles();
        let r = optimize_approx(&baseline, &tree, &ApproxOptions::new(0.9, 10)).unwrap();
        assert!(r.f_est >= 0.9);
        let recomputed = 1.0
            - r.clusters
                .iter()
                .flatten()
                .map(|(_, c)| c.recompute_loss())
                .sum::<f64>();
        assert!((r.f_est - recomputed).abs() < 1e-10);
        assert!(r.cost.total <= r.exact.cost.total);
        r.optimized.check_disjoint().unwrap();
        let f = overlap(&psi, &simulate(&r.optimized)).unwrap();
        assert!(f > 0.8, "{f}");
    }
}
