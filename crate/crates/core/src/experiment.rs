//! Random instances, the end-to-end pipeline and the CSV experiments.
//!
//! Every instance is seeded from `(master seed, point index, repetition)`,
//! so results do not depend on scheduling and the CSV output is
//! byte-identical for a fixed configuration.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{optimize_approx, ApproxOptions};
use crate::bound::lower_bound_of;
use crate::cost::{singles_cost, singles_total, ucr_total};
use crate::error::{ConfigError, Result};
use crate::exact::optimize_exact;
use crate::simulator::{overlap, simulate};
use crate::state::{PreparationTree, SparseState};

/// Version tag written into the CSV header.
pub const CSV_VERSION: u32 = 1;

/// `d = round(D · 2^n)`, at least 1 and at most `2^n`.
pub fn support_size(n: usize, sparsity: f64) -> Result<u64, ConfigError> {
    if n == 0 || n > 63 || !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(ConfigError::Sparsity { sparsity, n });
    }
    let d = (sparsity * (1u64 << n) as f64).round() as u64;
    if d == 0 {
        return Err(ConfigError::Sparsity { sparsity, n });
    }
    Ok(d)
}

/// `d` distinct indices drawn uniformly, amplitudes i.i.d. uniform on `(0, 1]`,
/// then normalized.
pub fn random_instance(n: usize, d: u64, seed: u64) -> Result<SparseState> {
    if n == 0 || n > 63 || d == 0 || d > 1u64 << n {
        return Err(ConfigError::SupportSize { d, n }.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = index::sample(&mut rng, 1usize << n, d as usize);
    let entries: Vec<(u64, f64)> = indices
        .into_iter()
        .map(|i| (i as u64, 1.0 - rng.random::<f64>()))
        .collect();
    Ok(SparseState::from_entries(n, entries)?)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-instance seed derived from the master seed and the job coordinates.
pub fn instance_seed(master: u64, point: usize, repetition: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point as u64) ^ repetition as u64)
}

/// Costs and overlaps of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub seed: Option<u64>,
    pub n: usize,
    pub d: usize,
    /// Baseline gates, each decomposed on its own.
    pub cnots_unmerged_singles: u64,
    /// Exactly optimized gates, each decomposed on its own.
    pub cnots_exact_singles: u64,
    /// Exact optimizer with the per-layer singles/UCR decision.
    pub cnots_after_exact: u64,
    /// One UCR per nonempty baseline layer.
    pub cnots_ucr_only: u64,
    pub cnots_after_approx: u64,
    pub f_est: f64,
    pub f_true: f64,
    pub f_lb: f64,
    pub wall_time_s: f64,
}

/// Exact costs only; the approximate fields are copies of the exact ones and
/// the overlaps are 1.
pub fn run_exact_pipeline(state: &SparseState) -> ResultRecord {
    let start = Instant::now();
    let tree = PreparationTree::build(state);
    let baseline = tree.baseline_angles();
    let unmerged = baseline.to_circuit();
    let exact = optimize_exact(&baseline, &tree);
    ResultRecord {
        seed: None,
        n: state.n(),
        d: state.support_size(),
        cnots_unmerged_singles: singles_total(&unmerged),
        cnots_exact_singles: exact.optimized.layers().iter().map(singles_cost).sum(),
        cnots_after_exact: exact.cost.total,
        cnots_ucr_only: ucr_total(&unmerged),
        cnots_after_approx: exact.cost.total,
        f_est: 1.0,
        f_true: 1.0,
        f_lb: 1.0,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Exact and approximate optimization, lower bound and simulated overlap.
pub fn run_pipeline(state: &SparseState, options: &ApproxOptions) -> Result<ResultRecord> {
    let start = Instant::now();
    let tree = PreparationTree::build(state);
    let baseline = tree.baseline_angles();
    let unmerged = baseline.to_circuit();
    let approx = optimize_approx(&baseline, &tree, options)?;
    let f_lb = lower_bound_of(&approx.clusters, &tree, &baseline, &approx.optimized);
    let f_true = overlap(state, &simulate(&approx.optimized))?;
    Ok(ResultRecord {
        seed: None,
        n: state.n(),
        d: state.support_size(),
        cnots_unmerged_singles: singles_total(&unmerged),
        cnots_exact_singles: approx.exact.optimized.layers().iter().map(singles_cost).sum(),
        cnots_after_exact: approx.exact.cost.total,
        cnots_ucr_only: ucr_total(&unmerged),
        cnots_after_approx: approx.cost.total,
        f_est: approx.f_est,
        f_true,
        f_lb,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    MergeRatio,
    CostComparison,
    EstimatorGap,
    ApproxVsExact,
    MSweep,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::MergeRatio,
        ExperimentId::CostComparison,
        ExperimentId::EstimatorGap,
        ExperimentId::ApproxVsExact,
        ExperimentId::MSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::MergeRatio => "merge_ratio",
            ExperimentId::CostComparison => "cost_comparison",
            ExperimentId::EstimatorGap => "estimator_gap",
            ExperimentId::ApproxVsExact => "approx_vs_exact",
            ExperimentId::MSweep => "m_sweep",
        }
    }

    fn needs_approx(self) -> bool {
        matches!(
            self,
            ExperimentId::EstimatorGap | ExperimentId::ApproxVsExact | ExperimentId::MSweep
        )
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub n: usize,
    pub sparsities: Vec<f64>,
    pub f_mins: Vec<f64>,
    pub intervals: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Sweeps matching each experiment's reference setup.
    pub fn defaults(id: ExperimentId) -> Self {
        let (n, sparsities, f_mins, intervals) = match id {
            ExperimentId::MergeRatio | ExperimentId::CostComparison => {
                (20, vec![1e-5, 1e-4, 1e-3, 1e-2], vec![1.0], vec![1])
            }
            ExperimentId::EstimatorGap => (15, vec![1e-3, 1e-2], vec![0.80, 0.85, 0.90, 0.95, 0.99], vec![20]),
            ExperimentId::ApproxVsExact => (20, log_space(1e-5, 1e-3, 10), vec![0.90, 0.95, 0.99], vec![20]),
            ExperimentId::MSweep => (20, vec![5e-5], vec![0.95], vec![1, 2, 5, 10, 20, 30, 40]),
        };
        ExperimentConfig {
            id,
            n,
            sparsities,
            f_mins,
            intervals,
            repetitions: 20,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.repetitions == 0 {
            return Err(ConfigError::NoRepetitions);
        }
        if self.sparsities.is_empty() {
            return Err(ConfigError::EmptySweep("sparsity"));
        }
        for &s in &self.sparsities {
            support_size(self.n, s)?;
        }
        if self.id.needs_approx() {
            if self.f_mins.is_empty() {
                return Err(ConfigError::EmptySweep("fmin"));
            }
            if self.intervals.is_empty() {
                return Err(ConfigError::EmptySweep("intervals"));
            }
            for &f in &self.f_mins {
                for &m in &self.intervals {
                    ApproxOptions::new(f, m).validate()?;
                }
            }
        }
        Ok(())
    }

    /// Parameter points in output order.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &sparsity in &self.sparsities {
            if !self.id.needs_approx() {
                out.push(Point {
                    sparsity,
                    f_min: None,
                    intervals: None,
                });
                continue;
            }
            for &f in &self.f_mins {
                for &m in &self.intervals {
                    out.push(Point {
                        sparsity,
                        f_min: Some(f),
                        intervals: Some(m),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub sparsity: f64,
    pub f_min: Option<f64>,
    pub intervals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: Point,
    pub d: u64,
    pub records: Vec<ResultRecord>,
}

/// Runs every repetition of every point, in parallel, in a fixed order.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<PointResult>> {
    config.validate()?;
    let points = config.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.repetitions).map(move |r| (p, r)))
        .collect();
    let records: Vec<ResultRecord> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let point = points[p];
            let seed = instance_seed(config.seed, p, r);
            let d = support_size(config.n, point.sparsity)?;
            let state = random_instance(config.n, d, seed)?;
            let mut record = match (point.f_min, point.intervals) {
                (Some(f), Some(m)) => run_pipeline(&state, &ApproxOptions::new(f, m))?,
                _ => run_exact_pipeline(&state),
            };
            record.seed = Some(seed);
            Ok(record)
        })
        .collect::<Result<_>>()?;
    let mut records = records.into_iter();
    Ok(points
        .into_iter()
        .map(|point| PointResult {
            point,
            d: support_size(config.n, point.sparsity).expect("validated"),
            records: records.by_ref().take(config.repetitions).collect(),
        })
        .collect())
}

/// `a / b`, or 1 when both costs are zero.
pub fn cost_ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

type Metric = (&'static str, fn(&ResultRecord) -> f64);

fn metrics(id: ExperimentId) -> Vec<Metric> {
    match id {
        ExperimentId::MergeRatio => vec![
            ("ratio_exact_singles_to_unmerged", |r| {
                cost_ratio(r.cnots_exact_singles, r.cnots_unmerged_singles)
            }),
            ("cnots_unmerged_singles", |r| r.cnots_unmerged_singles as f64),
            ("cnots_exact_singles", |r| r.cnots_exact_singles as f64),
        ],
        ExperimentId::CostComparison => vec![
            ("cnots_ucr_only", |r| r.cnots_ucr_only as f64),
            ("cnots_exact_singles", |r| r.cnots_exact_singles as f64),
            ("cnots_after_exact", |r| r.cnots_after_exact as f64),
            ("ratio_exact_to_ucr", |r| {
                cost_ratio(r.cnots_after_exact, r.cnots_ucr_only)
            }),
        ],
        ExperimentId::EstimatorGap => vec![
            ("f_est_minus_f_true", |r| r.f_est - r.f_true),
            ("f_true_minus_f_lb", |r| r.f_true - r.f_lb),
            ("f_est_le_f_true", |r| if r.f_est <= r.f_true { 1.0 } else { 0.0 }),
            ("f_true", |r| r.f_true),
        ],
        ExperimentId::ApproxVsExact | ExperimentId::MSweep => vec![
            ("ratio_approx_to_exact", |r| {
                cost_ratio(r.cnots_after_approx, r.cnots_after_exact)
            }),
            ("cnots_after_exact", |r| r.cnots_after_exact as f64),
            ("cnots_after_approx", |r| r.cnots_after_approx as f64),
            ("f_true", |r| r.f_true),
        ],
    }
}

/// Mean, minimum and maximum of `values`.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

pub const CSV_COLUMNS: &str = "experiment,n,sparsity,d,fmin,intervals,reps,metric,mean,min,max";

/// One row per (point, metric) with mean/min/max across repetitions.
pub fn to_csv(config: &ExperimentConfig, results: &[PointResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# grsparse experiment csv v{CSV_VERSION}; experiment={}; seed={}; reps={}; \
         amplitudes=uniform(0,1] then normalized; support=uniform without replacement; \
         columns: {CSV_COLUMNS}",
        config.id, config.seed, config.repetitions
    )
    .unwrap();
    writeln!(out, "{CSV_COLUMNS}").unwrap();
    let opt = |v: Option<String>| v.unwrap_or_default();
    for result in results {
        for (name, metric) in metrics(config.id) {
            let values: Vec<f64> = result.records.iter().map(metric).collect();
            let (mean, min, max) = summarize(&values);
            writeln!(
                out,
                "{},{},{:.11e},{},{},{},{},{},{:.11e},{:.11e},{:.11e}",
                config.id,
                config.n,
                result.point.sparsity,
                result.d,
                opt(result.point.f_min.map(|f| format!("{f}"))),
                opt(result.point.intervals.map(|m| m.to_string())),
                result.records.len(),
                name,
                mean,
                min,
                max
            )
            .unwrap();
        }
    }
    out
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<String> {
    Ok(to_csv(config, &run_records(config)?))
}
