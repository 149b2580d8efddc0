//! Clusters: the baseline prefixes absorbed into one active gate.
//!
//! For a cluster `C` with merged angle `θ_C`, the loss is
//! `L_C = Σ_{x∈C} (1 − cos((θ_x − θ_C)/2)) · P_x`. It is minimized by
//! `θ_C = 2·arg(X_C + iY_C)` with `X_C = Σ P_x cos(θ_x/2)` and
//! `Y_C = Σ P_x sin(θ_x/2)`.

use serde::Serialize;

use crate::error::ConfigError;

/// One absorbed baseline prefix with its baseline angle and probability weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Source {
    pub prefix: u64,
    pub theta: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    layer: usize,
    sources: Vec<Source>,
    theta: f64,
    x: f64,
    y: f64,
    loss: f64,
}

/// `θ_C = 2·atan2(Y, X)`. Panics when both sums vanish.
pub fn cluster_angle(x: f64, y: f64) -> f64 {
    assert!(x != 0.0 || y != 0.0, "cluster angle of an empty cluster");
    2.0 * y.atan2(x)
}

/// `1 − cos((a − b)/2)`, written as `2·sin²((a − b)/4)` to stay accurate and
/// nonnegative for nearly equal angles.
#[inline]
pub fn angle_loss(a: f64, b: f64) -> f64 {
    let s = ((a - b) / 4.0).sin();
    2.0 * s * s
}

/// `Σ (1 − cos((θ_x − θ)/2)) · P_x` over the given sources.
pub fn cluster_loss<'a>(sources: impl IntoIterator<Item = &'a Source>, theta: f64) -> f64 {
    sources.into_iter().map(|s| angle_loss(s.theta, theta) * s.prob).sum()
}

fn sums<'a>(sources: impl IntoIterator<Item = &'a Source>) -> (f64, f64) {
    sources.into_iter().fold((0.0, 0.0), |(x, y), s| {
        let (sin, cos) = (s.theta / 2.0).sin_cos();
        (x + s.prob * cos, y + s.prob * sin)
    })
}

impl Cluster {
    /// A cluster whose gate keeps the given angle (used for gates coming out of
    /// the exact optimizer). Sources with zero weight are dropped.
    pub fn with_angle(layer: usize, sources: Vec<Source>, theta: f64) -> Self {
        let sources: Vec<Source> = sources.into_iter().filter(|s| s.prob > 0.0).collect();
        let (x, y) = sums(&sources);
        let loss = cluster_loss(&sources, theta);
        Cluster {
            layer,
            sources,
            theta,
            x,
            y,
            loss,
        }
    }

    /// A cluster at its loss-minimizing angle.
    pub fn optimal(layer: usize, sources: Vec<Source>) -> Self {
        let sources: Vec<Source> = sources.into_iter().filter(|s| s.prob > 0.0).collect();
        let (x, y) = sums(&sources);
        let theta = cluster_angle(x, y);
        let loss = cluster_loss(&sources, theta);
        Cluster {
            layer,
            sources,
            theta,
            x,
            y,
            loss,
        }
    }

    pub fn singleton(layer: usize, prefix: u64, theta: f64, prob: f64) -> Self {
        Cluster::with_angle(layer, vec![Source { prefix, theta, prob }], theta)
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn weight(&self) -> f64 {
        self.sources.iter().map(|s| s.prob).sum()
    }

    /// Loss recomputed from the sources at the current angle.
    pub fn recompute_loss(&self) -> f64 {
        cluster_loss(&self.sources, self.theta)
    }

    /// Loss of the cluster if its gate used angle `theta` instead.
    pub fn loss_at(&self, theta: f64) -> f64 {
        cluster_loss(&self.sources, theta)
    }

    /// Union of two clusters of the same layer, at the optimal merged angle.
    pub fn merge(&self, other: &Cluster) -> Result<Cluster, ConfigError> {
        if self.layer != other.layer {
            return Err(ConfigError::CrossLayer(self.layer, other.layer));
        }
        let (theta, loss) = merged_angle_and_loss(self, other);
        let mut sources = self.sources.clone();
        sources.extend_from_slice(&other.sources);
        Ok(Cluster {
            layer: self.layer,
            sources,
            theta,
            x: self.x + other.x,
            y: self.y + other.y,
            loss,
        })
    }

    /// Adds the sibling region swallowed by a control strip. Its prefixes
    /// carry baseline angle 0; those with zero weight leave the cluster as is.
    pub fn strip_extend(&self, absorbed: &[Source]) -> Cluster {
        let (theta, loss) = stripped_angle_and_loss(self, absorbed);
        let mut out = self.clone();
        out.sources.extend(
            absorbed
                .iter()
                .filter(|s| s.prob > 0.0)
                .map(|s| Source { theta: 0.0, ..*s }),
        );
        let (x, y) = sums(&out.sources);
        out.x = x;
        out.y = y;
        out.theta = theta;
        out.loss = loss;
        out
    }
}

/// Angle and loss of `a ∪ b` without building the union.
pub(crate) fn merged_angle_and_loss(a: &Cluster, b: &Cluster) -> (f64, f64) {
    let theta = cluster_angle(a.x + b.x, a.y + b.y);
    let loss = cluster_loss(a.sources.iter().chain(&b.sources), theta);
    (theta, loss)
}

/// Angle and loss after a strip absorbing `absorbed` (baseline angle 0).
pub(crate) fn stripped_angle_and_loss(a: &Cluster, absorbed: &[Source]) -> (f64, f64) {
    let extra: f64 = absorbed.iter().map(|s| s.prob).sum();
    if extra <= 0.0 {
        return (a.theta, a.loss);
    }
    let theta = cluster_angle(a.x + extra, a.y);
    let loss = cluster_loss(&a.sources, theta) + extra * angle_loss(0.0, theta);
    (theta, loss)
}

/// `f' = f + L_A + L_B − L_C`; pass `l_b = 0` for a strip.
pub fn estimator_update(f_est: f64, l_a: f64, l_b: f64, l_c: f64) -> f64 {
    f_est + l_a + l_b - l_c
}
