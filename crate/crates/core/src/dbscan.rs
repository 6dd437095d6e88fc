//! DBSCAN over geographic points with a physical `eps` in kilometers.
//!
//! A point is core when its closed `eps`-neighborhood, counting the point
//! itself, holds at least `min_samples` rows. Seeds are scanned in ascending
//! row order and clusters are numbered in order of discovery; a border point
//! reachable from several clusters belongs to the first one that expands to
//! it. With `min_samples = 1` every point is core and the clusters are the
//! connected components of the `eps`-threshold graph.

use rayon::prelude::*;

use crate::geo::{km_to_arc, RadianPoint};
use crate::index::MetricIndex;

/// Label given to rows that are neither core nor reachable from a core.
pub const NOISE: i64 = -1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DbscanError {
    #[error("eps_km must be finite and > 0, got {0}")]
    InvalidEps(f64),
    #[error("min_samples must be >= 1")]
    InvalidMinSamples,
    #[error("index does not match point set")]
    IndexMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    eps_km: f64,
    min_samples: usize,
}

impl DbscanParams {
    pub fn new(eps_km: f64, min_samples: usize) -> Result<Self, DbscanError> {
        if !(eps_km.is_finite() && eps_km > 0.0) {
            return Err(DbscanError::InvalidEps(eps_km));
        }
        if min_samples == 0 {
            return Err(DbscanError::InvalidMinSamples);
        }
        Ok(DbscanParams { eps_km, min_samples })
    }

    pub fn eps_km(&self) -> f64 {
        self.eps_km
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples
    }

    /// `eps` as radians of arc.
    pub fn eps_rad(&self) -> f64 {
        km_to_arc(self.eps_km)
    }
}

impl Default for DbscanParams {
    /// 1.5 km, `min_samples = 1`.
    fn default() -> Self {
        DbscanParams { eps_km: 1.5, min_samples: 1 }
    }
}

/// One label per input row; [`NOISE`] or a cluster id in `0..num_clusters`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<i64>,
    num_clusters: usize,
}

impl ClusterLabels {
    /// Wraps a raw label vector. Returns `None` unless every label is
    /// [`NOISE`] or lies in a contiguous `0..k` range with each id used.
    pub fn from_vec(labels: Vec<i64>) -> Option<Self> {
        let max = labels.iter().copied().max().unwrap_or(NOISE);
        let num_clusters = usize::try_from(max + 1).ok()?;
        let mut used = vec![false; num_clusters];
        for &l in &labels {
            match l {
                NOISE => {}
                l if l >= 0 => used[l as usize] = true,
                _ => return None,
            }
        }
        used.iter().all(|&u| u).then_some(ClusterLabels { labels, num_clusters })
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Member rows of every cluster, ordered by label.
    pub fn clusters(&self) -> Vec<Cluster> {
        group_clusters(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub label: usize,
    /// Ascending original row indices.
    pub member_rows: Vec<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.member_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_rows.is_empty()
    }
}

pub fn group_clusters(labels: &ClusterLabels) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = (0..labels.num_clusters)
        .map(|label| Cluster { label, member_rows: Vec::new() })
        .collect();
    for (row, &l) in labels.labels.iter().enumerate() {
        if l != NOISE {
            clusters[l as usize].member_rows.push(row);
        }
    }
    clusters
}

const UNVISITED: i64 = -2;

pub fn run_dbscan(
    points: &[RadianPoint],
    params: &DbscanParams,
    index: &MetricIndex,
) -> Result<ClusterLabels, DbscanError> {
    if index.points() != points {
        return Err(DbscanError::IndexMismatch);
    }
    let eps = params.eps_rad();
    let min_samples = params.min_samples;

    // With min_samples = 1 every point is trivially core.
    let core: Vec<bool> = if min_samples == 1 {
        vec![true; points.len()]
    } else {
        points
            .par_iter()
            .map(|&p| index.count_within(p, eps) >= min_samples)
            .collect()
    };

    let mut labels = vec![UNVISITED; points.len()];
    let mut next_label = 0i64;
    let mut frontier = std::collections::VecDeque::new();
    let mut neighbors = Vec::new();

    for seed in 0..points.len() {
        if labels[seed] != UNVISITED {
            continue;
        }
        if !core[seed] {
            labels[seed] = NOISE;
            continue;
        }
        let label = next_label;
        next_label += 1;
        labels[seed] = label;
        frontier.push_back(seed);

        while let Some(row) = frontier.pop_front() {
            if !core[row] {
                continue;
            }
            index.radius_query_into(points[row], eps, &mut neighbors);
            for &n in &neighbors {
                match labels[n] {
                    UNVISITED => {
                        labels[n] = label;
                        frontier.push_back(n);
                    }
                    // Noise reached from a core is a border point.
                    NOISE => labels[n] = label,
                    _ => {}
                }
            }
        }
    }

    Ok(ClusterLabels { labels, num_clusters: next_label as usize })
}
