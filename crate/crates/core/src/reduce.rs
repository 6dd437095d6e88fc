//! Reduction of each cluster to its centermost member.
//!
//! The centroid is the plain arithmetic mean of member latitudes and
//! longitudes in degree space. For a non-convex cluster it can land outside
//! the cluster; the representative is still the member nearest to it by
//! great-circle distance. Near the poles or across the antimeridian a planar
//! mean is a poor center, which matters little for clusters a few km wide.
//!
//! Original attributes are recovered through the carried row index, never by
//! matching coordinates.

use rayon::prelude::*;

use crate::dbscan::{Cluster, ClusterLabels};
use crate::geo::{great_circle_m, GeoPoint};
use crate::io::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReduceError {
    #[error("cannot take the centroid of an empty cluster")]
    EmptyCluster,
    #[error("{labels} labels for {rows} rows")]
    LabelMismatch { labels: usize, rows: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRecord {
    pub cluster_label: usize,
    pub cluster_size: usize,
    pub row_index: usize,
    pub point: GeoPoint,
    pub attributes: Vec<String>,
}

/// One record per cluster, ordered by cluster label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReducedDataset {
    pub records: Vec<ReducedRecord>,
    /// Rows dropped because they were labelled noise.
    pub noise_count: usize,
}

impl ReducedDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionReport {
    pub original_count: usize,
    pub reduced_count: usize,
    /// `100 · (1 − reduced / original)`.
    pub compression_pct: f64,
}

impl CompressionReport {
    /// Percentage at one decimal place, e.g. `92.2`.
    pub fn pct_display(&self) -> String {
        format!("{:.1}", self.compression_pct)
    }
}

pub fn compression_report(original_count: usize, reduced_count: usize) -> CompressionReport {
    let compression_pct = if original_count == 0 {
        0.0
    } else {
        100.0 * (1.0 - reduced_count as f64 / original_count as f64)
    };
    CompressionReport { original_count, reduced_count, compression_pct }
}

pub fn centroid(points: &[GeoPoint]) -> Result<GeoPoint, ReduceError> {
    if points.is_empty() {
        return Err(ReduceError::EmptyCluster);
    }
    let n = points.len() as f64;
    let (lat, lon) = points
        .iter()
        .fold((0.0, 0.0), |(lat, lon), p| (lat + p.lat_deg, lon + p.lon_deg));
    Ok(GeoPoint { lat_deg: lat / n, lon_deg: lon / n })
}

/// Row of the member nearest the cluster centroid; ties go to the lowest
/// row.
///
/// # Panics
///
/// If the cluster has no members.
pub fn centermost_point(cluster: &Cluster, dataset: &Dataset) -> usize {
    let members: Vec<GeoPoint> = cluster.member_rows.iter().map(|&r| dataset.point(r)).collect();
    let center = centroid(&members).expect("cluster has members");
    let mut best = (cluster.member_rows[0], f64::INFINITY);
    for (&row, &p) in cluster.member_rows.iter().zip(&members) {
        let d = great_circle_m(p, center);
        if d < best.1 {
            best = (row, d);
        }
    }
    best.0
}

pub fn reduce_dataset(dataset: &Dataset, labels: &ClusterLabels) -> Result<ReducedDataset, ReduceError> {
    if labels.len() != dataset.len() {
        return Err(ReduceError::LabelMismatch { labels: labels.len(), rows: dataset.len() });
    }
    let records = labels
        .clusters()
        .par_iter()
        .map(|cluster| {
            let row = centermost_point(cluster, dataset);
            let source = &dataset.records()[row];
            ReducedRecord {
                cluster_label: cluster.label,
                cluster_size: cluster.len(),
                row_index: row,
                point: source.point,
                attributes: source.attributes.clone(),
            }
        })
        .collect();
    Ok(ReducedDataset { records, noise_count: labels.noise_count() })
}
