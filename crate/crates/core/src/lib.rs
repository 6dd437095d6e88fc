//! Density-based compression of geospatial point datasets.
//!
//! Points are clustered with DBSCAN under the haversine great-circle metric,
//! using a ball tree for the `eps`-neighborhood queries, and each cluster is
//! replaced by its member nearest the cluster centroid. The surviving rows
//! keep every original attribute.
//!
//! ```
//! use spatial_reduce::{compress, io, DbscanParams};
//!
//! let csv = "lat,lon,city\n41.3700,2.1500,Barcelona\n41.3701,2.1501,Barcelona\n48.85,2.35,Paris\n";
//! let dataset = io::read_csv_from(csv.as_bytes(), "lat", "lon").unwrap();
//! let out = compress(&dataset, &DbscanParams::default()).unwrap();
//! assert_eq!(out.labels.num_clusters(), 2);
//! assert_eq!(out.reduced.records[1].attributes, ["Paris"]);
//! ```

pub mod cli;
pub mod dbscan;
pub mod geo;
pub mod index;
pub mod io;
pub mod reduce;

pub use dbscan::{group_clusters, run_dbscan, Cluster, ClusterLabels, DbscanError, DbscanParams, NOISE};
pub use geo::{great_circle_m, haversine_km, GeoPoint, RadianPoint, EARTH_RADIUS_KM};
pub use index::{IndexError, MetricIndex};
pub use io::Dataset;
pub use reduce::{compression_report, reduce_dataset, CompressionReport, ReducedDataset};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Dbscan(#[from] DbscanError),
    #[error(transparent)]
    Reduce(#[from] reduce::ReduceError),
}

/// Everything produced by one clustering + reduction pass.
#[derive(Debug, Clone)]
pub struct Compression {
    pub labels: ClusterLabels,
    pub reduced: ReducedDataset,
    pub report: CompressionReport,
}

/// Clusters `dataset` and reduces every cluster to its centermost row.
pub fn compress(dataset: &Dataset, params: &DbscanParams) -> Result<Compression, PipelineError> {
    let points = dataset.radian_points();
    let index = MetricIndex::build(&points)?;
    let labels = run_dbscan(&points, params, &index)?;
    let reduced = reduce_dataset(dataset, &labels)?;
    let report = compression_report(dataset.len(), reduced.len());
    Ok(Compression { labels, reduced, report })
}
