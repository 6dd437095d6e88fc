//! Command-line front end and SVG scatter output.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::dbscan::DbscanParams;
use crate::io::{self, Dataset, ReadError, WriteError};
use crate::reduce::ReducedDataset;
use crate::{compress, PipelineError};

/// Reduce a CSV of latitude/longitude points to one representative point per
/// DBSCAN cluster.
#[derive(Debug, Clone, Parser)]
#[command(name = "spatial-reduce", version)]
pub struct CliConfig {
    /// Input CSV with a header row.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Destination CSV for the reduced points.
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Neighborhood radius in kilometers.
    #[arg(long, value_name = "F", default_value_t = 1.5, value_parser = parse_eps_km)]
    pub eps_km: f64,
    /// Minimum neighborhood size, including the point itself, for a core point.
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_samples: u64,
    #[arg(long, value_name = "S", default_value = io::DEFAULT_LAT_COL)]
    pub lat_col: String,
    #[arg(long, value_name = "S", default_value = io::DEFAULT_LON_COL)]
    pub lon_col: String,
    /// Also write a before/after scatter plot as SVG.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
    /// Do not print the summary line.
    #[arg(long)]
    pub quiet: bool,
}

fn parse_eps_km(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a finite distance > 0, got {s}"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Write(#[from] WriteError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot write plot {}: {source}", path.display())]
    Plot { path: PathBuf, source: std::io::Error },
    #[error("output {} would overwrite the input", path.display())]
    OutputIsInput { path: PathBuf },
}

/// Counts reported after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub clusters: usize,
    pub original: usize,
    pub reduced: usize,
    pub compression_pct: f64,
    pub noise: usize,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "clusters={} original={} reduced={} compression={:.1}% noise={}",
            self.clusters, self.original, self.reduced, self.compression_pct, self.noise
        )
    }
}

pub fn run(config: &CliConfig) -> Result<Summary, RunError> {
    if same_file(&config.input, &config.output) {
        return Err(RunError::OutputIsInput { path: config.output.clone() });
    }
    let min_samples = usize::try_from(config.min_samples).unwrap_or(usize::MAX);
    let params = DbscanParams::new(config.eps_km, min_samples).map_err(PipelineError::from)?;

    let dataset = io::read_csv(&config.input, &config.lat_col, &config.lon_col)?;
    let result = compress(&dataset, &params)?;
    io::write_csv(&result.reduced, dataset.schema(), &config.output)?;
    if let Some(path) = &config.plot {
        emit_scatter_svg(&dataset, &result.reduced, path)
            .map_err(|source| RunError::Plot { path: path.clone(), source })?;
    }

    Ok(Summary {
        clusters: result.labels.num_clusters(),
        original: result.report.original_count,
        reduced: result.report.reduced_count,
        compression_pct: result.report.compression_pct,
        noise: result.reduced.noise_count,
    })
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 0.05;

pub fn emit_scatter_svg(original: &Dataset, reduced: &ReducedDataset, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, render_scatter_svg(original, reduced))
}

/// Equirectangular scatter: x follows longitude, y follows negated latitude,
/// scaled to the original points' bounding box inside a 5% margin. Original
/// points are drawn first as small dark dots, reduced points on top as larger
/// light-green dots.
pub fn render_scatter_svg(original: &Dataset, reduced: &ReducedDataset) -> String {
    let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in original.records() {
        lon_min = lon_min.min(r.point.lon_deg);
        lon_max = lon_max.max(r.point.lon_deg);
        lat_min = lat_min.min(r.point.lat_deg);
        lat_max = lat_max.max(r.point.lat_deg);
    }
    let axis = |v: f64, lo: f64, hi: f64, extent: f64| {
        let inner = extent * (1.0 - 2.0 * MARGIN);
        if hi > lo {
            extent * MARGIN + (v - lo) / (hi - lo) * inner
        } else {
            extent / 2.0
        }
    };
    let project = |lat: f64, lon: f64| {
        (axis(lon, lon_min, lon_max, WIDTH), axis(-lat, -lat_max, -lat_min, HEIGHT))
    };

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"1200\" height=\"600\" viewBox=\"0 0 1200 600\">\n",
    );
    svg.push_str("<rect x=\"0\" y=\"0\" width=\"1200\" height=\"600\" fill=\"#ffffff\"/>\n");
    svg.push_str("<g id=\"original\" fill=\"#1a1a1a\" fill-opacity=\"0.6\">\n");
    for r in original.records() {
        let (x, y) = project(r.point.lat_deg, r.point.lon_deg);
        let _ = writeln!(svg, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"1.5\"/>");
    }
    svg.push_str("</g>\n");
    svg.push_str("<g id=\"reduced\" fill=\"#90ee90\" stroke=\"#2e7d32\" stroke-width=\"0.75\">\n");
    for r in &reduced.records {
        let (x, y) = project(r.point.lat_deg, r.point.lon_deg);
        let _ = writeln!(svg, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\"/>");
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}
